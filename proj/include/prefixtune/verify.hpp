#pragma once

// Randomised comparison of every kernel against its oracle.

#include <cstdint>
#include <string>
#include <vector>

namespace prefixtune {

struct KernelCheck {
  std::string name;
  bool passed = false;
  double worst = 0.0;  // largest error seen (0 for exact checks)
  int trials = 0;
  std::string detail;  // first failure, if any
};

struct VerifyOptions {
  std::uint64_t seed = 1;
  int scan_trials = 100;
  int tridiagonal_trials = 50;
  long long scan_max_n = 4096;
  long long tridiagonal_max_n = 1024;
  long long fft_max_n = 4096;
  double tridiagonal_tolerance = 1e-6;
  double fft_tolerance = 1e-3;
  double round_trip_tolerance = 1e-4;
};

std::vector<KernelCheck> verify_kernels(const VerifyOptions& options = {});

}  // namespace prefixtune
