#include "prefixtune/algorithm.hpp"

#include "prefixtune/errors.hpp"

namespace prefixtune {

std::string_view to_string(Algorithm a) {
  switch (a) {
    case Algorithm::scan_lf: return "scan_lf";
    case Algorithm::scan_ks: return "scan_ks";
    case Algorithm::ts_cr: return "ts_cr";
    case Algorithm::ts_pcr: return "ts_pcr";
    case Algorithm::ts_wm: return "ts_wm";
    case Algorithm::ts_lf: return "ts_lf";
    case Algorithm::fft: return "fft";
  }
  return "unknown";
}

Algorithm parse_algorithm(std::string_view name) {
  for (auto a : kAllAlgorithms)
    if (to_string(a) == name) return a;
  throw ValidationError("unknown algorithm: " + std::string(name));
}

Family family_of(Algorithm a) {
  switch (a) {
    case Algorithm::scan_lf:
    case Algorithm::scan_ks: return Family::scan;
    case Algorithm::fft: return Family::fft;
    default: return Family::tridiagonal;
  }
}

bool is_power_of_two(long long v) { return v > 0 && (v & (v - 1)) == 0; }

int log2_ceil(long long v) {
  int k = 0;
  while ((1LL << k) < v) ++k;
  return k;
}

}  // namespace prefixtune
