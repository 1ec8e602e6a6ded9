#pragma once

// Efficiency, the harmonic-mean portability score, the exhaustive oracle and
// comparison reports.

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "prefixtune/backends.hpp"
#include "prefixtune/bayes.hpp"
#include "prefixtune/search_space.hpp"

namespace prefixtune {

struct ExhaustiveResult {
  std::vector<Evaluation> evaluations;  // enumeration order, one per candidate
  Evaluation best;
};

// Throws NoFeasibleConfigError when no candidate evaluates ok.
ExhaustiveResult exhaustive_search(const SearchSpace& space, Backend& backend);

// best_time / achieved_time. Throws ValidationError outside the domain.
double efficiency(double achieved_time, double best_time);

// |C| / sum(1/e_i). Throws ValidationError for an empty list or e outside (0,1].
double phi(const std::vector<double>& efficiencies);

struct Throughput {
  double value = 0.0;
  std::string_view unit;
};

// seconds > 0; MRows/s for tridiagonal, MData/s for scan, GFlops/s for FFT.
Throughput throughput(Algorithm a, long long n, long long batches, double seconds);

// One tuner's answer for one size.
struct MethodOutcome {
  std::optional<Evaluation> chosen;  // empty or non-ok means nothing usable
  int evaluations = 0;
};

struct SizeEntry {
  long long n_size = 0;
  double best_time = 0.0;  // the method's time; 0 when it produced nothing
  std::optional<Candidate> chosen_config;
  double efficiency = 0.0;  // 0 when the method produced nothing
  double oracle_time = 0.0;
};

struct MethodReport {
  std::string method;
  Algorithm algorithm = Algorithm::fft;
  std::vector<SizeEntry> sizes;
  double phi = 0.0;  // 0 if any size has zero efficiency
  int evaluations_used = 0;
};

// Sizes missing from either map are a ValidationError.
MethodReport build_report(std::string method, Algorithm a,
                          const std::map<long long, MethodOutcome>& outcomes,
                          const std::map<long long, ExhaustiveResult>& oracle);

nlohmann::json to_json(const MethodReport& report);
nlohmann::json compare_json(const std::vector<MethodReport>& reports);
// Aligned text: per-size rows then one summary row per method.
std::string compare_table(const std::vector<MethodReport>& reports);

struct CompareOptions {
  int budget = 40;
  int window = kDefaultWindow;
  std::uint64_t seed = 0;  // every size's BO run uses this seed
};

// Analytical, BO and exhaustive over the same spaces and backend, in that
// order. Multi-kernel FFT sizes use plan_large_fft for the analytical row.
std::vector<MethodReport> run_compare(Algorithm a, const std::vector<long long>& sizes,
                                      Backend& backend, const ArchDescriptor& arch,
                                      const CompareOptions& options = {});

}  // namespace prefixtune
