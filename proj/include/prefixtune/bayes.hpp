#pragma once

// Bayesian-optimisation search over a SearchSpace.

#include <climits>
#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "prefixtune/backends.hpp"
#include "prefixtune/gp.hpp"
#include "prefixtune/search_space.hpp"

namespace prefixtune {

enum class StopReason { window_stalled, budget_exhausted, space_exhausted };
std::string_view to_string(StopReason r);

struct TuningRun {
  Algorithm algorithm = Algorithm::fft;
  long long n_size = 0;
  std::vector<Evaluation> history;
  std::optional<Evaluation> best;  // empty when nothing evaluated ok
  StopReason stop_reason = StopReason::budget_exhausted;
  std::uint64_t seed = 0;
  int evaluations_used = 0;

  // best.time after each evaluation (penalty values never count).
  std::vector<double> best_trajectory() const;
};

nlohmann::json to_json(const TuningRun& run);

// Penalty charged to a non-ok evaluation given the ok times seen so far.
inline constexpr double kPenaltyWithoutData = 60e6;  // one minute in microseconds
double penalty_time(const std::vector<Evaluation>& history);

// Surrogate over encoded candidates, trained on standardised log times.
struct SurrogateModel {
  GaussianProcess gp;
  double offset = 0.0;  // mean of log times
  double scale = 1.0;   // standard deviation of log times

  double to_model(double time) const { return (std::log(time) - offset) / scale; }
  double from_model(double value) const { return std::exp(value * scale + offset); }
  // Mean and variance in model units.
  GpPrediction predict(const Candidate& c) const;
  // Predicted time in the backend's unit.
  double predict_time(const Candidate& c) const { return from_model(predict(c).mean); }
};

// Needs at least two ok evaluations with distinct configs; penalised points
// are part of the training set. Throws UntrainableModelError otherwise.
SurrogateModel fit_surrogate(const std::vector<Evaluation>& history);

// Expected improvement for minimisation.
double expected_improvement(double mean, double stddev, double best);
double expected_improvement(const SurrogateModel& model, const Candidate& c, double best_time);

inline constexpr int kDefaultWindow = 5;
inline constexpr int kNoWindow = INT_MAX;

std::size_t initial_sample_size(std::size_t space_size, int budget);

// Throws NoFeasibleConfigError for an empty space and ValidationError for a
// budget below one or a window below one.
TuningRun tune_bo(const SearchSpace& space, Backend& backend, int budget, int window,
                  std::uint64_t seed);

}  // namespace prefixtune
