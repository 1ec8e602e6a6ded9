#include "prefixtune/bayes.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <random>
#include <set>

#include "prefixtune/errors.hpp"

namespace prefixtune {

std::string_view to_string(StopReason r) {
  switch (r) {
    case StopReason::window_stalled: return "window_stalled";
    case StopReason::budget_exhausted: return "budget_exhausted";
    case StopReason::space_exhausted: return "space_exhausted";
  }
  return "?";
}

std::vector<double> TuningRun::best_trajectory() const {
  std::vector<double> out;
  double best_time = std::numeric_limits<double>::infinity();
  for (const auto& e : history) {
    if (e.status == EvalStatus::ok) best_time = std::min(best_time, e.time);
    out.push_back(best_time);
  }
  return out;
}

nlohmann::json to_json(const TuningRun& run) {
  nlohmann::json history = nlohmann::json::array();
  for (const auto& e : run.history)
    history.push_back(
        {{"config", to_json(e.config)}, {"time", e.time}, {"status", std::string(to_string(e.status))}});
  nlohmann::json best = nullptr;
  if (run.best) best = {{"config", to_json(run.best->config)}, {"time", run.best->time}};
  return {{"algorithm", std::string(to_string(run.algorithm))},
          {"N", run.n_size},
          {"seed", run.seed},
          {"evaluations_used", run.evaluations_used},
          {"stop_reason", std::string(to_string(run.stop_reason))},
          {"best", best},
          {"history", history}};
}

double penalty_time(const std::vector<Evaluation>& history) {
  double worst = 0.0;
  for (const auto& e : history)
    if (e.status == EvalStatus::ok) worst = std::max(worst, e.time);
  return worst > 0.0 ? 10.0 * worst : kPenaltyWithoutData;
}

// ---------------------------------------------------------------------------
// Surrogate

namespace {

Eigen::VectorXd encoded(const Candidate& c) {
  const auto v = encode(c);
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace

GpPrediction SurrogateModel::predict(const Candidate& c) const { return gp.predict(encoded(c)); }

SurrogateModel fit_surrogate(const std::vector<Evaluation>& history) {
  std::set<std::vector<double>> ok_points;
  for (const auto& e : history)
    if (e.status == EvalStatus::ok) ok_points.insert(encode(e.config));
  if (ok_points.size() < 2)
    throw UntrainableModelError("surrogate needs two ok evaluations with distinct configs");

  // One row per distinct config; the first observation wins.
  std::vector<std::vector<double>> rows;
  std::vector<double> times;
  std::set<std::vector<double>> seen;
  for (const auto& e : history) {
    auto x = encode(e.config);
    if (!(e.time > 0.0) || !seen.insert(x).second) continue;
    rows.push_back(std::move(x));
    times.push_back(e.time);
  }
  const auto n = static_cast<Eigen::Index>(rows.size());
  const auto dims = static_cast<Eigen::Index>(rows.front().size());
  Eigen::MatrixXd inputs(n, dims);
  Eigen::VectorXd logs(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (static_cast<Eigen::Index>(rows[static_cast<std::size_t>(i)].size()) != dims)
      throw ValidationError("mixed candidate encodings in one history");
    for (Eigen::Index d = 0; d < dims; ++d) inputs(i, d) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(d)];
    logs[i] = std::log(times[static_cast<std::size_t>(i)]);
  }
  SurrogateModel model;
  model.offset = logs.mean();
  const double var = (logs.array() - model.offset).square().mean();
  model.scale = var > 1e-24 ? std::sqrt(var) : 1.0;
  const Eigen::VectorXd targets = (logs.array() - model.offset) / model.scale;
  model.gp.fit_optimized(inputs, targets);
  return model;
}

double expected_improvement(double mean, double stddev, double best) {
  const double gain = best - mean;
  if (!(stddev > 0.0)) return std::max(gain, 0.0);
  const double z = gain / stddev;
  const double cdf = 0.5 * std::erfc(-z / std::sqrt(2.0));
  const double pdf = std::exp(-0.5 * z * z) / std::sqrt(2.0 * M_PI);
  return std::max(0.0, gain * cdf + stddev * pdf);
}

double expected_improvement(const SurrogateModel& model, const Candidate& c, double best_time) {
  const auto p = model.predict(c);
  return expected_improvement(p.mean, std::sqrt(p.variance), model.to_model(best_time));
}

// ---------------------------------------------------------------------------
// Search loop

std::size_t initial_sample_size(std::size_t space_size, int budget) {
  const std::size_t tenth = (space_size + 9) / 10;
  return std::min({std::max<std::size_t>(3, tenth), static_cast<std::size_t>(std::max(budget, 0)),
                   space_size});
}

TuningRun tune_bo(const SearchSpace& space, Backend& backend, int budget, int window,
                  std::uint64_t seed) {
  if (space.empty()) throw NoFeasibleConfigError("search space is empty");
  if (budget < 1) throw ValidationError("budget must be at least 1");
  if (window < 1) throw ValidationError("window must be at least 1");

  TuningRun run;
  run.algorithm = space.algorithm;
  run.n_size = space.n_size;
  run.seed = seed;
  std::mt19937_64 rng(seed);

  const std::size_t total = space.size();
  std::vector<bool> evaluated(total, false);
  double best_time = std::numeric_limits<double>::infinity();
  int stall = 0;

  auto record = [&](std::size_t index, Evaluation e) {
    evaluated[index] = true;
    if (e.status != EvalStatus::ok) e.time = penalty_time(run.history);
    const bool improved = e.status == EvalStatus::ok && e.time < best_time;
    if (improved) {
      best_time = e.time;
      run.best = e;
    }
    run.history.push_back(std::move(e));
    return improved;
  };

  // Seed phase: distinct random members, drawn by partial Fisher-Yates.
  const std::size_t seeds = initial_sample_size(total, budget);
  std::vector<std::size_t> order(total);
  for (std::size_t i = 0; i < total; ++i) order[i] = i;
  for (std::size_t i = 0; i < seeds; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, total - 1);
    std::swap(order[i], order[pick(rng)]);
  }
  std::vector<Evaluation> seeded(seeds);
  if (backend.concurrency_safe() && seeds > 1) {
    std::vector<std::future<Evaluation>> jobs;
    for (std::size_t i = 0; i < seeds; ++i)
      jobs.push_back(std::async(std::launch::async, [&, i] {
        return backend.evaluate(space.candidates[order[i]], space.algorithm, space.n_size);
      }));
    for (std::size_t i = 0; i < seeds; ++i) seeded[i] = jobs[i].get();
  } else {
    for (std::size_t i = 0; i < seeds; ++i)
      seeded[i] = backend.evaluate(space.candidates[order[i]], space.algorithm, space.n_size);
  }
  for (std::size_t i = 0; i < seeds; ++i) record(order[i], std::move(seeded[i]));

  auto finished = [&]() -> std::optional<StopReason> {
    if (stall >= window) return StopReason::window_stalled;
    if (run.history.size() >= total) return StopReason::space_exhausted;
    if (static_cast<int>(run.history.size()) >= budget) return StopReason::budget_exhausted;
    return std::nullopt;
  };

  while (true) {
    if (auto reason = finished()) {
      run.stop_reason = *reason;
      break;
    }
    std::optional<std::size_t> next;
    try {
      const auto model = fit_surrogate(run.history);
      double best_score = -1.0;
      for (std::size_t i = 0; i < total; ++i) {
        if (evaluated[i]) continue;
        const double score = expected_improvement(model, space.candidates[i], best_time);
        if (score > best_score) {
          best_score = score;
          next = i;
        }
      }
    } catch (const UntrainableModelError&) {
      std::vector<std::size_t> open;
      for (std::size_t i = 0; i < total; ++i)
        if (!evaluated[i]) open.push_back(i);
      std::uniform_int_distribution<std::size_t> pick(0, open.size() - 1);
      next = open[pick(rng)];
    }
    auto e = backend.evaluate(space.candidates[*next], space.algorithm, space.n_size);
    stall = record(*next, std::move(e)) ? 0 : stall + 1;
  }
  run.evaluations_used = static_cast<int>(run.history.size());
  return run;
}

}  // namespace prefixtune
