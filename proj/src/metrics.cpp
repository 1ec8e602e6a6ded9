#include "prefixtune/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <future>
#include <sstream>
#include <thread>

#include "prefixtune/analytical.hpp"
#include "prefixtune/errors.hpp"

namespace prefixtune {

ExhaustiveResult exhaustive_search(const SearchSpace& space, Backend& backend) {
  const std::size_t total = space.size();
  ExhaustiveResult result;
  result.evaluations.resize(total);
  auto run_range = [&](std::size_t begin, std::size_t step) {
    for (std::size_t i = begin; i < total; i += step)
      result.evaluations[i] = backend.evaluate(space.candidates[i], space.algorithm, space.n_size);
  };
  const std::size_t workers =
      backend.concurrency_safe()
          ? std::clamp<std::size_t>(std::thread::hardware_concurrency(), 1, std::max<std::size_t>(total, 1))
          : 1;
  if (workers > 1) {
    std::vector<std::future<void>> jobs;
    for (std::size_t w = 0; w < workers; ++w)
      jobs.push_back(std::async(std::launch::async, run_range, w, workers));
    for (auto& j : jobs) j.get();
  } else {
    run_range(0, 1);
  }

  const Evaluation* best = nullptr;
  for (const auto& e : result.evaluations)
    if (e.status == EvalStatus::ok && (!best || e.time < best->time)) best = &e;
  if (!best)
    throw NoFeasibleConfigError("no candidate evaluated ok for " +
                                std::string(to_string(space.algorithm)) + " N=" +
                                std::to_string(space.n_size));
  result.best = *best;
  return result;
}

double efficiency(double achieved_time, double best_time) {
  if (!(achieved_time > 0.0) || !(best_time > 0.0))
    throw ValidationError("efficiency needs positive times");
  if (best_time > achieved_time) throw ValidationError("best time exceeds achieved time");
  return best_time / achieved_time;
}

double phi(const std::vector<double>& efficiencies) {
  if (efficiencies.empty()) throw ValidationError("phi of an empty size set");
  double inverse = 0.0;
  for (double e : efficiencies) {
    if (!(e > 0.0) || e > 1.0) throw ValidationError("efficiency outside (0,1]");
    inverse += 1.0 / e;
  }
  return static_cast<double>(efficiencies.size()) / inverse;
}

Throughput throughput(Algorithm a, long long n, long long batches, double seconds) {
  if (!(seconds > 0.0)) throw ValidationError("throughput needs a positive time");
  const double nb = static_cast<double>(n) * static_cast<double>(batches);
  if (a == Algorithm::fft)
    return {5.0 * nb * std::log2(static_cast<double>(n)) * 1e-9 / seconds, "GFlops/s"};
  if (is_scan(a)) return {nb * 1e-6 / seconds, "MData/s"};
  return {nb * 1e-6 / seconds, "MRows/s"};
}

MethodReport build_report(std::string method, Algorithm a,
                          const std::map<long long, MethodOutcome>& outcomes,
                          const std::map<long long, ExhaustiveResult>& oracle) {
  if (outcomes.size() != oracle.size())
    throw ValidationError("method and oracle cover different size sets");
  MethodReport report;
  report.method = std::move(method);
  report.algorithm = a;
  std::vector<double> effs;
  bool complete = !outcomes.empty();
  for (const auto& [n, outcome] : outcomes) {
    const auto it = oracle.find(n);
    if (it == oracle.end()) throw ValidationError("oracle lacks N=" + std::to_string(n));
    SizeEntry entry;
    entry.n_size = n;
    entry.oracle_time = it->second.best.time;
    if (outcome.chosen) entry.chosen_config = outcome.chosen->config;
    if (outcome.chosen && outcome.chosen->status == EvalStatus::ok) {
      entry.best_time = outcome.chosen->time;
      // A method can never beat the oracle on the same backend; clamp float noise.
      entry.efficiency = efficiency(std::max(entry.best_time, entry.oracle_time), entry.oracle_time);
      effs.push_back(entry.efficiency);
    } else {
      complete = false;
    }
    report.evaluations_used += outcome.evaluations;
    report.sizes.push_back(std::move(entry));
  }
  report.phi = complete ? phi(effs) : 0.0;
  return report;
}

nlohmann::json to_json(const MethodReport& report) {
  nlohmann::json sizes = nlohmann::json::array();
  for (const auto& s : report.sizes) {
    nlohmann::json config = nullptr;
    if (s.chosen_config) config = to_json(*s.chosen_config);
    sizes.push_back({{"N", s.n_size},
                     {"best_time", s.best_time},
                     {"chosen_config", config},
                     {"efficiency", s.efficiency},
                     {"oracle_time", s.oracle_time}});
  }
  return {{"method", report.method},
          {"algorithm", std::string(to_string(report.algorithm))},
          {"sizes", sizes},
          {"phi", report.phi},
          {"evaluations_used", report.evaluations_used}};
}

nlohmann::json compare_json(const std::vector<MethodReport>& reports) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& r : reports) out.push_back(to_json(r));
  return out;
}

namespace {

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string render(const std::vector<std::vector<std::string>>& rows) {
  std::vector<std::size_t> width;
  for (const auto& row : rows) {
    if (width.size() < row.size()) width.resize(row.size(), 0);
    for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], row[c].size());
  }
  std::ostringstream out;
  for (const auto& row : rows) {
    std::string line;
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c) line += "  ";
      line += row[c];
      if (c + 1 < row.size()) line.append(width[c] - row[c].size(), ' ');
    }
    out << line << '\n';
  }
  return out.str();
}

}  // namespace

std::string compare_table(const std::vector<MethodReport>& reports) {
  std::vector<std::vector<std::string>> rows{
      {"method", "algorithm", "N", "config", "time_us", "throughput", "efficiency"}};
  for (const auto& r : reports) {
    for (const auto& s : r.sizes) {
      std::string perf = "-";
      if (s.best_time > 0.0) {
        const auto t = throughput(r.algorithm, s.n_size, sim_batches(s.n_size), s.best_time * 1e-6);
        perf = fixed(t.value, 3) + " " + std::string(t.unit);
      }
      rows.push_back({r.method, std::string(to_string(r.algorithm)), std::to_string(s.n_size),
                      s.chosen_config ? to_string(*s.chosen_config) : "-",
                      s.best_time > 0.0 ? fixed(s.best_time, 3) : "-", perf, fixed(s.efficiency, 4)});
    }
  }
  std::vector<std::vector<std::string>> summary{{"method", "algorithm", "phi", "evaluations"}};
  for (const auto& r : reports)
    summary.push_back({r.method, std::string(to_string(r.algorithm)), fixed(r.phi, 4),
                       std::to_string(r.evaluations_used)});
  return render(rows) + "\n" + render(summary);
}

std::vector<MethodReport> run_compare(Algorithm a, const std::vector<long long>& sizes,
                                      Backend& backend, const ArchDescriptor& arch,
                                      const CompareOptions& options) {
  if (sizes.empty()) throw ValidationError("compare needs at least one size");
  std::map<long long, ExhaustiveResult> oracle;
  std::map<long long, MethodOutcome> analytical, bo, exhaustive;
  for (long long n : sizes) {
    const auto space = enumerate(a, n, arch);
    auto full = exhaustive_search(space, backend);
    exhaustive[n] = {full.best, static_cast<int>(full.evaluations.size())};

    const Candidate pick = is_multi_kernel_size(a, n) ? Candidate(plan_large_fft(n, arch))
                                                      : Candidate(tune_analytical(a, n, arch).chosen);
    analytical[n] = {backend.evaluate(pick, a, n), 1};

    const auto run = tune_bo(space, backend, options.budget, options.window, options.seed);
    bo[n] = {run.best, run.evaluations_used};
    oracle[n] = std::move(full);
  }
  return {build_report("analytical", a, analytical, oracle), build_report("bo", a, bo, oracle),
          build_report("exhaustive", a, exhaustive, oracle)};
}

}  // namespace prefixtune
