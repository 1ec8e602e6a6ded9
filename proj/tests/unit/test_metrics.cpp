#include <doctest.h>

#include <algorithm>
#include <random>
#include <sstream>

#include "../support/oracles.hpp"
#include "prefixtune/errors.hpp"
#include "prefixtune/metrics.hpp"

using namespace prefixtune;
using namespace prefixtune::testing;

namespace {

const ArchDescriptor kArch = ArchDescriptor::gm20b();

}  // namespace

TEST_CASE("efficiency") {
  CHECK(efficiency(10.0, 10.0) == 1.0);
  CHECK(efficiency(20.0, 10.0) == 0.5);
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> t(1e-3, 1e3), k(1.0, 50.0);
  for (int i = 0; i < 100; ++i) {
    const double base = t(rng), factor = k(rng);
    CHECK(std::abs(efficiency(base * factor, base) - 1.0 / factor) <= 1e-12);
  }
  CHECK_THROWS_AS(efficiency(5.0, 10.0), ValidationError);
  CHECK_THROWS_AS(efficiency(0.0, 0.0), ValidationError);
  CHECK_THROWS_AS(efficiency(1.0, -1.0), ValidationError);
}

TEST_CASE("phi") {
  CHECK(phi({1.0, 1.0, 1.0}) == 1.0);
  CHECK(phi({1.0, 0.5}) == doctest::Approx(2.0 / 3.0));
  CHECK_THROWS_AS(phi({}), ValidationError);
  CHECK_THROWS_AS(phi({0.0}), ValidationError);
  CHECK_THROWS_AS(phi({1.5}), ValidationError);

  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> e(0.05, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> v(7);
    for (auto& x : v) x = e(rng);
    const double base = phi(v);
    const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    CHECK(base <= mean + 1e-12);
    CHECK(base <= 1.0);
    auto shuffled = v;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    CHECK(phi(shuffled) == doctest::Approx(base).epsilon(1e-12));
    auto lowered = v;
    lowered[3] *= 0.9;
    CHECK(phi(lowered) < base);
  }
}

TEST_CASE("throughput formulas") {
  const auto f = throughput(Algorithm::fft, 1024, 1, 1.0);
  CHECK(f.value == doctest::Approx(5.12e-5));
  CHECK(f.unit == "GFlops/s");
  const auto ts = throughput(Algorithm::ts_wm, 1000000, 1, 1.0);
  CHECK(ts.value == doctest::Approx(1.0));
  CHECK(ts.unit == "MRows/s");
  // Invert a published scan figure: 18.72 MData/s at N=512, b=2^17.
  const double b = 1 << 17;
  const double t = 512.0 * b * 1e-6 / 18.72;
  const auto scan = throughput(Algorithm::scan_lf, 512, 1 << 17, t);
  CHECK(scan.value == doctest::Approx(18.72).epsilon(1e-12));
  CHECK(scan.unit == "MData/s");
  CHECK_THROWS_AS(throughput(Algorithm::fft, 1024, 1, 0.0), ValidationError);
}

TEST_CASE("exhaustive search") {
  SimBackend sim(kArch);
  const auto space = enumerate(Algorithm::fft, 256, kArch);
  const auto result = exhaustive_search(space, sim);
  REQUIRE(result.evaluations.size() == space.size());
  double best = INFINITY;
  for (std::size_t i = 0; i < space.size(); ++i) {
    CHECK(result.evaluations[i].config == space.candidates[i]);
    best = std::min(best, sim_cost(space.candidates[i], {Algorithm::fft, 256, sim_batches(256), 2}, kArch));
  }
  CHECK(result.best.time == best);

  // Enumeration order does not matter.
  auto reversed = space;
  std::reverse(reversed.candidates.begin(), reversed.candidates.end());
  CHECK(exhaustive_search(reversed, sim).best.time == best);

  // BO with no window and a budget of |space| finds the same optimum.
  const auto run = tune_bo(space, sim, static_cast<int>(space.size()), kNoWindow, 9);
  CHECK(run.best->time == best);

  SearchSpace one = space;
  one.candidates.resize(1);
  CHECK(exhaustive_search(one, sim).best.config == space.candidates.front());

  FunctionBackend none([](const Candidate&) { return -1.0; });
  CHECK_THROWS_AS(exhaustive_search(space, none), NoFeasibleConfigError);

  ScriptedBackend serial({5.0, 3.0, 4.0});
  const auto small = exhaustive_search(synthetic_space(3), serial);
  CHECK(small.best.time == 3.0);
  CHECK(serial.calls() == 3);
}

TEST_CASE("reports") {
  const auto space = synthetic_space(4);
  const Candidate& a = space.candidates[0];
  const Candidate& b = space.candidates[1];
  std::map<long long, ExhaustiveResult> oracle;
  oracle[64] = {{}, {a, 10.0, EvalStatus::ok}};
  oracle[128] = {{}, {b, 20.0, EvalStatus::ok}};

  std::map<long long, MethodOutcome> self{{64, {Evaluation{a, 10.0, EvalStatus::ok}, 4}},
                                          {128, {Evaluation{b, 20.0, EvalStatus::ok}, 4}}};
  const auto exact = build_report("exhaustive", Algorithm::fft, self, oracle);
  CHECK(exact.phi == 1.0);
  CHECK(exact.evaluations_used == 8);

  std::map<long long, MethodOutcome> half{{64, {Evaluation{b, 20.0, EvalStatus::ok}, 1}},
                                          {128, {Evaluation{b, 20.0, EvalStatus::ok}, 1}}};
  const auto r = build_report("analytical", Algorithm::fft, half, oracle);
  CHECK(r.sizes[0].efficiency == 0.5);
  CHECK(r.phi == doctest::Approx(2.0 / 3.0));

  std::map<long long, MethodOutcome> broken{{64, {std::nullopt, 5}}, {128, {Evaluation{b, 20.0, EvalStatus::ok}, 5}}};
  const auto f = build_report("bo", Algorithm::fft, broken, oracle);
  CHECK(f.phi == 0.0);
  CHECK_FALSE(f.sizes[0].chosen_config.has_value());

  std::map<long long, MethodOutcome> other{{256, {Evaluation{b, 20.0, EvalStatus::ok}, 1}},
                                           {128, {Evaluation{b, 20.0, EvalStatus::ok}, 1}}};
  CHECK_THROWS_AS(build_report("x", Algorithm::fft, other, oracle), ValidationError);

  const auto j = to_json(r);
  CHECK(j.at("method") == "analytical");
  CHECK(j.at("sizes").size() == 2);
  CHECK(j.at("sizes")[0].at("N") == 64);
  CHECK(j.at("sizes")[0].at("efficiency") == 0.5);
  for (const char* key : {"method", "algorithm", "sizes", "phi", "evaluations_used"}) CHECK(j.contains(key));

  // Columns line up: every row has the header's width up to the last column.
  const auto text = compare_table({exact, r, f});
  std::istringstream lines(text);
  std::string header, row;
  std::getline(lines, header);
  const auto eff_col = header.find("efficiency");
  REQUIRE(eff_col != std::string::npos);
  for (int i = 0; i < 6; ++i) {
    std::getline(lines, row);
    CHECK(row.size() > eff_col);
    CHECK(row[eff_col - 1] == ' ');
  }
}

TEST_CASE("compare driver") {
  SimBackend sim(kArch);
  const auto reports = run_compare(Algorithm::ts_wm, {64, 1024}, sim, kArch, {40, 5, 7});
  REQUIRE(reports.size() == 3);
  CHECK(reports[0].method == "analytical");
  CHECK(reports[1].method == "bo");
  CHECK(reports[2].method == "exhaustive");
  CHECK(reports[2].phi == 1.0);
  CHECK(reports[0].evaluations_used == 2);
  for (const auto& r : reports) {
    CHECK(r.phi > 0.0);
    CHECK(r.phi <= 1.0);
  }
  const auto again = run_compare(Algorithm::ts_wm, {64, 1024}, sim, kArch, {40, 5, 7});
  CHECK(compare_json(reports).dump() == compare_json(again).dump());

  const auto fft = run_compare(Algorithm::fft, {1 << 13}, sim, kArch, {40, 5, 1});
  CHECK(fft[0].sizes[0].chosen_config.has_value());
  CHECK(std::holds_alternative<MultiKernelPlan>(*fft[0].sizes[0].chosen_config));
  CHECK_THROWS_AS(run_compare(Algorithm::fft, {}, sim, kArch), ValidationError);
}
