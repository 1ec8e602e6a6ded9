#include <doctest.h>

#include <algorithm>

#include "prefixtune/analytical.hpp"
#include "prefixtune/errors.hpp"

using namespace prefixtune;

namespace {

const ArchDescriptor kArch = ArchDescriptor::gm20b();

struct Spl {
  int s, p, l;
};

// Published tuples, written as the size formulas of the guideline tables.
Spl expected(Algorithm a, int n) {
  switch (a) {
    case Algorithm::ts_cr:
    case Algorithm::ts_pcr:
    case Algorithm::ts_lf:
      if (n <= 64) return {0, 2, 64};
      if (n == 128) return {0, 4, 64};
      return {n, 2, n / 2};
    case Algorithm::ts_wm:
      if (n <= 128) return {0, 4, 64};
      return {n, 4, n / 4};
    case Algorithm::scan_lf:
    case Algorithm::scan_ks:
      if (n <= 256) return {8192 / n, 4, 64};
      return {32, 4, n / 4};
    case Algorithm::fft:
      if (n <= 256) return {256, 4, 64};
      return {n, 4, n / 4};
  }
  return {};
}

}  // namespace

TEST_CASE("guideline reproduces the published tuples") {
  for (auto a : kAllAlgorithms) {
    const auto range = supported_range(a);
    for (long long n = range.min_n; n <= range.max_n; n *= 2) {
      CAPTURE(to_string(a));
      CAPTURE(n);
      const auto want = expected(a, static_cast<int>(n));
      const auto got = tune_analytical(a, n, kArch).chosen;
      CHECK(got.s_elems == want.s);
      CHECK(got.p_per_thread == want.p);
      CHECK(got.l_threads == want.l);
    }
  }
}

TEST_CASE("guideline radix and shuffle") {
  CHECK(tune_analytical(Algorithm::ts_cr, 64, kArch).chosen == KernelConfig{0, 2, 64, 2, true});
  CHECK(tune_analytical(Algorithm::ts_wm, 64, kArch).chosen == KernelConfig{0, 4, 64, 4, true});
  CHECK(tune_analytical(Algorithm::ts_wm, 512, kArch).chosen == KernelConfig{512, 4, 128, 4, false});
  CHECK(tune_analytical(Algorithm::ts_cr, 512, kArch).chosen == KernelConfig{512, 2, 256, 2, false});
  CHECK(tune_analytical(Algorithm::fft, 1024, kArch).chosen == KernelConfig{1024, 4, 256, 4, false});
  CHECK(tune_analytical(Algorithm::scan_lf, 128, kArch).chosen == KernelConfig{64, 4, 64, 2, true});
  CHECK(tune_analytical(Algorithm::ts_wm, 1024, kArch).rule_fired == GuidelineRule::radix_promotion);
}

TEST_CASE("guideline output is consistent") {
  for (auto a : kAllAlgorithms) {
    const auto range = supported_range(a);
    for (long long n = range.min_n; n <= range.max_n; n *= 2) {
      const auto trace = tune_analytical(a, n, kArch);
      const auto space = enumerate(a, n, kArch);
      CHECK(std::find(space.candidates.begin(), space.candidates.end(), Candidate(trace.chosen)) !=
            space.candidates.end());
      const auto usage = resource_usage(a, trace.chosen, kArch);
      CHECK(compute_occupancy(kArch, usage) == trace.occupancy);
      if (trace.rule_fired == GuidelineRule::both_max) {
        CHECK(trace.occupancy.active_warps == kArch.max_warps_per_sm);
        CHECK(trace.occupancy.active_blocks == kArch.max_blocks_per_sm);
      }
      if (trace.rule_fired == GuidelineRule::blocks_with_60pct_floor)
        CHECK(trace.occupancy.warp_occupancy >= kOccupancyBand);
      if (trace.rule_fired == GuidelineRule::radix_promotion)
        CHECK(trace.occupancy.warp_occupancy >= kPromotionOccupancyFloor);
      CHECK(trace.occupancy.active_blocks >= 1);
      if (space.size() > 1) CHECK_FALSE(trace.rejected_alternatives.empty());
    }
  }
}

TEST_CASE("guideline rules on explicit lists") {
  // Both limits reached beats a higher P that loses blocks.
  const std::vector<KernelConfig> list = {{512, 4, 128, 4, false}, {256, 4, 64, 4, false}};
  CHECK(apply_guideline(Algorithm::fft, list, kArch).chosen == list[1]);
  CHECK(apply_guideline(Algorithm::fft, list, kArch).rule_fired == GuidelineRule::blocks_with_60pct_floor);

  const std::vector<KernelConfig> full = {{256, 4, 64, 4, false}, {64, 2, 32, 2, false}};
  // (64,2,32): 1 warp per block, 32 blocks, 50% occupancy; (256,4,64): 75%.
  const auto t = apply_guideline(Algorithm::fft, full, kArch);
  CHECK(t.chosen == full[0]);

  CHECK_THROWS_AS(apply_guideline(Algorithm::fft, {}, kArch), NoFeasibleConfigError);
}

TEST_CASE("guideline errors") {
  CHECK_THROWS_AS(tune_analytical(Algorithm::ts_cr, 2048, kArch), RangeError);
  CHECK_THROWS_AS(tune_analytical(Algorithm::fft, 8192, kArch), RangeError);
  CHECK_THROWS_AS(tune_analytical(Algorithm::scan_lf, 100, kArch), RangeError);
  CHECK_THROWS_AS(plan_large_fft(3000, kArch), RangeError);
}

TEST_CASE("large FFT kernel counts") {
  int previous = 0;
  for (int k = 13; k <= 23; ++k) {
    const auto plan = plan_large_fft(1LL << k, kArch);
    CAPTURE(k);
    CHECK(plan.kernel_count() == (k <= 18 ? 2 : 3));
    CHECK(plan.kernel_count() >= previous);
    previous = plan.kernel_count();
    CHECK(is_valid(plan, Algorithm::fft, 1LL << k, kArch));
    for (const auto& c : plan.kernel_configs) CHECK(c == KernelConfig{2048, 8, 256, 8, false});
  }
  for (long long n = 8; n <= 4096; n *= 2) {
    const auto plan = plan_large_fft(n, kArch);
    CHECK(plan.kernel_count() == 1);
    CHECK(plan.kernel_configs.front() == tune_analytical(Algorithm::fft, n, kArch).chosen);
  }
}

TEST_CASE("trace json") {
  const auto j = to_json(tune_analytical(Algorithm::fft, 1024, kArch));
  CHECK(j.at("chosen").at("S") == 1024);
  CHECK(j.at("rule_fired") == "blocks_with_60pct_floor");
  CHECK(j.at("occupancy").at("active_blocks") == 6);
}
