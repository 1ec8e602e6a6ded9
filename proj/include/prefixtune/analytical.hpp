#pragma once

#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "prefixtune/algorithm.hpp"
#include "prefixtune/arch.hpp"
#include "prefixtune/search_space.hpp"

namespace prefixtune {

enum class GuidelineRule { both_max, blocks_with_60pct_floor, max_occupancy_tiebreak_P, radix_promotion };

std::string_view to_string(GuidelineRule rule);

struct GuidelineTrace {
  KernelConfig chosen;
  GuidelineRule rule_fired = GuidelineRule::both_max;
  OccupancyReport occupancy;
  std::vector<std::pair<KernelConfig, std::string>> rejected_alternatives;
};

// Occupancy floor a promoted higher-radix candidate must keep.
inline constexpr double kPromotionOccupancyFloor = 0.25;
inline constexpr double kOccupancyBand = 0.60;
// Candidates whose register estimate exceeds this are left out of the
// guideline (register-pressure premise); search methods still see them.
inline constexpr int kGuidelineRegisterCeiling = 48;

// Occupancy-driven choice over the enumerated space. Throws RangeError for
// unsupported N and NoFeasibleConfigError for an empty space.
GuidelineTrace tune_analytical(Algorithm a, long long n, const ArchDescriptor& arch);

// Same rules over an explicit candidate list (single kernels only).
GuidelineTrace apply_guideline(Algorithm a, const std::vector<KernelConfig>& candidates,
                               const ArchDescriptor& arch, bool multi_kernel = false);

// Kernel sequence for an FFT too large for one block. Sizes that fit a single
// kernel yield a one-kernel plan equal to tune_analytical.
MultiKernelPlan plan_large_fft(long long n, const ArchDescriptor& arch);

nlohmann::json to_json(const GuidelineTrace& trace);

}  // namespace prefixtune
