#include "prefixtune/analytical.hpp"

#include <algorithm>
#include <cstdio>
#include <optional>

#include "prefixtune/errors.hpp"

namespace prefixtune {
namespace {

struct Scored {
  KernelConfig config;
  OccupancyReport occ;
};

// Final ordering once the rules are exhausted: r desc, P desc, L asc,
// shuffle first, then S asc.
bool tie_break_less(const KernelConfig& a, const KernelConfig& b) {
  if (a.radix != b.radix) return a.radix > b.radix;
  if (a.p_per_thread != b.p_per_thread) return a.p_per_thread > b.p_per_thread;
  if (a.l_threads != b.l_threads) return a.l_threads < b.l_threads;
  if (a.shuffle != b.shuffle) return a.shuffle;
  return a.s_elems < b.s_elems;
}

struct Pick {
  std::size_t index;
  GuidelineRule rule;
};

std::optional<Pick> select(const std::vector<Scored>& pool, const std::vector<std::size_t>& members,
                           const ArchDescriptor& arch, bool allow_rule3) {
  if (members.empty()) return std::nullopt;
  auto best_of = [&](auto&& keep, auto&& less) -> std::optional<std::size_t> {
    std::optional<std::size_t> best;
    for (std::size_t i : members) {
      if (!keep(pool[i])) continue;
      if (!best || less(pool[i], pool[*best])) best = i;
    }
    return best;
  };
  auto by_tie = [](const Scored& x, const Scored& y) { return tie_break_less(x.config, y.config); };

  if (auto i = best_of(
          [&](const Scored& s) {
            return s.occ.active_warps == arch.max_warps_per_sm &&
                   s.occ.active_blocks == arch.max_blocks_per_sm;
          },
          by_tie))
    return Pick{*i, GuidelineRule::both_max};

  if (auto i = best_of([](const Scored& s) { return s.occ.warp_occupancy >= kOccupancyBand; },
                       [&](const Scored& x, const Scored& y) {
                         if (x.occ.active_blocks != y.occ.active_blocks)
                           return x.occ.active_blocks > y.occ.active_blocks;
                         if (x.occ.warp_occupancy != y.occ.warp_occupancy)
                           return x.occ.warp_occupancy > y.occ.warp_occupancy;
                         return by_tie(x, y);
                       }))
    return Pick{*i, GuidelineRule::blocks_with_60pct_floor};

  if (!allow_rule3) return std::nullopt;
  if (auto i = best_of([](const Scored&) { return true; },
                       [&](const Scored& x, const Scored& y) {
                         if (x.occ.warp_occupancy != y.occ.warp_occupancy)
                           return x.occ.warp_occupancy > y.occ.warp_occupancy;
                         if (x.config.p_per_thread != y.config.p_per_thread)
                           return x.config.p_per_thread > y.config.p_per_thread;
                         return by_tie(x, y);
                       }))
    return Pick{*i, GuidelineRule::max_occupancy_tiebreak_P};
  return std::nullopt;
}

// Shuffle candidates go first when one of the occupancy rules accepts them.
std::optional<Pick> select_with_shuffle(const std::vector<Scored>& pool,
                                        const std::vector<std::size_t>& members,
                                        const ArchDescriptor& arch) {
  std::vector<std::size_t> shuffled;
  for (std::size_t i : members)
    if (pool[i].config.shuffle) shuffled.push_back(i);
  if (shuffled.size() != members.size())
    if (auto p = select(pool, shuffled, arch, false)) return p;
  return select(pool, members, arch, true);
}

std::string percent(double f) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f%%", 100.0 * f);
  return buf;
}

std::string rejection(const Scored& s, const Scored& winner, GuidelineRule rule,
                      const ArchDescriptor& arch) {
  if (rule == GuidelineRule::radix_promotion)
    return "superseded by radix " + std::to_string(winner.config.radix);
  if (winner.config.shuffle && !s.config.shuffle) return "shuffle candidate preferred";
  switch (rule) {
    case GuidelineRule::both_max:
      if (s.occ.active_warps != arch.max_warps_per_sm ||
          s.occ.active_blocks != arch.max_blocks_per_sm)
        return "W_SM=" + std::to_string(s.occ.active_warps) +
               " B_a=" + std::to_string(s.occ.active_blocks) + " not both maximal";
      break;
    case GuidelineRule::blocks_with_60pct_floor:
      if (s.occ.warp_occupancy < kOccupancyBand)
        return "occupancy " + percent(s.occ.warp_occupancy) + " below 60%";
      if (s.occ.active_blocks < winner.occ.active_blocks)
        return "B_a=" + std::to_string(s.occ.active_blocks) + " below " +
               std::to_string(winner.occ.active_blocks);
      break;
    case GuidelineRule::max_occupancy_tiebreak_P:
      if (s.occ.warp_occupancy < winner.occ.warp_occupancy)
        return "occupancy " + percent(s.occ.warp_occupancy) + " below " +
               percent(winner.occ.warp_occupancy);
      if (s.config.p_per_thread < winner.config.p_per_thread) return "smaller P";
      break;
    case GuidelineRule::radix_promotion: break;
  }
  return "lost tie-break";
}

int base_radix(Algorithm) { return 2; }

bool allows_radix(Algorithm a, int r) {
  if (a == Algorithm::ts_wm) return r == 2 || r == 4 || r == 8;
  if (a == Algorithm::fft) return r == 2 || r == 4 || r == 8 || r == 16;
  return r == 2;
}

}  // namespace

std::string_view to_string(GuidelineRule rule) {
  switch (rule) {
    case GuidelineRule::both_max: return "both_max";
    case GuidelineRule::blocks_with_60pct_floor: return "blocks_with_60pct_floor";
    case GuidelineRule::max_occupancy_tiebreak_P: return "max_occupancy_tiebreak_P";
    case GuidelineRule::radix_promotion: return "radix_promotion";
  }
  return "?";
}

GuidelineTrace apply_guideline(Algorithm a, const std::vector<KernelConfig>& candidates,
                               const ArchDescriptor& arch, bool multi_kernel) {
  std::vector<Scored> pool;
  std::vector<std::size_t> all;
  std::vector<std::pair<KernelConfig, std::string>> screened;
  for (const auto& c : candidates) {
    const int regs = estimate_registers(a, c.p_per_thread);
    if (regs > kGuidelineRegisterCeiling) {
      screened.emplace_back(c, std::to_string(regs) + " registers above the guideline ceiling");
      continue;
    }
    OccupancyReport occ;
    try {
      occ = compute_occupancy(arch, resource_usage(a, c, arch, multi_kernel));
    } catch (const ValidationError& e) {
      screened.emplace_back(c, e.what());
      continue;
    }
    if (occ.active_blocks < 1) {
      screened.emplace_back(c, "no resident block");
      continue;
    }
    all.push_back(pool.size());
    pool.push_back({c, occ});
  }
  auto pick = select_with_shuffle(pool, all, arch);
  if (!pick) throw NoFeasibleConfigError("no feasible configuration for " + std::string(to_string(a)));

  // A wider node operator trades blocks for fewer circuit levels.
  const int base = base_radix(a);
  if (pool[pick->index].config.radix == base && allows_radix(a, 2 * base)) {
    std::vector<std::size_t> wider;
    for (std::size_t i : all)
      if (pool[i].config.radix == 2 * base && pool[i].occ.warp_occupancy >= kPromotionOccupancyFloor)
        wider.push_back(i);
    if (auto p = select_with_shuffle(pool, wider, arch))
      pick = Pick{p->index, GuidelineRule::radix_promotion};
  }

  GuidelineTrace trace;
  const Scored& winner = pool[pick->index];
  trace.chosen = winner.config;
  trace.rule_fired = pick->rule;
  trace.occupancy = winner.occ;
  for (std::size_t i : all) {
    if (i == pick->index) continue;
    trace.rejected_alternatives.emplace_back(pool[i].config,
                                             rejection(pool[i], winner, pick->rule, arch));
  }
  for (auto& r : screened) trace.rejected_alternatives.push_back(std::move(r));
  return trace;
}

GuidelineTrace tune_analytical(Algorithm a, long long n, const ArchDescriptor& arch) {
  if (is_multi_kernel_size(a, n))
    throw RangeError("N=" + std::to_string(n) + " needs a multi-kernel plan");
  const auto space = enumerate(a, n, arch);
  std::vector<KernelConfig> configs;
  for (const auto& c : space.candidates) configs.push_back(std::get<KernelConfig>(c));
  return apply_guideline(a, configs, arch);
}

MultiKernelPlan plan_large_fft(long long n, const ArchDescriptor& arch) {
  if (!is_power_of_two(n) || n < 2) throw RangeError("N must be a power of two");
  MultiKernelPlan plan;
  if (n <= kFftSingleKernelMax) {
    const auto trace = tune_analytical(Algorithm::fft, n, arch);
    plan.kernel_configs.push_back(trace.chosen);
  } else {
    if (n > (1LL << 23)) throw RangeError("N above the multi-kernel FFT range");
    const int tile = fft_plan_tile(arch);
    std::vector<KernelConfig> configs;
    for (int p : {2, 4, 8, 16}) {
      const int l = tile / p;
      if (l < arch.warp_size || l > arch.max_threads_per_block) continue;
      configs.push_back({tile, p, l, p, false});
    }
    const auto trace = apply_guideline(Algorithm::fft, configs, arch, true);
    const int bits = plan_kernel_bits(trace.chosen);
    if (bits < 1) throw PlanError("FFT tile covers no radix stage");
    const int total = log2_ceil(n);
    const int m = (total + bits - 1) / bits;
    plan.kernel_configs.assign(static_cast<std::size_t>(m), trace.chosen);
  }
  const auto& first = plan.kernel_configs.front();
  int s = 0;
  for (long long v = first.radix; v <= first.s_elems; v *= first.radix) ++s;
  plan.s_exponent = s;
  return plan;
}

nlohmann::json to_json(const GuidelineTrace& trace) {
  nlohmann::json rejected = nlohmann::json::array();
  for (const auto& [c, why] : trace.rejected_alternatives)
    rejected.push_back({{"config", to_json(c)}, {"reason", why}});
  return {{"chosen", to_json(trace.chosen)},
          {"rule_fired", std::string(to_string(trace.rule_fired))},
          {"occupancy",
           {{"active_blocks", trace.occupancy.active_blocks},
            {"active_warps", trace.occupancy.active_warps},
            {"warp_occupancy", trace.occupancy.warp_occupancy},
            {"limiting_resource", std::string(to_string(trace.occupancy.limiting_resource))}}},
          {"rejected_alternatives", rejected}};
}

}  // namespace prefixtune
