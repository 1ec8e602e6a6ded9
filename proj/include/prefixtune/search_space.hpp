#pragma once

#include <compare>
#include <span>
#include <string>
#include <tuple>
#include <variant>
#include <vector>

#include <json.hpp>

#include "prefixtune/algorithm.hpp"
#include "prefixtune/arch.hpp"

namespace prefixtune {

// One tuning candidate for a single kernel launch.
//   s_elems      S, elements held in shared memory per block (0 with shuffle)
//   p_per_thread P, elements per thread
//   l_threads    L, threads per block
struct KernelConfig {
  int s_elems = 0;
  int p_per_thread = 2;
  int l_threads = 32;
  int radix = 2;
  bool shuffle = false;

  int elements_per_block() const { return p_per_thread * l_threads; }

  // Lexicographic by (r, P, L, S, shuffle), the enumeration order.
  auto operator<=>(const KernelConfig& o) const {
    return std::tie(radix, p_per_thread, l_threads, s_elems, shuffle) <=>
           std::tie(o.radix, o.p_per_thread, o.l_threads, o.s_elems, o.shuffle);
  }
  bool operator==(const KernelConfig&) const = default;
};

// Sequence of kernel launches for an FFT larger than one block's tile.
struct MultiKernelPlan {
  std::vector<KernelConfig> kernel_configs;
  int s_exponent = 0;  // s with S = r^s for the first kernel

  int kernel_count() const { return static_cast<int>(kernel_configs.size()); }
  auto operator<=>(const MultiKernelPlan& o) const { return kernel_configs <=> o.kernel_configs; }
  bool operator==(const MultiKernelPlan& o) const { return kernel_configs == o.kernel_configs; }
};

using Candidate = std::variant<KernelConfig, MultiKernelPlan>;

std::span<const KernelConfig> kernels_of(const Candidate& c);
std::string to_string(const KernelConfig& c);
std::string to_string(const Candidate& c);
nlohmann::json to_json(const KernelConfig& c);
nlohmann::json to_json(const Candidate& c);
KernelConfig kernel_config_from_json(const nlohmann::json& j);
Candidate candidate_from_json(const nlohmann::json& j);

// Bytes per element held in shared memory.
int element_bytes(Algorithm a);

// Per-thread register estimate before any launch-bound capping.
int estimate_registers(Algorithm a, int p_per_thread);

// Register count the kernel is compiled with for L threads: the estimate,
// capped to the per-block register file when the overshoot is at most 25%.
int effective_registers(Algorithm a, int p_per_thread, int l_threads, const ArchDescriptor& arch);

// Bytes of shared memory one block actually occupies.
int shared_footprint(Algorithm a, const KernelConfig& c, const ArchDescriptor& arch,
                     bool multi_kernel = false);

KernelResourceUsage resource_usage(Algorithm a, const KernelConfig& c, const ArchDescriptor& arch,
                                   bool multi_kernel = false);

// FFT tiles are staged through a 16 KiB window; larger single-kernel tiles
// exchange real and imaginary halves separately.
inline constexpr int kFftStagingBytes = 16384;
inline constexpr long long kFftSingleKernelMax = 4096;

// Largest S a multi-kernel FFT pass may use (2048 on GM20B).
int fft_plan_tile(const ArchDescriptor& arch);

// Elements of the problem resolved by one multi-kernel pass, as log2.
int plan_kernel_bits(const KernelConfig& c);

struct Validity {
  bool valid = true;
  std::string reason;
  explicit operator bool() const { return valid; }
};

struct SupportedRange {
  long long min_n;
  long long max_n;
};

// Single-kernel range for every algorithm.
SupportedRange supported_range(Algorithm a);
bool is_multi_kernel_size(Algorithm a, long long n);

Validity is_valid(const KernelConfig& config, Algorithm a, long long n, const ArchDescriptor& arch);
Validity is_valid(const MultiKernelPlan& plan, Algorithm a, long long n,
                  const ArchDescriptor& arch);
Validity is_valid(const Candidate& c, Algorithm a, long long n, const ArchDescriptor& arch);

struct SearchSpace {
  Algorithm algorithm = Algorithm::fft;
  long long n_size = 0;
  int element_bytes = 0;
  std::vector<Candidate> candidates;

  std::size_t size() const { return candidates.size(); }
  bool empty() const { return candidates.empty(); }
};

// Every valid candidate in (r, P, L, S, shuffle) order. Throws RangeError for
// sizes outside the supported range.
SearchSpace enumerate(Algorithm a, long long n, const ArchDescriptor& arch);

// Numeric encoding used by the surrogate model.
std::vector<double> encode(const Candidate& c);

}  // namespace prefixtune
