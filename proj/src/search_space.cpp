#include "prefixtune/search_space.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "prefixtune/errors.hpp"

namespace prefixtune {
namespace {

std::vector<int> p_set(Algorithm a) {
  switch (family_of(a)) {
    case Family::tridiagonal: return {2, 4, 8};
    case Family::scan: return {2, 4, 8, 16, 32};
    case Family::fft: return {2, 4, 8, 16};
  }
  return {};
}

std::vector<int> radix_set(Algorithm a) {
  switch (a) {
    case Algorithm::ts_wm: return {2, 4, 8};
    case Algorithm::fft: return {2, 4, 8, 16};
    default: return {2};
  }
}

bool contains(const std::vector<int>& v, int x) { return std::find(v.begin(), v.end(), x) != v.end(); }

int floor_log(int value, int base) {
  int k = 0;
  for (long long p = base; p <= value; p *= base) ++k;
  return k;
}

Validity fail(std::string reason) { return {false, std::move(reason)}; }

// Occupancy-derived check shared by single kernels and plan passes.
Validity check_residency(Algorithm a, const KernelConfig& c, const ArchDescriptor& arch,
                         bool multi_kernel) {
  const auto usage = resource_usage(a, c, arch, multi_kernel);
  if (static_cast<long long>(usage.registers_per_thread) * usage.threads_per_block >
      arch.max_registers_per_block)
    return fail("register demand exceeds the per-block register file");
  if (usage.shared_mem_per_block > arch.max_shared_mem_per_block)
    return fail("exceeds shared capacity");
  const auto occ = compute_occupancy(arch, usage);
  if (occ.active_blocks < 1) return fail("no block fits on an SM");
  return {};
}

// Validity of a (P, L) pair for a multi-kernel FFT pass.
Validity plan_kernel_valid(const KernelConfig& c, const ArchDescriptor& arch) {
  if (!is_power_of_two(c.l_threads) || c.l_threads < arch.warp_size ||
      c.l_threads > arch.max_threads_per_block)
    return fail("L must be a power of two in [warp_size, max_threads_per_block]");
  if (!contains(p_set(Algorithm::fft), c.p_per_thread)) return fail("P not in {2,4,8,16}");
  if (c.radix != c.p_per_thread) return fail("FFT radix must equal P");
  if (c.shuffle) return fail("shuffle not supported for FFT");
  if (c.s_elems != c.elements_per_block()) return fail("S must equal P x L");
  if (c.s_elems > fft_plan_tile(arch)) return fail("exceeds shared capacity");
  if (plan_kernel_bits(c) < 1) return fail("tile smaller than one radix stage");
  return check_residency(Algorithm::fft, c, arch, true);
}

}  // namespace

std::span<const KernelConfig> kernels_of(const Candidate& c) {
  if (const auto* k = std::get_if<KernelConfig>(&c)) return {k, 1};
  const auto& plan = std::get<MultiKernelPlan>(c);
  return plan.kernel_configs;
}

std::string to_string(const KernelConfig& c) {
  std::ostringstream out;
  out << "(" << c.s_elems << "," << c.p_per_thread << "," << c.l_threads << ") r=" << c.radix
      << (c.shuffle ? " shuffle" : "");
  return out.str();
}

std::string to_string(const Candidate& c) {
  if (const auto* k = std::get_if<KernelConfig>(&c)) return to_string(*k);
  std::string out;
  for (const auto& k : kernels_of(c)) {
    if (!out.empty()) out += " | ";
    out += to_string(k);
  }
  return out;
}

nlohmann::json to_json(const KernelConfig& c) {
  return {{"S", c.s_elems}, {"P", c.p_per_thread}, {"L", c.l_threads}, {"r", c.radix},
          {"shuffle", c.shuffle}};
}

nlohmann::json to_json(const Candidate& c) {
  if (const auto* k = std::get_if<KernelConfig>(&c)) return to_json(*k);
  const auto& plan = std::get<MultiKernelPlan>(c);
  nlohmann::json kernels = nlohmann::json::array();
  for (const auto& k : plan.kernel_configs) kernels.push_back(to_json(k));
  return {{"kernels", kernels}, {"s_exponent", plan.s_exponent}};
}

KernelConfig kernel_config_from_json(const nlohmann::json& j) {
  try {
    KernelConfig c;
    c.s_elems = j.at("S").get<int>();
    c.p_per_thread = j.at("P").get<int>();
    c.l_threads = j.at("L").get<int>();
    c.radix = j.at("r").get<int>();
    c.shuffle = j.at("shuffle").get<bool>();
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("bad kernel config: ") + e.what());
  }
}

Candidate candidate_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ValidationError("candidate must be a JSON object");
  if (!j.contains("kernels")) return kernel_config_from_json(j);
  if (!j.at("kernels").is_array()) throw ValidationError("plan kernels must be an array");
  MultiKernelPlan plan;
  for (const auto& k : j.at("kernels")) plan.kernel_configs.push_back(kernel_config_from_json(k));
  const auto& e = j.contains("s_exponent") ? j.at("s_exponent") : nlohmann::json(0);
  if (!e.is_number_integer()) throw ValidationError("s_exponent must be an integer");
  plan.s_exponent = e.get<int>();
  return plan;
}

int element_bytes(Algorithm a) {
  switch (a) {
    case Algorithm::ts_lf: return 32;  // two equations of four floats
    case Algorithm::ts_cr:
    case Algorithm::ts_pcr:
    case Algorithm::ts_wm: return 16;  // one equation of four floats
    case Algorithm::fft: return 8;     // complex float
    case Algorithm::scan_lf:
    case Algorithm::scan_ks: return 4;
  }
  return 4;
}

int estimate_registers(Algorithm a, int p) {
  switch (a) {
    case Algorithm::ts_cr:
    case Algorithm::ts_pcr:
    case Algorithm::ts_wm:
      if (p <= 2) return 32;
      if (p <= 4) return 40;
      return 64;
    case Algorithm::ts_lf:
      // Two equations per element.
      if (p <= 2) return 32;
      if (p <= 4) return 40;
      return 80;
    case Algorithm::scan_lf:
    case Algorithm::scan_ks: return p <= 4 ? 32 : 64;
    case Algorithm::fft:
      if (p <= 2) return 32;
      if (p <= 4) return 40;
      if (p <= 8) return 48;
      return 64;
  }
  return 32;
}

int effective_registers(Algorithm a, int p, int l, const ArchDescriptor& arch) {
  const int estimate = estimate_registers(a, p);
  const int cap = arch.max_registers_per_block / std::max(l, 1);
  // The compiler absorbs a small overshoot by spilling; anything larger
  // cannot launch.
  if (estimate > cap && 4 * estimate <= 5 * cap) return cap;
  return estimate;
}

int shared_footprint(Algorithm a, const KernelConfig& c, const ArchDescriptor& arch,
                     bool multi_kernel) {
  switch (family_of(a)) {
    case Family::tridiagonal: return c.s_elems * element_bytes(a);
    case Family::scan:
      // Warp-level shuffles leave one partial per warp in shared memory.
      return warps_per_block(arch, c.l_threads) * element_bytes(a);
    case Family::fft: {
      const int full = c.s_elems * element_bytes(a);
      if (multi_kernel || full > kFftStagingBytes) return full / 2;
      return full;
    }
  }
  return 0;
}

KernelResourceUsage resource_usage(Algorithm a, const KernelConfig& c, const ArchDescriptor& arch,
                                   bool multi_kernel) {
  return {c.l_threads, effective_registers(a, c.p_per_thread, c.l_threads, arch),
          shared_footprint(a, c, arch, multi_kernel)};
}

int fft_plan_tile(const ArchDescriptor& arch) {
  const int budget = std::min(kFftStagingBytes, arch.max_shared_mem_per_block);
  int s = 1;
  while (2 * s * element_bytes(Algorithm::fft) <= budget) s *= 2;
  return s;
}

int plan_kernel_bits(const KernelConfig& c) {
  return log2_ceil(c.radix) * floor_log(c.s_elems, c.radix);
}

SupportedRange supported_range(Algorithm a) {
  switch (family_of(a)) {
    case Family::tridiagonal: return {8, 1024};
    case Family::scan: return {8, 4096};
    case Family::fft: return {8, kFftSingleKernelMax};
  }
  return {8, 8};
}

bool is_multi_kernel_size(Algorithm a, long long n) {
  return a == Algorithm::fft && n > kFftSingleKernelMax && n <= (1LL << 23);
}

Validity is_valid(const KernelConfig& c, Algorithm a, long long n, const ArchDescriptor& arch) {
  if (!is_power_of_two(n)) return fail("N must be a power of two");
  const auto range = supported_range(a);
  if (n > range.max_n) {
    if (a == Algorithm::fft) return fail("exceeds shared capacity");
    return fail("N above the supported range");
  }
  if (n < range.min_n) return fail("N below the supported range");
  if (!is_power_of_two(c.l_threads) || c.l_threads < arch.warp_size ||
      c.l_threads > arch.max_threads_per_block)
    return fail("L must be a power of two in [warp_size, max_threads_per_block]");
  if (!contains(p_set(a), c.p_per_thread)) return fail("P not in the algorithm's set");
  if (c.p_per_thread > n) return fail("P larger than N");

  switch (a) {
    case Algorithm::ts_cr:
    case Algorithm::ts_pcr:
    case Algorithm::ts_lf:
      if (c.radix != 2) {
        const char* name = a == Algorithm::ts_cr ? "CR" : a == Algorithm::ts_pcr ? "PCR" : "LF";
        return fail(std::string("radix fixed at 2 for ") + name);
      }
      break;
    case Algorithm::scan_lf:
    case Algorithm::scan_ks:
      if (c.radix != 2) return fail("radix fixed at 2 for scan");
      break;
    case Algorithm::ts_wm:
      if (!contains(radix_set(a), c.radix)) return fail("WM radix must be 2, 4 or 8");
      if (c.radix > c.p_per_thread) return fail("radix larger than P");
      break;
    case Algorithm::fft:
      if (c.radix != c.p_per_thread) return fail("FFT radix must equal P");
      break;
  }

  const long long per_block = c.elements_per_block();
  if (per_block < n) return fail("block does not hold a whole problem");
  const long long problems = per_block / n;

  switch (family_of(a)) {
    case Family::tridiagonal:
      if (c.shuffle) {
        if (n / c.p_per_thread > arch.warp_size) return fail("shuffle requires N/P <= warp_size");
        if (c.s_elems != 0) return fail("shuffle requires S = 0");
      } else if (c.s_elems != per_block) {
        return fail("S must equal P x L without shuffle");
      }
      break;
    case Family::scan:
      if (!c.shuffle) return fail("scan always uses shuffle");
      if (c.s_elems != arch.warp_size * problems)
        return fail("scan S must be warp_size per packed problem");
      break;
    case Family::fft:
      if (c.shuffle) return fail("shuffle not supported for FFT");
      if (c.s_elems != per_block) return fail("S must equal P x L");
      break;
  }

  if (static_cast<long long>(c.s_elems) * element_bytes(a) > arch.max_shared_mem_per_block)
    return fail("exceeds shared capacity");
  if (a == Algorithm::fft &&
      shared_footprint(a, c, arch) > std::min(kFftStagingBytes, arch.max_shared_mem_per_block))
    return fail("exceeds shared capacity");
  return check_residency(a, c, arch, false);
}

Validity is_valid(const MultiKernelPlan& plan, Algorithm a, long long n,
                  const ArchDescriptor& arch) {
  if (a != Algorithm::fft) return fail("multi-kernel plans exist only for FFT");
  if (!is_power_of_two(n)) return fail("N must be a power of two");
  if (plan.kernel_configs.empty()) return fail("plan has no kernels");
  const int bits = log2_ceil(n);
  int covered = 0;
  for (std::size_t k = 0; k < plan.kernel_configs.size(); ++k) {
    if (covered >= bits) return fail("kernel " + std::to_string(k) + " is redundant");
    const auto v = plan_kernel_valid(plan.kernel_configs[k], arch);
    if (!v) return fail("kernel " + std::to_string(k) + ": " + v.reason);
    covered += plan_kernel_bits(plan.kernel_configs[k]);
  }
  if (covered < bits) return fail("plan does not cover N");
  return {};
}

Validity is_valid(const Candidate& c, Algorithm a, long long n, const ArchDescriptor& arch) {
  return std::visit([&](const auto& x) { return is_valid(x, a, n, arch); }, c);
}

namespace {

// Kernel-level options for one multi-kernel pass: P x L tiles of half the
// maximal size or the maximal size.
std::vector<KernelConfig> plan_kernel_options(const ArchDescriptor& arch) {
  std::vector<KernelConfig> out;
  const int tile = fft_plan_tile(arch);
  for (int p : p_set(Algorithm::fft)) {
    for (int s = std::max(tile / 2, p); s <= tile; s *= 2) {
      KernelConfig c{s, p, s / p, p, false};
      if (plan_kernel_valid(c, arch)) out.push_back(c);
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

// Plans are kernel multisets: options are taken in non-decreasing index
// order so permutations of the same passes appear once.
void extend_plans(const std::vector<KernelConfig>& options, std::size_t first, int bits,
                  int covered, std::vector<KernelConfig>& prefix, std::vector<Candidate>& out) {
  for (std::size_t i = first; i < options.size(); ++i) {
    const auto& k = options[i];
    prefix.push_back(k);
    const int now = covered + plan_kernel_bits(k);
    if (now >= bits) {
      MultiKernelPlan plan;
      plan.kernel_configs = prefix;
      plan.s_exponent = floor_log(prefix.front().s_elems, prefix.front().radix);
      out.emplace_back(std::move(plan));
    } else {
      extend_plans(options, i, bits, now, prefix, out);
    }
    prefix.pop_back();
  }
}

}  // namespace

SearchSpace enumerate(Algorithm a, long long n, const ArchDescriptor& arch) {
  SearchSpace space;
  space.algorithm = a;
  space.n_size = n;
  space.element_bytes = element_bytes(a);
  if (!is_power_of_two(n)) throw RangeError("N must be a power of two");

  if (is_multi_kernel_size(a, n)) {
    const auto options = plan_kernel_options(arch);
    std::vector<KernelConfig> prefix;
    extend_plans(options, 0, log2_ceil(n), 0, prefix, space.candidates);
    return space;
  }

  const auto range = supported_range(a);
  if (n < range.min_n || n > range.max_n)
    throw RangeError("N=" + std::to_string(n) + " outside the supported range [" +
                     std::to_string(range.min_n) + ", " + std::to_string(range.max_n) + "] for " +
                     std::string(to_string(a)));

  std::vector<KernelConfig> found;
  for (int r : radix_set(a)) {
    for (int p : p_set(a)) {
      for (int l = arch.warp_size; l <= arch.max_threads_per_block; l *= 2) {
        const int per_block = p * l;
        for (bool shuffle : {false, true}) {
          int s = per_block;
          if (is_scan(a))
            s = per_block >= n ? static_cast<int>(arch.warp_size * (per_block / n)) : 0;
          else if (shuffle)
            s = 0;
          KernelConfig c{s, p, l, r, shuffle};
          if (is_valid(c, a, n, arch)) found.push_back(c);
        }
      }
    }
  }
  std::sort(found.begin(), found.end());
  found.erase(std::unique(found.begin(), found.end()), found.end());
  space.candidates.assign(found.begin(), found.end());
  return space;
}

std::vector<double> encode(const Candidate& c) {
  auto one = [](const KernelConfig& k, std::vector<double>& out) {
    out.push_back(std::log2(static_cast<double>(k.s_elems) + 1.0));
    out.push_back(std::log2(static_cast<double>(k.p_per_thread)));
    out.push_back(std::log2(static_cast<double>(k.l_threads)));
    out.push_back(std::log2(static_cast<double>(k.radix)));
    out.push_back(k.shuffle ? 1.0 : 0.0);
  };
  std::vector<double> out;
  if (const auto* k = std::get_if<KernelConfig>(&c)) {
    one(*k, out);
    return out;
  }
  // Plans: kernel count, then log2 S and log2 P for up to three kernels.
  // L = S/P and r = P, shuffle is never set for FFT passes.
  const auto& plan = std::get<MultiKernelPlan>(c);
  out.push_back(static_cast<double>(plan.kernel_count()));
  for (std::size_t i = 0; i < 3; ++i) {
    if (i < plan.kernel_configs.size()) {
      const auto& k = plan.kernel_configs[i];
      out.push_back(std::log2(static_cast<double>(k.s_elems)));
      out.push_back(std::log2(static_cast<double>(k.p_per_thread)));
    } else {
      out.push_back(0.0);
      out.push_back(0.0);
    }
  }
  return out;
}

}  // namespace prefixtune
