#include "prefixtune/arch.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <limits>
#include <sstream>

#include "prefixtune/errors.hpp"

namespace prefixtune {
namespace {

int round_up(int value, int granularity) {
  if (granularity <= 1) return value;
  return (value + granularity - 1) / granularity * granularity;
}

void require(bool ok, const std::string& what) {
  if (!ok) throw ValidationError("invalid architecture descriptor: " + what);
}

// Key order of the descriptor document.
constexpr std::array<std::string_view, 13> kFields = {
    "name",
    "sm_count",
    "warp_size",
    "max_warps_per_sm",
    "max_blocks_per_sm",
    "registers_per_sm",
    "max_registers_per_block",
    "register_alloc_granularity",
    "sm_subpartitions",
    "shared_mem_per_sm",
    "max_shared_mem_per_block",
    "shared_mem_alloc_granularity",
    "max_threads_per_block",
};

int* int_field(ArchDescriptor& a, std::string_view key) {
  if (key == "sm_count") return &a.sm_count;
  if (key == "warp_size") return &a.warp_size;
  if (key == "max_warps_per_sm") return &a.max_warps_per_sm;
  if (key == "max_blocks_per_sm") return &a.max_blocks_per_sm;
  if (key == "registers_per_sm") return &a.registers_per_sm;
  if (key == "max_registers_per_block") return &a.max_registers_per_block;
  if (key == "register_alloc_granularity") return &a.register_alloc_granularity;
  if (key == "sm_subpartitions") return &a.sm_subpartitions;
  if (key == "shared_mem_per_sm") return &a.shared_mem_per_sm;
  if (key == "max_shared_mem_per_block") return &a.max_shared_mem_per_block;
  if (key == "shared_mem_alloc_granularity") return &a.shared_mem_alloc_granularity;
  if (key == "max_threads_per_block") return &a.max_threads_per_block;
  return nullptr;
}

}  // namespace

ArchDescriptor ArchDescriptor::gm20b() {
  ArchDescriptor a;
  a.name = "gm20b";
  a.sm_count = 2;
  a.warp_size = 32;
  a.max_warps_per_sm = 64;
  a.max_blocks_per_sm = 32;
  a.registers_per_sm = 65536;
  a.max_registers_per_block = 32768;
  a.register_alloc_granularity = 256;
  a.sm_subpartitions = 4;
  a.shared_mem_per_sm = 65536;
  a.max_shared_mem_per_block = 49152;
  a.shared_mem_alloc_granularity = 256;
  a.max_threads_per_block = 1024;
  return a;
}

void ArchDescriptor::validate() const {
  require(!name.empty(), "name must not be empty");
  require(sm_count > 0, "sm_count must be positive");
  require(warp_size > 0, "warp_size must be positive");
  require(max_warps_per_sm > 0, "max_warps_per_sm must be positive");
  require(max_blocks_per_sm > 0, "max_blocks_per_sm must be positive");
  require(registers_per_sm > 0, "registers_per_sm must be positive");
  require(max_registers_per_block > 0, "max_registers_per_block must be positive");
  require(register_alloc_granularity > 0, "register_alloc_granularity must be positive");
  require(sm_subpartitions > 0, "sm_subpartitions must be positive");
  require(shared_mem_per_sm >= 0, "shared_mem_per_sm must be non-negative");
  require(max_shared_mem_per_block >= 0, "max_shared_mem_per_block must be non-negative");
  require(shared_mem_alloc_granularity > 0, "shared_mem_alloc_granularity must be positive");
  require(max_threads_per_block > 0, "max_threads_per_block must be positive");
  require(static_cast<long long>(max_warps_per_sm) * warp_size >= max_threads_per_block,
          "max_warps_per_sm * warp_size must cover max_threads_per_block");
  require(max_registers_per_block <= registers_per_sm,
          "max_registers_per_block exceeds registers_per_sm");
  require(max_shared_mem_per_block <= shared_mem_per_sm,
          "max_shared_mem_per_block exceeds shared_mem_per_sm");
  require(registers_per_sm % sm_subpartitions == 0,
          "registers_per_sm must be divisible by sm_subpartitions");
}

std::string_view to_string(LimitingResource r) {
  switch (r) {
    case LimitingResource::warps: return "warps";
    case LimitingResource::blocks: return "blocks";
    case LimitingResource::registers: return "registers";
    case LimitingResource::shared_memory: return "shared_memory";
    case LimitingResource::threads: return "threads";
  }
  return "unknown";
}

int warps_per_block(const ArchDescriptor& arch, int threads_per_block) {
  return (threads_per_block + arch.warp_size - 1) / arch.warp_size;
}

OccupancyReport compute_occupancy(const ArchDescriptor& arch, const KernelResourceUsage& usage) {
  if (usage.threads_per_block <= 0)
    throw ValidationError("threads_per_block must be positive");
  if (usage.registers_per_thread < 0 || usage.shared_mem_per_block < 0)
    throw ValidationError("resource usage must be non-negative");
  if (usage.threads_per_block > arch.max_threads_per_block)
    throw ValidationError("threads_per_block " + std::to_string(usage.threads_per_block) +
                          " exceeds max_threads_per_block " +
                          std::to_string(arch.max_threads_per_block));
  if (static_cast<long long>(usage.registers_per_thread) * usage.threads_per_block >
      arch.max_registers_per_block)
    throw ValidationError("registers per block " +
                          std::to_string(usage.registers_per_thread * usage.threads_per_block) +
                          " exceeds max_registers_per_block " +
                          std::to_string(arch.max_registers_per_block));
  if (usage.shared_mem_per_block > arch.max_shared_mem_per_block)
    throw ValidationError("shared memory per block " + std::to_string(usage.shared_mem_per_block) +
                          " exceeds max_shared_mem_per_block " +
                          std::to_string(arch.max_shared_mem_per_block));

  const int wpb = warps_per_block(arch, usage.threads_per_block);
  constexpr int kUnbounded = std::numeric_limits<int>::max();

  // Candidate limits in tie-break order.
  const int by_blocks = arch.max_blocks_per_sm;
  const int by_warps = arch.max_warps_per_sm / wpb;

  int by_regs = kUnbounded;
  if (usage.registers_per_thread > 0) {
    const int per_warp =
        round_up(usage.registers_per_thread * arch.warp_size, arch.register_alloc_granularity);
    const int slice = arch.registers_per_sm / arch.sm_subpartitions;
    const int warps_by_regs = arch.sm_subpartitions * (slice / per_warp);
    by_regs = warps_by_regs / wpb;
  }

  int by_smem = kUnbounded;
  if (usage.shared_mem_per_block > 0) {
    by_smem = arch.shared_mem_per_sm /
              round_up(usage.shared_mem_per_block, arch.shared_mem_alloc_granularity);
  }

  OccupancyReport report;
  report.active_blocks = by_blocks;
  report.limiting_resource = LimitingResource::blocks;
  const std::array<std::pair<int, LimitingResource>, 3> rest = {{
      {by_warps, LimitingResource::warps},
      {by_regs, LimitingResource::registers},
      {by_smem, LimitingResource::shared_memory},
  }};
  for (const auto& [limit, resource] : rest) {
    if (limit < report.active_blocks) {
      report.active_blocks = limit;
      report.limiting_resource = resource;
    }
  }
  report.active_warps = report.active_blocks * wpb;
  report.warp_occupancy =
      static_cast<double>(report.active_warps) / static_cast<double>(arch.max_warps_per_sm);
  return report;
}

nlohmann::json to_json(const ArchDescriptor& arch) {
  nlohmann::json doc;
  ArchDescriptor copy = arch;
  doc["name"] = arch.name;
  for (auto key : kFields) {
    if (key == "name") continue;
    doc[std::string(key)] = *int_field(copy, key);
  }
  return doc;
}

ArchDescriptor arch_from_json(const nlohmann::json& doc) {
  if (!doc.is_object()) throw ValidationError("architecture descriptor must be a JSON object");
  for (const auto& [key, value] : doc.items()) {
    if (std::find(kFields.begin(), kFields.end(), key) == kFields.end())
      throw ValidationError("unknown architecture field: " + key);
  }
  ArchDescriptor a;
  for (auto key : kFields) {
    const std::string k(key);
    if (!doc.contains(k)) throw ValidationError("missing architecture field: " + k);
    const auto& v = doc.at(k);
    if (key == "name") {
      if (!v.is_string()) throw ValidationError("architecture field name must be a string");
      a.name = v.get<std::string>();
      continue;
    }
    if (!v.is_number_integer())
      throw ValidationError("architecture field " + k + " must be an integer");
    const auto raw = v.get<long long>();
    if (raw < std::numeric_limits<int>::min() || raw > std::numeric_limits<int>::max())
      throw ValidationError("architecture field " + k + " out of range");
    *int_field(a, key) = static_cast<int>(raw);
  }
  a.validate();
  return a;
}

ArchDescriptor load_arch(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open architecture descriptor: " + path);
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError("cannot parse architecture descriptor " + path + ": " + e.what());
  }
  return arch_from_json(doc);
}

}  // namespace prefixtune
