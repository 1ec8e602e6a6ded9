#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include <json.hpp>

namespace prefixtune {

// Hardware limits of one GPU-like architecture. Field names double as the
// keys of the JSON descriptor file.
struct ArchDescriptor {
  std::string name;
  int sm_count = 0;
  int warp_size = 0;
  int max_warps_per_sm = 0;
  int max_blocks_per_sm = 0;
  int registers_per_sm = 0;
  int max_registers_per_block = 0;
  int register_alloc_granularity = 0;
  int sm_subpartitions = 0;
  int shared_mem_per_sm = 0;
  int max_shared_mem_per_block = 0;
  int shared_mem_alloc_granularity = 0;
  int max_threads_per_block = 0;

  // Jetson TX1 integrated GPU (Maxwell GM20B).
  static ArchDescriptor gm20b();

  // Throws ValidationError naming the first violated invariant.
  void validate() const;

  bool operator==(const ArchDescriptor&) const = default;
};

struct KernelResourceUsage {
  int threads_per_block = 0;
  int registers_per_thread = 0;
  int shared_mem_per_block = 0;  // bytes
};

enum class LimitingResource { warps, blocks, registers, shared_memory, threads };

std::string_view to_string(LimitingResource r);

struct OccupancyReport {
  int active_blocks = 0;
  int active_warps = 0;
  double warp_occupancy = 0.0;
  LimitingResource limiting_resource = LimitingResource::blocks;

  bool operator==(const OccupancyReport&) const = default;
};

// Per-SM residency of a kernel. Registers are allocated per warp, rounded to
// the allocation granularity, inside each of the equal register-file slices.
OccupancyReport compute_occupancy(const ArchDescriptor& arch, const KernelResourceUsage& usage);

int warps_per_block(const ArchDescriptor& arch, int threads_per_block);

nlohmann::json to_json(const ArchDescriptor& arch);
// Rejects unknown keys, missing keys and non-integer values, then validates.
ArchDescriptor arch_from_json(const nlohmann::json& doc);
ArchDescriptor load_arch(const std::string& path);

}  // namespace prefixtune
