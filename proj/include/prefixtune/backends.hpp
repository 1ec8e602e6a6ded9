#pragma once

// Objective functions mapping a candidate to an execution time.

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "prefixtune/algorithm.hpp"
#include "prefixtune/arch.hpp"
#include "prefixtune/kernels.hpp"
#include "prefixtune/search_space.hpp"

namespace prefixtune {

enum class EvalStatus { ok, invalid, timeout };
std::string_view to_string(EvalStatus s);

struct Evaluation {
  Candidate config;
  double time = 0.0;  // microseconds, or the penalty when status != ok
  EvalStatus status = EvalStatus::ok;
};

// ---------------------------------------------------------------------------
// Simulated cost

struct SimCostParams {
  double c0 = 1.0;
  double c1 = 0.25;
  double c2 = 1.0;
  double c3 = 50.0;
  double occupancy_floor = 0.05;
  double shuffle_comm = 0.25;
  // Cost multiplier per unit of relative register overshoot when the
  // launch bound forces spilling.
  double spill_weight = 4.0;

  // Unknown keys are rejected; missing keys keep their defaults.
  static SimCostParams from_json(const nlohmann::json& doc);
  nlohmann::json to_json() const;
};

// Batch size used by the simulation: 2^26 / N problems.
long long sim_batches(long long n);

// Throws ValidationError when the candidate is invalid for the instance.
double sim_cost(const Candidate& candidate, const ProblemInstance& instance,
                const ArchDescriptor& arch, const SimCostParams& params = {});

// ---------------------------------------------------------------------------
// Measurement table

struct MeasurementKey {
  std::string algorithm;
  long long n_size = 0;
  int s_elems = 0;
  int p_per_thread = 0;
  int l_threads = 0;
  int radix = 0;
  bool shuffle = false;
  auto operator<=>(const MeasurementKey&) const = default;
};

MeasurementKey measurement_key(Algorithm a, long long n, const KernelConfig& c);

struct MeasurementTable {
  std::map<MeasurementKey, double> rows;  // time in microseconds
  std::string provenance;
};

inline constexpr std::string_view kTableHeader = "algorithm,N,S,P,L,r,shuffle,time_us";

// Throws ValidationError on malformed rows, duplicate keys or bad header.
MeasurementTable load_table(const std::string& path);
MeasurementTable parse_table(std::string_view text, std::string provenance = {});
std::string format_table(const MeasurementTable& table);
void save_table(const MeasurementTable& table, const std::string& path);

// Exact-key lookup; plans and misses give std::nullopt.
std::optional<double> table_lookup(const MeasurementTable& table, const Candidate& c, Algorithm a,
                                   long long n);

// ---------------------------------------------------------------------------
// External command

struct CommandSpec {
  std::string executable;
  // Placeholders {ALGO} {N} {S} {P} {L} {R} {SHUFFLE}; for plans, the
  // per-kernel placeholders expand to comma-separated lists.
  std::vector<std::string> arguments = {"{ALGO}", "{N}", "{S}", "{P}", "{L}", "{R}", "{SHUFFLE}"};
  double timeout_seconds = 60.0;
  bool concurrency_safe = false;
};

std::vector<std::string> expand_arguments(const CommandSpec& spec, const Candidate& c, Algorithm a,
                                          long long n);

// Runs the command; time is the single decimal number printed on stdout.
// Status is invalid on spawn failure, nonzero exit or malformed output and
// timeout when the wall clock exceeds spec.timeout_seconds.
Evaluation external_evaluate(const CommandSpec& spec, const Candidate& c, Algorithm a, long long n);

// ---------------------------------------------------------------------------
// Backend selection

class Backend {
 public:
  virtual ~Backend() = default;
  // time is meaningful only when status == ok; the tuner applies penalties.
  virtual Evaluation evaluate(const Candidate& c, Algorithm a, long long n) = 0;
  virtual bool concurrency_safe() const = 0;
  virtual std::string name() const = 0;
};

class SimBackend final : public Backend {
 public:
  explicit SimBackend(ArchDescriptor arch, SimCostParams params = {});
  Evaluation evaluate(const Candidate& c, Algorithm a, long long n) override;
  bool concurrency_safe() const override { return true; }
  std::string name() const override { return "sim"; }

 private:
  ArchDescriptor arch_;
  SimCostParams params_;
};

class TableBackend final : public Backend {
 public:
  explicit TableBackend(MeasurementTable table, std::string label = "table");
  Evaluation evaluate(const Candidate& c, Algorithm a, long long n) override;
  bool concurrency_safe() const override { return true; }
  std::string name() const override { return label_; }

 private:
  MeasurementTable table_;
  std::string label_;
};

class CommandBackend final : public Backend {
 public:
  explicit CommandBackend(CommandSpec spec);
  Evaluation evaluate(const Candidate& c, Algorithm a, long long n) override;
  bool concurrency_safe() const override { return spec_.concurrency_safe; }
  std::string name() const override { return "cmd:" + spec_.executable; }

 private:
  CommandSpec spec_;
};

struct BackendOptions {
  SimCostParams sim;
  double command_timeout_seconds = 60.0;
};

// Parses `sim`, `table:<path>` or `cmd:<path>`. Throws ValidationError.
std::unique_ptr<Backend> make_backend(std::string_view selector, const ArchDescriptor& arch,
                                      const BackendOptions& options = {});

// Every candidate of the space evaluated with sim_cost, as a table.
MeasurementTable dump_sim_table(const SearchSpace& space, const ArchDescriptor& arch,
                                const SimCostParams& params = {});

}  // namespace prefixtune
