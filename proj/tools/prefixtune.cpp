// prefixtune command-line front end.

#include <CLI11.hpp>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "prefixtune/analytical.hpp"
#include "prefixtune/arch.hpp"
#include "prefixtune/backends.hpp"
#include "prefixtune/bayes.hpp"
#include "prefixtune/errors.hpp"
#include "prefixtune/metrics.hpp"
#include "prefixtune/verify.hpp"

namespace fs = std::filesystem;
using namespace prefixtune;

namespace {

enum Exit { kOk = 0, kValidation = 2, kNoFeasible = 3, kBackend = 4 };

struct Common {
  std::string arch_path;
  std::string out_path;
  std::string backend = "sim";
  std::string sim_params;
  double timeout = 60.0;
};

struct Options {
  Common common;
  std::string algo;
  long long n = 0;
  std::string sizes;
  std::string method;
  std::string format = "json";
  std::uint64_t seed = 0;
  std::uint64_t verify_seed = 1;  // separate: CLI11 defaults write through
  int budget = 40;
  int window = kDefaultWindow;
  int threads = 0;
  int regs = 0;
  int smem = 0;
};

void log(const std::string& line) { std::cerr << "prefixtune: " << line << '\n'; }

std::string resolve_arch(const std::string& flag) {
  std::string path = flag;
  if (path.empty())
    if (const char* env = std::getenv("PREFIXTUNE_ARCH"); env && *env) path = env;
  if (path.empty()) return std::string(PREFIXTUNE_DATA_DIR) + "/gm20b.json";
  // A bare file name that is not in the working directory may be a bundled one.
  if (!fs::exists(path) && fs::path(path).parent_path().empty()) {
    const auto bundled = fs::path(PREFIXTUNE_DATA_DIR) / path;
    if (fs::exists(bundled)) return bundled.string();
  }
  return path;
}

ArchDescriptor load(const Common& c) { return load_arch(resolve_arch(c.arch_path)); }

std::unique_ptr<Backend> backend_for(const Common& c, const ArchDescriptor& arch) {
  BackendOptions opts;
  opts.command_timeout_seconds = c.timeout;
  if (!c.sim_params.empty()) {
    std::ifstream in(c.sim_params);
    if (!in) throw ValidationError("cannot open sim parameters '" + c.sim_params + "'");
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError("sim parameters: " + std::string(e.what()));
    }
    opts.sim = SimCostParams::from_json(doc);
  }
  return make_backend(c.backend, arch, opts);
}

void emit(const Common& c, const std::string& text) {
  if (c.out_path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(c.out_path, std::ios::binary);
  if (!out) throw ValidationError("cannot write '" + c.out_path + "'");
  out << text;
  if (!out) throw ValidationError("write to '" + c.out_path + "' failed");
}

std::string dump(const nlohmann::json& j) { return j.dump(2) + "\n"; }

long long parse_size(const std::string& text) {
  std::size_t used = 0;
  long long v = 0;
  try {
    v = std::stoll(text, &used);
  } catch (const std::exception&) {
    throw ValidationError("bad size '" + text + "'");
  }
  if (used != text.size() || v <= 0) throw ValidationError("bad size '" + text + "'");
  return v;
}

// "64..1024" expands to the powers of two in range; "64,256" is a list.
std::vector<long long> parse_sizes(const std::string& text) {
  std::vector<long long> out;
  if (const auto dots = text.find(".."); dots != std::string::npos) {
    const long long lo = parse_size(text.substr(0, dots));
    const long long hi = parse_size(text.substr(dots + 2));
    if (lo > hi) throw ValidationError("empty size range '" + text + "'");
    for (long long n = 1; n <= hi; n *= 2)
      if (n >= lo) out.push_back(n);
  } else {
    std::stringstream in(text);
    std::string item;
    while (std::getline(in, item, ',')) out.push_back(parse_size(item));
  }
  if (out.empty()) throw ValidationError("no sizes in '" + text + "'");
  return out;
}

nlohmann::json occupancy_json(const OccupancyReport& r) {
  return {{"active_blocks", r.active_blocks},
          {"active_warps", r.active_warps},
          {"warp_occupancy", r.warp_occupancy},
          {"limiting_resource", std::string(to_string(r.limiting_resource))}};
}

int cmd_occupancy(const Options& o) {
  const auto arch = load(o.common);
  const auto r = compute_occupancy(arch, {o.threads, o.regs, o.smem});
  if (o.format == "text") {
    std::ostringstream s;
    s << "occupancy " << std::lround(100.0 * r.warp_occupancy) << "%  blocks " << r.active_blocks
      << "  warps " << r.active_warps << "  limited by " << to_string(r.limiting_resource) << '\n';
    emit(o.common, s.str());
  } else {
    emit(o.common, dump(occupancy_json(r)));
  }
  return kOk;
}

nlohmann::json exhaustive_json(const SearchSpace& space, const ExhaustiveResult& r) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& e : r.evaluations)
    rows.push_back({{"config", to_json(e.config)},
                    {"time", e.time},
                    {"status", std::string(to_string(e.status))}});
  return {{"algorithm", std::string(to_string(space.algorithm))},
          {"N", space.n_size},
          {"best", {{"config", to_json(r.best.config)}, {"time", r.best.time}}},
          {"evaluations", rows}};
}

int cmd_tune(const Options& o) {
  const auto a = parse_algorithm(o.algo);
  const auto arch = load(o.common);
  if (o.method == "analytical") {
    if (is_multi_kernel_size(a, o.n)) {
      emit(o.common, dump({{"algorithm", std::string(to_string(a))},
                           {"N", o.n},
                           {"chosen", to_json(Candidate(plan_large_fft(o.n, arch)))}}));
    } else {
      emit(o.common, dump(to_json(tune_analytical(a, o.n, arch))));
    }
    return kOk;
  }
  auto backend = backend_for(o.common, arch);
  const auto space = enumerate(a, o.n, arch);
  log("space " + std::string(to_string(a)) + " N=" + std::to_string(o.n) + ": " +
      std::to_string(space.size()) + " candidates, backend " + backend->name());
  if (o.method == "exhaustive") {
    emit(o.common, dump(exhaustive_json(space, exhaustive_search(space, *backend))));
    return kOk;
  }
  const auto run = tune_bo(space, *backend, o.budget, o.window, o.seed);
  log("bo stopped (" + std::string(to_string(run.stop_reason)) + ") after " +
      std::to_string(run.evaluations_used) + " evaluations");
  emit(o.common, dump(to_json(run)));
  if (!run.best) throw BackendError("no evaluation succeeded");
  return kOk;
}

int cmd_exhaustive(const Options& o) {
  Options copy = o;
  copy.method = "exhaustive";
  return cmd_tune(copy);
}

int cmd_compare(const Options& o) {
  const auto a = parse_algorithm(o.algo);
  const auto arch = load(o.common);
  auto backend = backend_for(o.common, arch);
  const auto sizes = parse_sizes(o.sizes);
  log("compare " + std::string(to_string(a)) + " over " + std::to_string(sizes.size()) +
      " sizes, backend " + backend->name());
  const auto reports = run_compare(a, sizes, *backend, arch, {o.budget, o.window, o.seed});
  for (const auto& r : reports)
    for (const auto& s : r.sizes)
      if (!s.chosen_config || s.best_time <= 0.0)
        log(r.method + " produced no usable result at N=" + std::to_string(s.n_size));
  emit(o.common, o.format == "text" ? compare_table(reports) : dump(compare_json(reports)));
  return kOk;
}

int cmd_verify(const Options& o) {
  VerifyOptions v;
  v.seed = o.verify_seed;
  const auto checks = verify_kernels(v);
  std::ostringstream s;
  bool all = true;
  for (const auto& c : checks) {
    all = all && c.passed;
    s << (c.passed ? "PASS " : "FAIL ") << c.name << "  trials=" << c.trials << " worst=" << c.worst;
    if (!c.detail.empty()) s << "  " << c.detail;
    s << '\n';
  }
  emit(o.common, s.str());
  return all ? kOk : 1;
}

void add_common(CLI::App* app, Common& c, bool with_backend) {
  app->add_option("--arch", c.arch_path, "architecture descriptor (JSON)");
  app->add_option("--out", c.out_path, "write the artifact here instead of stdout");
  if (with_backend) {
    app->add_option("--backend", c.backend, "sim | table:<csv> | cmd:<executable>");
    app->add_option("--sim-params", c.sim_params, "JSON overrides for the simulated cost");
    app->add_option("--timeout", c.timeout, "per-evaluation timeout for cmd backends, seconds")
        ->check(CLI::PositiveNumber);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Occupancy-driven and Bayesian tuning of parallel-prefix GPU kernels"};
  app.require_subcommand(1);
  Options o;

  auto* occ = app.add_subcommand("occupancy", "occupancy of one kernel launch");
  add_common(occ, o.common, false);
  occ->add_option("--threads", o.threads, "threads per block")->required();
  occ->add_option("--regs", o.regs, "registers per thread")->required();
  occ->add_option("--smem", o.smem, "shared memory per block, bytes")->default_val(0);
  occ->add_option("--format", o.format, "json | text")->check(CLI::IsMember({"json", "text"}));

  auto* tune = app.add_subcommand("tune", "tune one problem size");
  add_common(tune, o.common, true);
  tune->add_option("--algo", o.algo, "scan_lf scan_ks ts_cr ts_pcr ts_wm ts_lf fft")->required();
  tune->add_option("--n", o.n, "problem size")->required();
  tune->add_option("--method", o.method, "analytical | bo | exhaustive")
      ->required()
      ->check(CLI::IsMember({"analytical", "bo", "exhaustive"}));

  auto* exh = app.add_subcommand("exhaustive", "evaluate every candidate of one size");
  add_common(exh, o.common, true);
  exh->add_option("--algo", o.algo)->required();
  exh->add_option("--n", o.n)->required();

  auto* cmp = app.add_subcommand("compare", "analytical vs BO vs exhaustive over a size set");
  add_common(cmp, o.common, true);
  cmp->add_option("--algo", o.algo)->required();
  cmp->add_option("--sizes", o.sizes, "64..1024 (powers of two) or 64,128,...")->required();
  cmp->add_option("--format", o.format, "json | text")->check(CLI::IsMember({"json", "text"}));

  for (auto* sub : {tune, cmp}) {
    sub->add_option("--seed", o.seed, "random seed")->default_val(0);
    sub->add_option("--budget", o.budget, "BO evaluation budget")->default_val(40);
    sub->add_option("--window", o.window, "BO stall window")->default_val(kDefaultWindow);
  }

  auto* ver = app.add_subcommand("kernels-verify", "check every kernel against its oracle");
  add_common(ver, o.common, false);
  ver->add_option("--seed", o.verify_seed, "random seed")->default_val(1);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kValidation;
  }

  try {
    if (*occ) return cmd_occupancy(o);
    if (*tune) return cmd_tune(o);
    if (*exh) return cmd_exhaustive(o);
    if (*cmp) return cmd_compare(o);
    if (*ver) return cmd_verify(o);
  } catch (const ValidationError& e) {
    log(std::string("error: ") + e.what());
    return kValidation;
  } catch (const NoFeasibleConfigError& e) {
    log(std::string("error: ") + e.what());
    return kNoFeasible;
  } catch (const BackendError& e) {
    log(std::string("error: ") + e.what());
    return kBackend;
  } catch (const Error& e) {
    log(std::string("error: ") + e.what());
    return 1;
  }
  return kValidation;
}
