#include "prefixtune/backends.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "prefixtune/errors.hpp"

namespace prefixtune {

std::string_view to_string(EvalStatus s) {
  switch (s) {
    case EvalStatus::ok: return "ok";
    case EvalStatus::invalid: return "invalid";
    case EvalStatus::timeout: return "timeout";
  }
  return "?";
}

// ---------------------------------------------------------------------------
// Simulated cost

SimCostParams SimCostParams::from_json(const nlohmann::json& doc) {
  if (!doc.is_object()) throw ValidationError("sim parameters must be a JSON object");
  SimCostParams p;
  const std::map<std::string, double*> fields = {
      {"c0", &p.c0}, {"c1", &p.c1}, {"c2", &p.c2}, {"c3", &p.c3},
      {"occupancy_floor", &p.occupancy_floor}, {"shuffle_comm", &p.shuffle_comm},
      {"spill_weight", &p.spill_weight}};
  for (const auto& [key, value] : doc.items()) {
    auto it = fields.find(key);
    if (it == fields.end()) throw ValidationError("unknown sim parameter '" + key + "'");
    if (!value.is_number()) throw ValidationError("sim parameter '" + key + "' must be a number");
    *it->second = value.get<double>();
  }
  if (p.occupancy_floor <= 0.0) throw ValidationError("occupancy_floor must be positive");
  if (p.c0 + p.c1 <= 0.0) throw ValidationError("c0 + c1 must be positive");
  if (p.spill_weight < 0.0) throw ValidationError("spill_weight must be non-negative");
  return p;
}

nlohmann::json SimCostParams::to_json() const {
  return {{"c0", c0}, {"c1", c1}, {"c2", c2}, {"c3", c3},
          {"occupancy_floor", occupancy_floor}, {"shuffle_comm", shuffle_comm},
          {"spill_weight", spill_weight}};
}

long long sim_batches(long long n) { return std::max(1LL, (1LL << 26) / n); }

namespace {

double kernel_time(Algorithm a, const KernelConfig& c, long long elements_total, int steps,
                   const ArchDescriptor& arch, const SimCostParams& p, bool multi_kernel) {
  const auto usage = resource_usage(a, c, arch, multi_kernel);
  const auto occ = compute_occupancy(arch, usage);
  if (occ.active_blocks < 1) throw ValidationError("no block fits on an SM");
  const int wanted = estimate_registers(a, c.p_per_thread);
  const double spill =
      1.0 + p.spill_weight * std::max(0, wanted - usage.registers_per_thread) /
                static_cast<double>(usage.registers_per_thread);
  const long long per_block = c.elements_per_block();
  const long long blocks = (elements_total + per_block - 1) / per_block;
  const long long concurrent = static_cast<long long>(occ.active_blocks) * arch.sm_count;
  const long long waves = (blocks + concurrent - 1) / concurrent;
  const double comm = c.shuffle ? p.shuffle_comm : 1.0;
  return static_cast<double>(waves) * steps * spill *
         (p.c0 + p.c1 * c.p_per_thread + p.c2 * comm) /
         std::max(occ.warp_occupancy, p.occupancy_floor);
}

}  // namespace

double sim_cost(const Candidate& candidate, const ProblemInstance& instance,
                const ArchDescriptor& arch, const SimCostParams& params) {
  const Algorithm a = instance.algorithm;
  const long long n = instance.n_size;
  const auto v = is_valid(candidate, a, n, arch);
  if (!v) throw ValidationError(v.reason);
  const long long total = n * std::max(instance.batches, 1LL);

  if (const auto* k = std::get_if<KernelConfig>(&candidate)) {
    const int steps = steps_count({a, n, instance.batches, k->radix});
    return kernel_time(a, *k, total, steps, arch, params, false);
  }
  const auto& plan = std::get<MultiKernelPlan>(candidate);
  int remaining = log2_ceil(n);
  double t = 0.0;
  for (const auto& k : plan.kernel_configs) {
    const int radix_bits = log2_ceil(k.radix);
    const int bits = std::min(remaining, plan_kernel_bits(k));
    remaining -= bits;
    const int steps = (bits + radix_bits - 1) / radix_bits;
    t += kernel_time(a, k, total, steps, arch, params, true);
  }
  return t + params.c3 * (plan.kernel_count() - 1);
}

// ---------------------------------------------------------------------------
// Measurement table

MeasurementKey measurement_key(Algorithm a, long long n, const KernelConfig& c) {
  return {std::string(to_string(a)), n, c.s_elems, c.p_per_thread, c.l_threads, c.radix, c.shuffle};
}

namespace {

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(sep, start);
    out.push_back(line.substr(start, pos == std::string_view::npos ? pos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

template <typename T>
T parse_number(std::string_view s, std::string_view what, std::size_t line) {
  T value{};
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw ValidationError("line " + std::to_string(line) + ": bad " + std::string(what) + " '" +
                          std::string(s) + "'");
  return value;
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

MeasurementTable parse_table(std::string_view text, std::string provenance) {
  MeasurementTable table;
  table.provenance = std::move(provenance);
  std::size_t line_no = 0;
  bool header_seen = false;
  for (auto raw : split(text, '\n')) {
    ++line_no;
    const auto line = trim(raw);
    if (line.empty() || line.front() == '#') continue;
    if (!header_seen) {
      if (line != kTableHeader)
        throw ValidationError("table header must be '" + std::string(kTableHeader) + "'");
      header_seen = true;
      continue;
    }
    const auto cells = split(line, ',');
    if (cells.size() != 8)
      throw ValidationError("line " + std::to_string(line_no) + ": expected 8 fields");
    MeasurementKey key;
    key.algorithm = std::string(to_string(parse_algorithm(trim(cells[0]))));
    key.n_size = parse_number<long long>(trim(cells[1]), "N", line_no);
    key.s_elems = parse_number<int>(trim(cells[2]), "S", line_no);
    key.p_per_thread = parse_number<int>(trim(cells[3]), "P", line_no);
    key.l_threads = parse_number<int>(trim(cells[4]), "L", line_no);
    key.radix = parse_number<int>(trim(cells[5]), "r", line_no);
    const auto sh = trim(cells[6]);
    if (sh == "1" || sh == "true")
      key.shuffle = true;
    else if (sh == "0" || sh == "false")
      key.shuffle = false;
    else
      throw ValidationError("line " + std::to_string(line_no) + ": bad shuffle '" +
                            std::string(sh) + "'");
    const double t = parse_number<double>(trim(cells[7]), "time_us", line_no);
    if (!(t > 0.0) || !std::isfinite(t))
      throw ValidationError("line " + std::to_string(line_no) + ": time must be positive");
    if (!table.rows.emplace(key, t).second)
      throw ValidationError("line " + std::to_string(line_no) + ": duplicate key");
  }
  if (!header_seen) throw ValidationError("table is empty (missing header)");
  return table;
}

MeasurementTable load_table(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open table '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_table(buf.str(), path);
}

std::string format_table(const MeasurementTable& table) {
  std::string out(kTableHeader);
  out += '\n';
  for (const auto& [k, t] : table.rows) {
    out += k.algorithm + ',' + std::to_string(k.n_size) + ',' + std::to_string(k.s_elems) + ',' +
           std::to_string(k.p_per_thread) + ',' + std::to_string(k.l_threads) + ',' +
           std::to_string(k.radix) + ',' + (k.shuffle ? "1" : "0") + ',' + format_double(t) + '\n';
  }
  return out;
}

void save_table(const MeasurementTable& table, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write table '" + path + "'");
  out << format_table(table);
}

std::optional<double> table_lookup(const MeasurementTable& table, const Candidate& c, Algorithm a,
                                   long long n) {
  const auto* k = std::get_if<KernelConfig>(&c);
  if (!k) return std::nullopt;
  const auto it = table.rows.find(measurement_key(a, n, *k));
  if (it == table.rows.end()) return std::nullopt;
  return it->second;
}

// ---------------------------------------------------------------------------
// External command

std::vector<std::string> expand_arguments(const CommandSpec& spec, const Candidate& c, Algorithm a,
                                          long long n) {
  const auto kernels = kernels_of(c);
  auto join = [&](auto field) {
    std::string out;
    for (const auto& k : kernels) {
      if (!out.empty()) out += ',';
      out += field(k);
    }
    return out;
  };
  const std::vector<std::pair<std::string, std::string>> subs = {
      {"{ALGO}", std::string(to_string(a))},
      {"{N}", std::to_string(n)},
      {"{S}", join([](const KernelConfig& k) { return std::to_string(k.s_elems); })},
      {"{P}", join([](const KernelConfig& k) { return std::to_string(k.p_per_thread); })},
      {"{L}", join([](const KernelConfig& k) { return std::to_string(k.l_threads); })},
      {"{R}", join([](const KernelConfig& k) { return std::to_string(k.radix); })},
      {"{SHUFFLE}", join([](const KernelConfig& k) { return std::string(k.shuffle ? "1" : "0"); })},
  };
  std::vector<std::string> out;
  for (auto arg : spec.arguments) {
    for (const auto& [key, value] : subs) {
      for (auto pos = arg.find(key); pos != std::string::npos; pos = arg.find(key, pos + value.size()))
        arg.replace(pos, key.size(), value);
    }
    out.push_back(std::move(arg));
  }
  return out;
}

namespace {

std::optional<double> parse_time_output(const std::string& out) {
  auto text = trim(out);
  while (!text.empty() && (text.back() == '\n' || text.back() == '\r')) {
    text.remove_suffix(1);
    text = trim(text);
  }
  if (text.empty() || text.find('\n') != std::string_view::npos) return std::nullopt;
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) return std::nullopt;
  if (!(value > 0.0) || !std::isfinite(value)) return std::nullopt;
  return value;
}

}  // namespace

Evaluation external_evaluate(const CommandSpec& spec, const Candidate& c, Algorithm a, long long n) {
  Evaluation ev{c, 0.0, EvalStatus::invalid};
  if (spec.timeout_seconds <= 0.0) throw ValidationError("command timeout must be positive");

  auto args = expand_arguments(spec, c, a, n);
  std::vector<char*> argv;
  argv.push_back(const_cast<char*>(spec.executable.c_str()));
  for (auto& s : args) argv.push_back(s.data());
  argv.push_back(nullptr);

  int fds[2];
  if (pipe(fds) != 0) return ev;
  const pid_t pid = fork();
  if (pid < 0) {
    close(fds[0]);
    close(fds[1]);
    return ev;
  }
  if (pid == 0) {
    setpgid(0, 0);
    dup2(fds[1], STDOUT_FILENO);
    close(fds[0]);
    close(fds[1]);
    execv(spec.executable.c_str(), argv.data());
    _exit(127);
  }
  setpgid(pid, pid);
  close(fds[1]);
  fcntl(fds[0], F_SETFL, fcntl(fds[0], F_GETFL) | O_NONBLOCK);

  using clock = std::chrono::steady_clock;
  const auto deadline =
      clock::now() + std::chrono::duration_cast<clock::duration>(
                         std::chrono::duration<double>(spec.timeout_seconds));
  std::string output;
  bool pipe_open = true;
  bool timed_out = false;
  int status = 0;
  bool reaped = false;
  while (true) {
    if (!reaped) {
      const pid_t w = waitpid(pid, &status, WNOHANG);
      if (w == pid) reaped = true;
    }
    if (reaped && !pipe_open) break;
    const auto now = clock::now();
    if (now >= deadline) {
      timed_out = !reaped;
      break;
    }
    const int wait_ms = static_cast<int>(std::min<long long>(
        50, std::chrono::duration_cast<std::chrono::milliseconds>(deadline - now).count() + 1));
    if (pipe_open) {
      pollfd pfd{fds[0], POLLIN, 0};
      if (poll(&pfd, 1, wait_ms) > 0) {
        char buf[4096];
        const ssize_t got = read(fds[0], buf, sizeof buf);
        if (got > 0)
          output.append(buf, static_cast<std::size_t>(got));
        else if (got == 0 || (errno != EAGAIN && errno != EINTR))
          pipe_open = false;
      }
    } else {
      usleep(static_cast<useconds_t>(wait_ms) * 1000);
    }
  }
  close(fds[0]);
  if (!reaped) {
    kill(-pid, SIGKILL);
    kill(pid, SIGKILL);
    waitpid(pid, &status, 0);
  }
  if (timed_out) {
    ev.status = EvalStatus::timeout;
    return ev;
  }
  if (!WIFEXITED(status) || WEXITSTATUS(status) != 0) return ev;
  if (const auto t = parse_time_output(output)) {
    ev.time = *t;
    ev.status = EvalStatus::ok;
  }
  return ev;
}

// ---------------------------------------------------------------------------
// Backends

SimBackend::SimBackend(ArchDescriptor arch, SimCostParams params)
    : arch_(std::move(arch)), params_(params) {}

Evaluation SimBackend::evaluate(const Candidate& c, Algorithm a, long long n) {
  try {
    return {c, sim_cost(c, {a, n, sim_batches(n), 2}, arch_, params_), EvalStatus::ok};
  } catch (const ValidationError&) {
    return {c, 0.0, EvalStatus::invalid};
  }
}

TableBackend::TableBackend(MeasurementTable table, std::string label)
    : table_(std::move(table)), label_(std::move(label)) {}

Evaluation TableBackend::evaluate(const Candidate& c, Algorithm a, long long n) {
  if (const auto t = table_lookup(table_, c, a, n)) return {c, *t, EvalStatus::ok};
  return {c, 0.0, EvalStatus::invalid};
}

CommandBackend::CommandBackend(CommandSpec spec) : spec_(std::move(spec)) {
  if (spec_.timeout_seconds <= 0.0) throw ValidationError("command timeout must be positive");
}

Evaluation CommandBackend::evaluate(const Candidate& c, Algorithm a, long long n) {
  return external_evaluate(spec_, c, a, n);
}

std::unique_ptr<Backend> make_backend(std::string_view selector, const ArchDescriptor& arch,
                                      const BackendOptions& options) {
  if (selector == "sim") return std::make_unique<SimBackend>(arch, options.sim);
  if (selector.starts_with("table:")) {
    const std::string path(selector.substr(6));
    return std::make_unique<TableBackend>(load_table(path), "table:" + path);
  }
  if (selector.starts_with("cmd:")) {
    CommandSpec spec;
    spec.executable = std::string(selector.substr(4));
    spec.timeout_seconds = options.command_timeout_seconds;
    if (spec.executable.empty()) throw ValidationError("cmd backend needs an executable path");
    if (access(spec.executable.c_str(), X_OK) != 0)
      throw ValidationError("'" + spec.executable + "' is not an executable file");
    return std::make_unique<CommandBackend>(std::move(spec));
  }
  throw ValidationError("unknown backend '" + std::string(selector) +
                        "' (expected sim, table:<path> or cmd:<path>)");
}

MeasurementTable dump_sim_table(const SearchSpace& space, const ArchDescriptor& arch,
                                const SimCostParams& params) {
  MeasurementTable table;
  table.provenance = "sim";
  for (const auto& c : space.candidates) {
    const auto* k = std::get_if<KernelConfig>(&c);
    if (!k) continue;
    const double t =
        sim_cost(c, {space.algorithm, space.n_size, sim_batches(space.n_size), 2}, arch, params);
    table.rows.emplace(measurement_key(space.algorithm, space.n_size, *k), t);
  }
  return table;
}

}  // namespace prefixtune
