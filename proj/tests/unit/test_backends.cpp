#include <doctest.h>

#include <chrono>
#include <cstdio>
#include <filesystem>

#include "prefixtune/analytical.hpp"
#include "prefixtune/backends.hpp"
#include "prefixtune/bayes.hpp"
#include "prefixtune/errors.hpp"

using namespace prefixtune;

namespace {

const ArchDescriptor kArch = ArchDescriptor::gm20b();

std::string stub(const char* name) { return std::string(PREFIXTUNE_TEST_DIR) + "/stubs/" + name; }

ProblemInstance instance(Algorithm a, long long n) { return {a, n, sim_batches(n), 2}; }

CommandSpec command(const char* name, double timeout = 60.0) {
  CommandSpec spec;
  spec.executable = stub(name);
  spec.timeout_seconds = timeout;
  return spec;
}

const Candidate kWm{KernelConfig{1024, 4, 256, 4, false}};

}  // namespace

TEST_CASE("sim cost basics") {
  CHECK(sim_batches(1024) == (1LL << 16));
  const auto inst = instance(Algorithm::ts_cr, 32);
  const Candidate shuffled{KernelConfig{0, 2, 64, 2, true}};
  const Candidate shared{KernelConfig{128, 2, 64, 2, false}};
  const double a = sim_cost(shuffled, inst, kArch);
  const double b = sim_cost(shared, inst, kArch);
  CHECK(a > 0.0);
  CHECK(a < b);
  CHECK(sim_cost(shuffled, inst, kArch) == a);  // pure

  CHECK_THROWS_AS(sim_cost(Candidate(KernelConfig{0, 2, 64, 4, true}), inst, kArch), ValidationError);
}

TEST_CASE("sim cost launch overhead is c3 per extra kernel") {
  const auto plan = plan_large_fft(1 << 19, kArch);
  const auto inst = instance(Algorithm::fft, 1 << 19);
  SimCostParams free_launch;
  free_launch.c3 = 0.0;
  const double with = sim_cost(Candidate(plan), inst, kArch);
  const double without = sim_cost(Candidate(plan), inst, kArch, free_launch);
  CHECK(with - without == doctest::Approx(2 * 50.0));
}

TEST_CASE("sim cost grows with the step count") {
  // Same tile at two sizes: equal block counts and waves, one more level.
  const Candidate tile{KernelConfig{1024, 2, 512, 2, false}};
  REQUIRE(is_valid(tile, Algorithm::ts_pcr, 512, kArch));
  REQUIRE(is_valid(tile, Algorithm::ts_pcr, 1024, kArch));
  const double k9 = sim_cost(tile, instance(Algorithm::ts_pcr, 512), kArch);
  const double k10 = sim_cost(tile, instance(Algorithm::ts_pcr, 1024), kArch);
  CHECK(k10 / k9 == doctest::Approx(10.0 / 9.0));
}

TEST_CASE("sim params json") {
  SimCostParams p;
  p.c1 = 0.5;
  CHECK(SimCostParams::from_json(p.to_json()).c1 == 0.5);
  CHECK(SimCostParams::from_json(nlohmann::json::object()).c3 == 50.0);
  CHECK_THROWS_AS(SimCostParams::from_json({{"c9", 1.0}}), ValidationError);
}

TEST_CASE("sim backend statuses") {
  SimBackend sim(kArch);
  const auto ok = sim.evaluate(kWm, Algorithm::ts_wm, 1024);
  CHECK(ok.status == EvalStatus::ok);
  CHECK(ok.time > 0.0);
  const auto bad = sim.evaluate(Candidate(KernelConfig{4096, 4, 1024, 4, false}), Algorithm::ts_wm, 1024);
  CHECK(bad.status == EvalStatus::invalid);
  CHECK(sim.concurrency_safe());
}

TEST_CASE("measurement table format") {
  const std::string text =
      "algorithm,N,S,P,L,r,shuffle,time_us\n"
      "ts_wm,1024,1024,4,256,4,0,12.5\n"
      "ts_cr,64,0,2,64,2,true,3.25\n";
  const auto table = parse_table(text, "inline");
  CHECK(table.rows.size() == 2);
  CHECK(table_lookup(table, kWm, Algorithm::ts_wm, 1024) == 12.5);
  CHECK(table_lookup(table, Candidate(KernelConfig{0, 2, 64, 2, true}), Algorithm::ts_cr, 64) == 3.25);
  CHECK_FALSE(table_lookup(table, kWm, Algorithm::ts_wm, 512).has_value());
  CHECK_FALSE(table_lookup(table, Candidate(plan_large_fft(1 << 13, kArch)), Algorithm::fft, 1 << 13));

  const auto again = parse_table(format_table(table));
  CHECK(again.rows == table.rows);

  CHECK_THROWS_AS(parse_table("algo,N\n"), ValidationError);
  CHECK_THROWS_AS(parse_table(text + "ts_wm,1024,1024,4,256,4,0,99\n"), ValidationError);
  CHECK_THROWS_AS(parse_table(std::string(kTableHeader) + "\nts_wm,1024,1024,4,256\n"), ValidationError);
  CHECK_THROWS_AS(parse_table(std::string(kTableHeader) + "\nts_wm,1024,1024,4,256,4,0,-1\n"),
                  ValidationError);
  CHECK_THROWS_AS(parse_table(std::string(kTableHeader) + "\nts_wm,1024,1024,4,256,4,maybe,1\n"),
                  ValidationError);
  CHECK_THROWS_AS(load_table("/nonexistent/table.csv"), ValidationError);

  TableBackend backend(table);
  CHECK(backend.evaluate(kWm, Algorithm::ts_wm, 1024).time == 12.5);
  CHECK(backend.evaluate(kWm, Algorithm::ts_wm, 256).status == EvalStatus::invalid);
}

TEST_CASE("table backend replays a dumped sim space") {
  const auto space = enumerate(Algorithm::ts_wm, 1024, kArch);
  const auto table = dump_sim_table(space, kArch);
  CHECK(table.rows.size() == space.size());

  const auto path = (std::filesystem::temp_directory_path() / "prefixtune_table_test.csv").string();
  save_table(table, path);
  TableBackend replay(load_table(path));
  std::remove(path.c_str());
  SimBackend sim(kArch);

  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const auto a = tune_bo(space, sim, 40, 5, seed);
    const auto b = tune_bo(space, replay, 40, 5, seed);
    REQUIRE(a.history.size() == b.history.size());
    for (std::size_t i = 0; i < a.history.size(); ++i) {
      CHECK(a.history[i].config == b.history[i].config);
      CHECK(a.history[i].time == b.history[i].time);
    }
    CHECK(a.best->config == b.best->config);
  }
}

TEST_CASE("command placeholders") {
  CommandSpec spec;
  spec.executable = "/bin/true";
  CHECK(expand_arguments(spec, kWm, Algorithm::ts_wm, 1024) ==
        std::vector<std::string>{"ts_wm", "1024", "1024", "4", "256", "4", "0"});
  const auto plan = plan_large_fft(1 << 19, kArch);
  CHECK(expand_arguments(spec, Candidate(plan), Algorithm::fft, 1 << 19) ==
        std::vector<std::string>{"fft", "524288", "2048,2048,2048", "8,8,8", "256,256,256", "8,8,8", "0,0,0"});
  spec.arguments = {"--n={N}", "x{S}x"};
  CHECK(expand_arguments(spec, kWm, Algorithm::ts_wm, 1024) == std::vector<std::string>{"--n=1024", "x1024x"});
}

TEST_CASE("external command protocol") {
  const auto value = external_evaluate(command("print_time.sh"), kWm, Algorithm::ts_wm, 1024);
  CHECK(value.status == EvalStatus::ok);
  CHECK(value.time == 123.5);

  CHECK(external_evaluate(command("exit_nonzero.sh"), kWm, Algorithm::ts_wm, 1024).status ==
        EvalStatus::invalid);
  CHECK(external_evaluate(command("garbage.sh"), kWm, Algorithm::ts_wm, 1024).status == EvalStatus::invalid);
  CHECK(external_evaluate(command("missing.sh"), kWm, Algorithm::ts_wm, 1024).status == EvalStatus::invalid);

  const auto args = external_evaluate(command("args_time.sh"), kWm, Algorithm::ts_wm, 1024);
  CHECK(args.status == EvalStatus::ok);
  CHECK(args.time == 4 * 10 + 256 / 32);

  const auto start = std::chrono::steady_clock::now();
  const auto slow = external_evaluate(command("sleep_long.sh", 1.0), kWm, Algorithm::ts_wm, 1024);
  const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  CHECK(slow.status == EvalStatus::timeout);
  CHECK(elapsed < 2.0);
}

TEST_CASE("backend selection") {
  CHECK(make_backend("sim", kArch)->name() == "sim");
  CHECK(make_backend("cmd:" + stub("print_time.sh"), kArch)->name() == "cmd:" + stub("print_time.sh"));
  CHECK_FALSE(make_backend("cmd:" + stub("print_time.sh"), kArch)->concurrency_safe());
  CHECK_THROWS_AS(make_backend("gpu", kArch), ValidationError);
  CHECK_THROWS_AS(make_backend("cmd:", kArch), ValidationError);
  CHECK_THROWS_AS(make_backend("cmd:/nonexistent/tool", kArch), ValidationError);
  CHECK_THROWS_AS(make_backend("table:/nonexistent.csv", kArch), ValidationError);
}
