#include "prefixtune/verify.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <span>
#include <sstream>

#include "prefixtune/kernels.hpp"

namespace prefixtune {
namespace {

KernelCheck named(std::string name) {
  KernelCheck c;
  c.name = std::move(name);
  c.passed = true;
  return c;
}

// Powers of two from 2 to max_n, visited cyclically by trial index.
long long cyclic_size(int trial, long long max_n) {
  const int levels = log2_ceil(max_n);
  return 1LL << (1 + trial % levels);
}

KernelCheck check_scan(ScanPattern pattern, const VerifyOptions& o, std::mt19937_64& rng) {
  KernelCheck check = named(pattern == ScanPattern::ladner_fischer ? "scan_lf == prefix oracle"
                                                                   : "scan_ks == prefix oracle");
  std::uniform_int_distribution<long long> value(-1000, 1000);
  for (int t = 0; t < o.scan_trials; ++t) {
    const long long n = cyclic_size(t, o.scan_max_n);
    std::vector<long long> v(static_cast<std::size_t>(n));
    for (auto& x : v) x = value(rng);
    const auto got = scan_inclusive<long long>(std::span<const long long>(v), pattern);
    const auto want = oracle_prefix<long long>(std::span<const long long>(v));
    ++check.trials;
    if (got != want && check.passed) {
      check.passed = false;
      check.detail = "mismatch at N=" + std::to_string(n);
    }
  }
  return check;
}

TridiagonalSystem random_system(long long n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> off(-1.0, 1.0);
  std::uniform_real_distribution<double> margin(0.5, 2.0);
  TridiagonalSystem s;
  const auto size = static_cast<std::size_t>(n);
  s.lower.resize(size);
  s.diagonal.resize(size);
  s.upper.resize(size);
  s.rhs.resize(size);
  for (std::size_t i = 0; i < size; ++i) {
    s.lower[i] = i == 0 ? 0.0 : off(rng);
    s.upper[i] = i + 1 == size ? 0.0 : off(rng);
    const double sign = off(rng) < 0 ? -1.0 : 1.0;
    s.diagonal[i] = sign * (std::abs(s.lower[i]) + std::abs(s.upper[i]) + margin(rng));
    s.rhs[i] = 10.0 * off(rng);
  }
  return s;
}

double scaled_difference(const std::vector<double>& a, const std::vector<double>& b) {
  double diff = 0.0, norm = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff = std::max(diff, std::abs(a[i] - b[i]));
    norm = std::max(norm, std::abs(b[i]));
  }
  return diff / (norm + 1.0);
}

std::vector<KernelCheck> check_tridiagonal(const VerifyOptions& o, std::mt19937_64& rng) {
  struct Solver {
    const char* name;
    TridiagonalMethod method;
  };
  const Solver solvers[] = {{"ts_cr", TridiagonalMethod::cyclic_reduction},
                            {"ts_pcr", TridiagonalMethod::parallel_cyclic_reduction},
                            {"ts_wm", TridiagonalMethod::wang_mou},
                            {"ts_lf", TridiagonalMethod::ladner_fischer}};
  std::vector<KernelCheck> checks;
  for (const auto& s : solvers) checks.push_back(named(std::string(s.name) + " == Thomas oracle"));
  KernelCheck pairwise = named("tridiagonal solvers agree pairwise");

  const int wm_radices[] = {2, 4, 8};
  for (int t = 0; t < o.tridiagonal_trials; ++t) {
    const long long n = cyclic_size(t, o.tridiagonal_max_n);
    const auto system = random_system(n, rng);
    const auto reference = oracle_thomas(system);
    std::vector<std::vector<double>> answers;
    for (std::size_t k = 0; k < checks.size(); ++k) {
      int radix = 2;
      if (solvers[k].method == TridiagonalMethod::wang_mou) {
        radix = wm_radices[t % 3];
        while (radix > n) radix /= 2;
      }
      auto x = solve_tridiagonal(system, solvers[k].method, radix);
      const double err = std::max(relative_residual(system, x), scaled_difference(x, reference));
      auto& c = checks[k];
      ++c.trials;
      c.worst = std::max(c.worst, err);
      if (!(err <= o.tridiagonal_tolerance) && c.passed) {
        c.passed = false;
        std::ostringstream msg;
        msg << "N=" << n << " radix=" << radix << " error=" << err;
        c.detail = msg.str();
      }
      answers.push_back(std::move(x));
    }
    ++pairwise.trials;
    for (std::size_t i = 0; i < answers.size(); ++i)
      for (std::size_t j = i + 1; j < answers.size(); ++j) {
        const double d = scaled_difference(answers[i], answers[j]);
        pairwise.worst = std::max(pairwise.worst, d);
        if (!(d <= o.tridiagonal_tolerance) && pairwise.passed) {
          pairwise.passed = false;
          pairwise.detail = std::string(solvers[i].name) + " vs " + solvers[j].name + " at N=" +
                            std::to_string(n);
        }
      }
  }
  checks.push_back(std::move(pairwise));
  return checks;
}

std::string plan_label(const std::vector<int>& plan) {
  std::string s = "{";
  for (std::size_t i = 0; i < plan.size(); ++i) s += (i ? "," : "") + std::to_string(plan[i]);
  return s + "}";
}

void check_fft_plan(long long n, const std::vector<int>& plan, const VerifyOptions& o,
                    std::mt19937_64& rng, KernelCheck& forward, KernelCheck& round_trip) {
  std::uniform_real_distribution<float> value(-1.0f, 1.0f);
  std::vector<cfloat> signal(static_cast<std::size_t>(n));
  for (auto& z : signal) z = {value(rng), value(rng)};
  std::vector<cdouble> wide(signal.begin(), signal.end());

  const auto got = fft_transform(std::span<const cfloat>(signal), FftDirection::forward, plan);
  const auto want = oracle_dft(std::span<const cdouble>(wide), FftDirection::forward);
  double err = 0.0;
  for (std::size_t i = 0; i < got.size(); ++i)
    err = std::max(err, std::abs(cdouble(got[i]) - want[i]));
  ++forward.trials;
  forward.worst = std::max(forward.worst, err);
  if (!(err <= o.fft_tolerance) && forward.passed) {
    forward.passed = false;
    forward.detail = "N=" + std::to_string(n) + " plan " + plan_label(plan);
  }

  const auto back = fft_transform(std::span<const cfloat>(got), FftDirection::inverse, plan);
  double rt = 0.0;
  for (std::size_t i = 0; i < back.size(); ++i) rt = std::max(rt, double(std::abs(back[i] - signal[i])));
  ++round_trip.trials;
  round_trip.worst = std::max(round_trip.worst, rt);
  if (!(rt <= o.round_trip_tolerance) && round_trip.passed) {
    round_trip.passed = false;
    round_trip.detail = "N=" + std::to_string(n) + " plan " + plan_label(plan);
  }
}

std::vector<KernelCheck> check_fft(const VerifyOptions& o, std::mt19937_64& rng) {
  KernelCheck forward = named("fft == naive DFT");
  KernelCheck round_trip = named("fft inverse round trip");
  for (long long n = 2; n <= o.fft_max_n; n *= 2)
    for (int radix : {2, 4, 8, 16}) check_fft_plan(n, mixed_radix_plan(n, radix), o, rng, forward, round_trip);
  // Mixed plans whose stages change radix more than once.
  const std::vector<std::pair<long long, std::vector<int>>> mixed = {
      {1024, {16, 8, 4, 2}}, {4096, {2, 16, 8, 16}}, {512, {4, 2, 16, 4}}};
  for (const auto& [n, plan] : mixed)
    if (n <= o.fft_max_n) check_fft_plan(n, plan, o, rng, forward, round_trip);
  return {forward, round_trip};
}

}  // namespace

std::vector<KernelCheck> verify_kernels(const VerifyOptions& options) {
  std::mt19937_64 rng(options.seed);
  std::vector<KernelCheck> out;
  out.push_back(check_scan(ScanPattern::ladner_fischer, options, rng));
  out.push_back(check_scan(ScanPattern::kogge_stone, options, rng));
  for (auto& c : check_tridiagonal(options, rng)) out.push_back(std::move(c));
  for (auto& c : check_fft(options, rng)) out.push_back(std::move(c));
  return out;
}

}  // namespace prefixtune
