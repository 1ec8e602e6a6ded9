#include "prefixtune/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "circuits.hpp"

namespace prefixtune {
namespace {

void require_power_of_two(std::size_t n, const char* what) {
  if (!is_power_of_two(static_cast<long long>(n)))
    throw SizeError(std::string(what) + " length " + std::to_string(n) + " is not a power of two");
}

int ceil_div(int a, int b) { return (a + b - 1) / b; }

}  // namespace

int steps_count(const ProblemInstance& instance) {
  if (!is_power_of_two(instance.n_size) || instance.n_size < 2)
    throw SizeError("problem size must be a power of two >= 2");
  if (instance.batches < 1) throw ValidationError("batches must be >= 1");
  const int bits = log2_ceil(instance.n_size);
  const int r = instance.radix;
  auto radix_bits = [&](std::initializer_list<int> allowed) {
    if (std::find(allowed.begin(), allowed.end(), r) == allowed.end())
      throw UnsupportedRadixError("radix " + std::to_string(r) + " is not supported by " +
                                  std::string(to_string(instance.algorithm)));
    return log2_ceil(r);
  };
  switch (instance.algorithm) {
    case Algorithm::scan_lf:
    case Algorithm::scan_ks:
    case Algorithm::ts_pcr:
    case Algorithm::ts_lf:
      radix_bits({2});
      return bits;
    case Algorithm::ts_cr:
      radix_bits({2});
      return 2 * bits - 1;
    case Algorithm::ts_wm:
      return ceil_div(bits, radix_bits({2, 4, 8}));
    case Algorithm::fft:
      return ceil_div(bits, radix_bits({2, 4, 8, 16}));
  }
  return bits;
}

// ---------------------------------------------------------------------------
// Scan

template <typename T>
std::vector<T> scan_inclusive(std::span<const T> values, ScanPattern pattern) {
  require_power_of_two(values.size(), "scan input");
  std::vector<T> x(values.begin(), values.end());
  auto add = [](const T& a, const T& b) { return a + b; };
  if (pattern == ScanPattern::ladner_fischer)
    detail::ladner_fischer_inclusive(x, add);
  else
    detail::kogge_stone_inclusive(x, 2, add);
  return x;
}

template <typename T>
std::vector<T> oracle_prefix(std::span<const T> values) {
  std::vector<T> out;
  out.reserve(values.size());
  T acc{};
  for (const T& v : values) {
    acc = acc + v;
    out.push_back(acc);
  }
  return out;
}

template std::vector<int> scan_inclusive<int>(std::span<const int>, ScanPattern);
template std::vector<long long> scan_inclusive<long long>(std::span<const long long>, ScanPattern);
template std::vector<float> scan_inclusive<float>(std::span<const float>, ScanPattern);
template std::vector<double> scan_inclusive<double>(std::span<const double>, ScanPattern);
template std::vector<int> oracle_prefix<int>(std::span<const int>);
template std::vector<long long> oracle_prefix<long long>(std::span<const long long>);
template std::vector<float> oracle_prefix<float>(std::span<const float>);
template std::vector<double> oracle_prefix<double>(std::span<const double>);

// ---------------------------------------------------------------------------
// Tridiagonal

void TridiagonalSystem::validate() const {
  const std::size_t n = diagonal.size();
  if (lower.size() != n || upper.size() != n || rhs.size() != n)
    throw ValidationError("tridiagonal system arrays must have equal length");
  require_power_of_two(n, "tridiagonal system");
  if (lower.front() != 0.0) throw ValidationError("lower[0] must be zero");
  if (upper.back() != 0.0) throw ValidationError("upper[N-1] must be zero");
}

namespace {

double checked_div(double num, double den) {
  if (den == 0.0 || !std::isfinite(den)) throw SingularError("zero pivot in tridiagonal solve");
  return num / den;
}

std::vector<double> solve_cr(const TridiagonalSystem& sys) {
  const std::size_t n = sys.size();
  std::vector<double> a = sys.lower, b = sys.diagonal, c = sys.upper, d = sys.rhs;
  // Forward reduction: equation i absorbs its neighbours at distance s.
  for (std::size_t s = 1; s < n; s <<= 1) {
    for (std::size_t i = 2 * s - 1; i < n; i += 2 * s) {
      const double k1 = checked_div(a[i], b[i - s]);
      double k2 = 0.0;
      if (i + s < n) k2 = checked_div(c[i], b[i + s]);
      const double na = -a[i - s] * k1;
      const double nc = (i + s < n) ? -c[i + s] * k2 : 0.0;
      b[i] -= c[i - s] * k1 + ((i + s < n) ? a[i + s] * k2 : 0.0);
      d[i] -= d[i - s] * k1 + ((i + s < n) ? d[i + s] * k2 : 0.0);
      a[i] = na;
      c[i] = nc;
    }
  }
  std::vector<double> x(n, 0.0);
  x[n - 1] = checked_div(d[n - 1], b[n - 1]);
  // Back substitution.
  for (std::size_t s = n / 2; s >= 1; s >>= 1) {
    for (std::size_t i = s - 1; i < n - 1; i += 2 * s) {
      const double left = i >= s ? x[i - s] : 0.0;
      const double right = i + s < n ? x[i + s] : 0.0;
      x[i] = checked_div(d[i] - a[i] * left - c[i] * right, b[i]);
    }
    if (s == 1) break;
  }
  return x;
}

std::vector<double> solve_pcr(const TridiagonalSystem& sys) {
  const std::size_t n = sys.size();
  std::vector<double> a = sys.lower, b = sys.diagonal, c = sys.upper, d = sys.rhs;
  std::vector<double> na(n), nb(n), nc(n), nd(n);
  for (std::size_t s = 1; s < n; s <<= 1) {
    for (std::size_t i = 0; i < n; ++i) {
      const bool has_l = i >= s;
      const bool has_r = i + s < n;
      const double k1 = has_l ? checked_div(a[i], b[i - s]) : 0.0;
      const double k2 = has_r ? checked_div(c[i], b[i + s]) : 0.0;
      na[i] = has_l ? -a[i - s] * k1 : 0.0;
      nc[i] = has_r ? -c[i + s] * k2 : 0.0;
      nb[i] = b[i] - (has_l ? c[i - s] * k1 : 0.0) - (has_r ? a[i + s] * k2 : 0.0);
      nd[i] = d[i] - (has_l ? d[i - s] * k1 : 0.0) - (has_r ? d[i + s] * k2 : 0.0);
    }
    a.swap(na);
    b.swap(nb);
    c.swap(nc);
    d.swap(nd);
  }
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = checked_div(d[i], b[i]);
  return x;
}

// A contiguous run of equations [l, h] condensed to a pair of equations for
// its boundary unknowns in terms of the outside neighbours x_{l-1}, x_{h+1}:
//   x_l = a1 x_{l-1} + b1 x_{h+1} + g1
//   x_h = a2 x_{l-1} + b2 x_{h+1} + g2
struct EquationPair {
  double a1 = 0, b1 = 0, g1 = 0;
  double a2 = 0, b2 = 0, g2 = 0;
};

EquationPair leaf(const TridiagonalSystem& sys, std::size_t i) {
  const double inv = checked_div(1.0, sys.diagonal[i]);
  const double a = -sys.lower[i] * inv, b = -sys.upper[i] * inv, g = sys.rhs[i] * inv;
  return {a, b, g, a, b, g};
}

// Eliminates the two interface unknowns between adjacent runs.
EquationPair join(const EquationPair& l, const EquationPair& r) {
  const double den = 1.0 - l.b2 * r.a1;
  if (den == 0.0 || !std::isfinite(den)) throw SingularError("zero pivot in equation-pair join");
  const double ua = l.a2 / den;
  const double ub = l.b2 * r.b1 / den;
  const double ug = (l.b2 * r.g1 + l.g2) / den;
  const double va = r.a1 * ua;
  const double vb = r.a1 * ub + r.b1;
  const double vg = r.a1 * ug + r.g1;
  EquationPair out;
  out.a1 = l.a1 + l.b1 * va;
  out.b1 = l.b1 * vb;
  out.g1 = l.g1 + l.b1 * vg;
  out.a2 = r.a2 * ua;
  out.b2 = r.a2 * ub + r.b2;
  out.g2 = r.a2 * ug + r.g2;
  return out;
}

template <typename Circuit>
std::vector<double> solve_by_prefix(const TridiagonalSystem& sys, Circuit circuit) {
  const std::size_t n = sys.size();
  std::vector<EquationPair> prefix(n), suffix(n);
  for (std::size_t i = 0; i < n; ++i) {
    prefix[i] = leaf(sys, i);
    suffix[n - 1 - i] = leaf(sys, i);
  }
  circuit(prefix, [](const EquationPair& e, const EquationPair& l) { return join(e, l); });
  // Suffix runs are scanned in reverse order: the earlier operand is the run
  // to the right.
  circuit(suffix, [](const EquationPair& e, const EquationPair& l) { return join(l, e); });
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) {
    double den = sys.diagonal[i];
    double num = sys.rhs[i];
    if (i > 0) {
      const auto& p = prefix[i - 1];  // x_{i-1} = b2 x_i + g2
      den += sys.lower[i] * p.b2;
      num -= sys.lower[i] * p.g2;
    }
    if (i + 1 < n) {
      const auto& q = suffix[n - 2 - i];  // run [i+1, N-1]: x_{i+1} = a1 x_i + g1
      den += sys.upper[i] * q.a1;
      num -= sys.upper[i] * q.g1;
    }
    x[i] = checked_div(num, den);
  }
  return x;
}

}  // namespace

std::vector<double> solve_tridiagonal(const TridiagonalSystem& system, TridiagonalMethod method,
                                      int radix) {
  system.validate();
  if (method != TridiagonalMethod::wang_mou && radix != 2)
    throw UnsupportedRadixError("radix fixed at 2 for this tridiagonal method");
  if (method == TridiagonalMethod::wang_mou && radix != 2 && radix != 4 && radix != 8)
    throw UnsupportedRadixError("Wang-Mou radix must be 2, 4 or 8");
  if (system.size() == 1) return {checked_div(system.rhs[0], system.diagonal[0])};
  switch (method) {
    case TridiagonalMethod::cyclic_reduction: return solve_cr(system);
    case TridiagonalMethod::parallel_cyclic_reduction: return solve_pcr(system);
    case TridiagonalMethod::wang_mou:
      return solve_by_prefix(system, [radix](std::vector<EquationPair>& v, auto op) {
        detail::kogge_stone_inclusive(v, radix, op);
      });
    case TridiagonalMethod::ladner_fischer:
      return solve_by_prefix(system, [](std::vector<EquationPair>& v, auto op) {
        detail::ladner_fischer_inclusive(v, op);
      });
  }
  return {};
}

std::vector<double> oracle_thomas(const TridiagonalSystem& system) {
  const std::size_t n = system.size();
  if (n == 0) return {};
  std::vector<double> cp(n), dp(n), x(n);
  double den = system.diagonal[0];
  if (den == 0.0) throw SingularError("zero pivot in Thomas algorithm");
  cp[0] = system.upper[0] / den;
  dp[0] = system.rhs[0] / den;
  for (std::size_t i = 1; i < n; ++i) {
    den = system.diagonal[i] - system.lower[i] * cp[i - 1];
    if (den == 0.0) throw SingularError("zero pivot in Thomas algorithm");
    cp[i] = system.upper[i] / den;
    dp[i] = (system.rhs[i] - system.lower[i] * dp[i - 1]) / den;
  }
  x[n - 1] = dp[n - 1];
  for (std::size_t i = n - 1; i-- > 0;) x[i] = dp[i] - cp[i] * x[i + 1];
  return x;
}

double relative_residual(const TridiagonalSystem& system, std::span<const double> x) {
  const std::size_t n = system.size();
  double worst = 0.0, dnorm = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double ax = system.diagonal[i] * x[i];
    if (i > 0) ax += system.lower[i] * x[i - 1];
    if (i + 1 < n) ax += system.upper[i] * x[i + 1];
    worst = std::max(worst, std::abs(ax - system.rhs[i]));
    dnorm = std::max(dnorm, std::abs(system.rhs[i]));
  }
  return worst / (dnorm + 1.0);
}

// ---------------------------------------------------------------------------
// FFT

std::vector<int> mixed_radix_plan(long long n, int radix) {
  if (!is_power_of_two(n)) throw PlanError("FFT length must be a power of two");
  if (radix != 2 && radix != 4 && radix != 8 && radix != 16)
    throw UnsupportedRadixError("FFT radix must be 2, 4, 8 or 16");
  const int bits = log2_ceil(n);
  const int rbits = log2_ceil(radix);
  std::vector<int> plan;
  if (bits % rbits != 0) plan.push_back(1 << (bits % rbits));
  for (int i = 0; i < bits / rbits; ++i) plan.push_back(radix);
  return plan;
}

std::vector<cfloat> fft_transform(std::span<const cfloat> signal, FftDirection direction,
                                  std::span<const int> radix_plan) {
  const std::size_t n = signal.size();
  if (!is_power_of_two(static_cast<long long>(n)))
    throw PlanError("FFT length " + std::to_string(n) + " is not a power of two");
  long long product = 1;
  for (int r : radix_plan) {
    if (r != 2 && r != 4 && r != 8 && r != 16)
      throw UnsupportedRadixError("FFT radix " + std::to_string(r) + " is not one of 2,4,8,16");
    product *= r;
  }
  if (product != static_cast<long long>(n))
    throw PlanError("radix plan product " + std::to_string(product) + " != length " +
                    std::to_string(n));

  const double sign = direction == FftDirection::forward ? -1.0 : 1.0;
  std::vector<cfloat> src(signal.begin(), signal.end()), dst(n);
  std::vector<cfloat> v(16), w(16);
  std::size_t span = 1;  // length of the sub-transforms already completed
  for (int radix : radix_plan) {
    const std::size_t r = static_cast<std::size_t>(radix);
    const std::size_t stride = n / r;
    // Roots of the radix-r node.
    std::vector<cfloat> roots(r);
    for (std::size_t q = 0; q < r; ++q) {
      const double ang = sign * 2.0 * std::numbers::pi * static_cast<double>(q) / static_cast<double>(r);
      roots[q] = cfloat(static_cast<float>(std::cos(ang)), static_cast<float>(std::sin(ang)));
    }
    for (std::size_t j = 0; j < stride; ++j) {
      const std::size_t k = j % span;
      for (std::size_t q = 0; q < r; ++q) {
        const double ang = sign * 2.0 * std::numbers::pi * static_cast<double>(q * k) /
                           static_cast<double>(span * r);
        const cfloat tw(static_cast<float>(std::cos(ang)), static_cast<float>(std::sin(ang)));
        v[q] = src[j + q * stride] * tw;
      }
      for (std::size_t p = 0; p < r; ++p) {
        cfloat acc(0.0f, 0.0f);
        for (std::size_t q = 0; q < r; ++q) acc += v[q] * roots[(p * q) % r];
        w[p] = acc;
      }
      const std::size_t out = (j / span) * span * r + k;
      for (std::size_t p = 0; p < r; ++p) dst[out + p * span] = w[p];
    }
    src.swap(dst);
    span *= r;
  }
  if (direction == FftDirection::inverse) {
    const float scale = 1.0f / static_cast<float>(n);
    for (auto& z : src) z *= scale;
  }
  return src;
}

std::vector<cdouble> oracle_dft(std::span<const cdouble> signal, FftDirection direction) {
  const std::size_t n = signal.size();
  const double sign = direction == FftDirection::forward ? -1.0 : 1.0;
  std::vector<cdouble> out(n);
  for (std::size_t k = 0; k < n; ++k) {
    cdouble acc(0.0, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
      const double ang =
          sign * 2.0 * std::numbers::pi * static_cast<double>((j * k) % n) / static_cast<double>(n);
      acc += signal[j] * cdouble(std::cos(ang), std::sin(ang));
    }
    out[k] = direction == FftDirection::inverse ? acc / static_cast<double>(n) : acc;
  }
  return out;
}

}  // namespace prefixtune
