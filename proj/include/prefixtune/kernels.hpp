#pragma once

// Sequential reference implementations of the parallel-prefix circuits. Each
// kernel is written as a level-synchronous loop over its circuit so that the
// number of levels matches steps_count(). Oracles are plain textbook
// algorithms in double precision and share no code with the kernels.

#include <complex>
#include <span>
#include <vector>

#include "prefixtune/algorithm.hpp"
#include "prefixtune/errors.hpp"

namespace prefixtune {

struct NodeOperator {
  int fan_in = 1;
  int fan_out = 1;
  int elements_per_thread() const { return fan_in > fan_out ? fan_in : fan_out; }
};

struct ProblemInstance {
  Algorithm algorithm = Algorithm::fft;
  long long n_size = 2;
  long long batches = 1;
  int radix = 2;
};

// Number of circuit levels K for one problem. Throws UnsupportedRadixError
// when the radix does not fit the pattern and SizeError for bad sizes.
int steps_count(const ProblemInstance& instance);

// ---------------------------------------------------------------------------
// Scan

enum class ScanPattern { ladner_fischer, kogge_stone };

template <typename T>
std::vector<T> scan_inclusive(std::span<const T> values, ScanPattern pattern);

template <typename T>
std::vector<T> oracle_prefix(std::span<const T> values);

// ---------------------------------------------------------------------------
// Tridiagonal systems: a_i x_{i-1} + b_i x_i + c_i x_{i+1} = d_i

struct TridiagonalSystem {
  std::vector<double> lower;     // a, a[0] == 0
  std::vector<double> diagonal;  // b
  std::vector<double> upper;     // c, c[N-1] == 0
  std::vector<double> rhs;       // d

  std::size_t size() const { return diagonal.size(); }
  // Throws SizeError / ValidationError.
  void validate() const;
};

enum class TridiagonalMethod { cyclic_reduction, parallel_cyclic_reduction, wang_mou, ladner_fischer };

// `radix` is honoured by wang_mou only (2, 4 or 8); the other methods are
// binary circuits and reject anything but 2.
std::vector<double> solve_tridiagonal(const TridiagonalSystem& system, TridiagonalMethod method,
                                      int radix = 2);

std::vector<double> oracle_thomas(const TridiagonalSystem& system);

// max_i |A x - d|_i / (|d|_inf + 1)
double relative_residual(const TridiagonalSystem& system, std::span<const double> x);

// ---------------------------------------------------------------------------
// FFT (Stockham autosort, mixed radix)

enum class FftDirection { forward, inverse };

using cfloat = std::complex<float>;
using cdouble = std::complex<double>;

// Forward uses exp(-2 pi i jk/N); inverse uses the conjugate kernel and
// scales by 1/N. Each plan entry is one of 2, 4, 8, 16 and their product
// must equal the signal length.
std::vector<cfloat> fft_transform(std::span<const cfloat> signal, FftDirection direction,
                                  std::span<const int> radix_plan);

// Radix plan using `radix` for every stage; a smaller radix covers the
// remainder in the first stage.
std::vector<int> mixed_radix_plan(long long n, int radix);

std::vector<cdouble> oracle_dft(std::span<const cdouble> signal, FftDirection direction);

}  // namespace prefixtune
