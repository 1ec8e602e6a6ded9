#pragma once

// Level-synchronous prefix circuits over an associative (not necessarily
// commutative) operator. `op(earlier, later)` combines two adjacent
// segments; every level reads only values written by the previous level.

#include <cstddef>
#include <vector>

namespace prefixtune::detail {

// Ladner-Fischer circuit (divide-and-conquer form): at level k the upper
// half of every 2^(k+1) block absorbs the last element of its lower half.
// log2(N) levels.
template <typename T, typename Op>
int ladner_fischer_inclusive(std::vector<T>& x, Op op) {
  const std::size_t n = x.size();
  int levels = 0;
  for (std::size_t s = 1; s < n; s <<= 1, ++levels) {
    for (std::size_t i = 0; i < n; ++i) {
      if ((i & s) == 0) continue;
      const std::size_t carry = (i & ~(2 * s - 1)) + s - 1;
      x[i] = op(x[carry], x[i]);
    }
  }
  return levels;
}

// Kogge-Stone circuit with r-ary nodes: at stride s every element folds in
// its r-1 predecessors at distance s, 2s, ... ceil(log_r N) levels.
template <typename T, typename Op>
int kogge_stone_inclusive(std::vector<T>& x, int radix, Op op) {
  const std::size_t n = x.size();
  const std::size_t r = static_cast<std::size_t>(radix);
  std::vector<T> next(x);
  int levels = 0;
  for (std::size_t s = 1; s < n; s *= r, ++levels) {
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t j = r - 1;
      while (j > 0 && j * s > i) --j;
      T acc = x[i - j * s];
      for (; j > 0; --j) acc = op(acc, x[i - (j - 1) * s]);
      next[i] = acc;
    }
    x.swap(next);
  }
  return levels;
}

}  // namespace prefixtune::detail
