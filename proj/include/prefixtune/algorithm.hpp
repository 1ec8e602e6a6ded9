#pragma once

#include <array>
#include <string>
#include <string_view>

namespace prefixtune {

enum class Algorithm { scan_lf, scan_ks, ts_cr, ts_pcr, ts_wm, ts_lf, fft };

inline constexpr std::array<Algorithm, 7> kAllAlgorithms = {
    Algorithm::scan_lf, Algorithm::scan_ks, Algorithm::ts_cr, Algorithm::ts_pcr,
    Algorithm::ts_wm,   Algorithm::ts_lf,   Algorithm::fft,
};

std::string_view to_string(Algorithm a);
// Throws ValidationError for unknown names.
Algorithm parse_algorithm(std::string_view name);

enum class Family { tridiagonal, scan, fft };

Family family_of(Algorithm a);
inline bool is_tridiagonal(Algorithm a) { return family_of(a) == Family::tridiagonal; }
inline bool is_scan(Algorithm a) { return family_of(a) == Family::scan; }

bool is_power_of_two(long long v);
int log2_ceil(long long v);

}  // namespace prefixtune
