#include <doctest.h>

#include <algorithm>
#include <set>

#include "prefixtune/errors.hpp"
#include "prefixtune/search_space.hpp"

using namespace prefixtune;

namespace {

const ArchDescriptor kArch = ArchDescriptor::gm20b();

KernelConfig kc(int s, int p, int l, int r, bool shuffle) { return {s, p, l, r, shuffle}; }

bool contains(const SearchSpace& space, const Candidate& c) {
  return std::find(space.candidates.begin(), space.candidates.end(), c) != space.candidates.end();
}

// Independent brute force over every power-of-two tuple.
std::vector<KernelConfig> brute_force(Algorithm a, long long n, const ArchDescriptor& arch) {
  std::vector<KernelConfig> out;
  for (int r = 1; r <= 32; r *= 2)
    for (int p = 1; p <= 64; p *= 2)
      for (int l = 1; l <= 2048; l *= 2)
        for (int s = 0; s <= (1 << 15); s = s ? s * 2 : 1)
          for (bool sh : {false, true}) {
            const KernelConfig c{s, p, l, r, sh};
            if (is_valid(c, a, n, arch)) out.push_back(c);
          }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

TEST_CASE("register and element tables") {
  CHECK(estimate_registers(Algorithm::ts_cr, 2) == 32);
  CHECK(estimate_registers(Algorithm::ts_wm, 4) == 40);
  CHECK(estimate_registers(Algorithm::ts_pcr, 8) == 64);
  CHECK(estimate_registers(Algorithm::fft, 2) == 32);
  CHECK(estimate_registers(Algorithm::fft, 4) == 40);
  CHECK(estimate_registers(Algorithm::fft, 8) == 48);
  CHECK(estimate_registers(Algorithm::fft, 16) == 64);
  CHECK(estimate_registers(Algorithm::scan_lf, 4) == 32);
  CHECK(estimate_registers(Algorithm::scan_ks, 2) == 32);
  CHECK(element_bytes(Algorithm::ts_cr) == 16);
  CHECK(element_bytes(Algorithm::ts_lf) == 32);
  CHECK(element_bytes(Algorithm::fft) == 8);
  CHECK(element_bytes(Algorithm::scan_lf) == 4);
  // 40 registers x 1024 threads overshoots 32768 by 25%: capped to 32.
  CHECK(effective_registers(Algorithm::fft, 4, 1024, kArch) == 32);
  CHECK(effective_registers(Algorithm::fft, 4, 256, kArch) == 40);
  // 64 x 1024 overshoots by 100%: kept, and the launch is invalid.
  CHECK(effective_registers(Algorithm::fft, 16, 1024, kArch) == 64);
}

TEST_CASE("validity examples") {
  CHECK(is_valid(kc(0, 4, 64, 4, true), Algorithm::ts_wm, 64, kArch));
  const auto cr = is_valid(kc(0, 2, 64, 4, true), Algorithm::ts_cr, 64, kArch);
  CHECK_FALSE(cr);
  CHECK(cr.reason.find("radix fixed at 2") != std::string::npos);

  const auto big = is_valid(kc(8192, 8, 1024, 8, false), Algorithm::fft, 8192, kArch);
  CHECK_FALSE(big);
  CHECK(big.reason.find("exceeds shared capacity") != std::string::npos);

  CHECK(is_valid(kc(1024, 4, 256, 4, false), Algorithm::fft, 1024, kArch));
  CHECK(is_valid(kc(4096, 4, 1024, 4, false), Algorithm::fft, 4096, kArch));
  CHECK(is_valid(kc(32, 4, 128, 2, true), Algorithm::scan_lf, 512, kArch));
  CHECK(is_valid(kc(128, 4, 64, 2, true), Algorithm::scan_ks, 64, kArch));
}

TEST_CASE("validity rejections") {
  // S must equal P x L without shuffle.
  CHECK_FALSE(is_valid(kc(512, 2, 128, 2, false), Algorithm::ts_cr, 512, kArch));
  // Shuffle needs S = 0 for TS and N/P <= 32.
  CHECK_FALSE(is_valid(kc(128, 2, 64, 2, true), Algorithm::ts_cr, 64, kArch));
  const auto wide = is_valid(kc(0, 2, 64, 2, true), Algorithm::ts_cr, 128, kArch);
  CHECK_FALSE(wide);
  CHECK(wide.reason.find("shuffle requires N/P <= warp_size") != std::string::npos);
  // FFT never shuffles; scan always does.
  CHECK_FALSE(is_valid(kc(0, 4, 64, 4, true), Algorithm::fft, 64, kArch));
  CHECK_FALSE(is_valid(kc(256, 4, 64, 2, false), Algorithm::scan_lf, 64, kArch));
  // FFT radix follows P.
  CHECK_FALSE(is_valid(kc(256, 4, 64, 2, false), Algorithm::fft, 256, kArch));
  // L outside [32, 1024], P outside the algorithm's set.
  CHECK_FALSE(is_valid(kc(32, 2, 16, 2, false), Algorithm::ts_cr, 32, kArch));
  CHECK_FALSE(is_valid(kc(2048, 1, 2048, 2, false), Algorithm::ts_cr, 1024, kArch));
  CHECK_FALSE(is_valid(kc(512, 16, 32, 2, false), Algorithm::ts_cr, 512, kArch));
  CHECK_FALSE(is_valid(kc(4096, 32, 128, 32, false), Algorithm::fft, 4096, kArch));
  // TS byte budget: 4096 equations x 16 bytes > 48 KiB.
  CHECK_FALSE(is_valid(kc(4096, 4, 1024, 4, false), Algorithm::ts_wm, 1024, kArch));
  // Register file overflow beyond the spill allowance.
  ArchDescriptor tight = kArch;
  tight.max_registers_per_block = 8192;
  CHECK(is_valid(kc(1024, 4, 256, 4, false), Algorithm::fft, 1024, tight));  // 40 -> 32
  const auto spill = is_valid(kc(2048, 8, 256, 8, false), Algorithm::fft, 2048, tight);
  CHECK_FALSE(spill);
  CHECK(spill.reason.find("register") != std::string::npos);
}

TEST_CASE("every enumerated candidate is valid and ordered") {
  for (auto a : kAllAlgorithms) {
    const auto range = supported_range(a);
    for (long long n = range.min_n; n <= range.max_n; n *= 2) {
      const auto space = enumerate(a, n, kArch);
      CAPTURE(to_string(a));
      CAPTURE(n);
      REQUIRE_FALSE(space.empty());
      CHECK(space.element_bytes == element_bytes(a));
      CHECK(std::is_sorted(space.candidates.begin(), space.candidates.end()));
      CHECK(std::set<Candidate>(space.candidates.begin(), space.candidates.end()).size() ==
            space.size());
      for (const auto& c : space.candidates) CHECK(is_valid(c, a, n, kArch));
    }
  }
}

TEST_CASE("enumeration equals a brute-force loop") {
  const std::pair<Algorithm, long long> cases[] = {{Algorithm::fft, 4096}, {Algorithm::fft, 64},
                                                   {Algorithm::ts_wm, 1024}, {Algorithm::ts_cr, 16},
                                                   {Algorithm::scan_ks, 256}, {Algorithm::ts_lf, 128}};
  for (const auto& [a, n] : cases) {
    std::vector<KernelConfig> listed;
    for (const auto& c : enumerate(a, n, kArch).candidates) listed.push_back(std::get<KernelConfig>(c));
    CHECK(listed == brute_force(a, n, kArch));
  }
}

TEST_CASE("enumeration facts") {
  CHECK(contains(enumerate(Algorithm::ts_wm, 1024, kArch), Candidate(kc(1024, 4, 256, 4, false))));
  for (const auto& c : enumerate(Algorithm::scan_lf, 64, kArch).candidates) {
    const auto& k = std::get<KernelConfig>(c);
    CHECK(k.shuffle);
    CHECK(k.radix == 2);
  }
  CHECK(enumerate(Algorithm::scan_lf, 4096, kArch).size() < enumerate(Algorithm::scan_lf, 64, kArch).size());
  CHECK_THROWS_AS(enumerate(Algorithm::ts_cr, 2048, kArch), RangeError);
  CHECK_THROWS_AS(enumerate(Algorithm::ts_cr, 4, kArch), RangeError);
  CHECK_THROWS_AS(enumerate(Algorithm::fft, 1000, kArch), RangeError);
  CHECK_THROWS_AS(enumerate(Algorithm::fft, 1LL << 24, kArch), RangeError);
}

TEST_CASE("more shared memory never removes candidates") {
  ArchDescriptor roomy = kArch;
  roomy.max_shared_mem_per_block = roomy.shared_mem_per_sm;
  for (auto a : kAllAlgorithms) {
    const auto range = supported_range(a);
    for (long long n = range.min_n; n <= range.max_n; n *= 4) {
      const auto small = enumerate(a, n, kArch);
      const auto large = enumerate(a, n, roomy);
      for (const auto& c : small.candidates) CHECK(contains(large, c));
    }
  }
}

TEST_CASE("multi-kernel plans") {
  CHECK(is_multi_kernel_size(Algorithm::fft, 8192));
  CHECK_FALSE(is_multi_kernel_size(Algorithm::fft, 4096));
  CHECK_FALSE(is_multi_kernel_size(Algorithm::ts_cr, 8192));
  CHECK(fft_plan_tile(kArch) == 2048);

  const auto s13 = enumerate(Algorithm::fft, 1 << 13, kArch);
  const auto s19 = enumerate(Algorithm::fft, 1 << 19, kArch);
  const auto s23 = enumerate(Algorithm::fft, 1 << 23, kArch);
  CHECK(s13.size() == 36);
  CHECK(s19.size() == 49);
  CHECK(s23.size() == 120);
  for (const auto& c : s19.candidates) CHECK(std::holds_alternative<MultiKernelPlan>(c));

  const KernelConfig r8{2048, 8, 256, 8, false};
  MultiKernelPlan two;
  two.kernel_configs = {r8, r8};
  CHECK(plan_kernel_bits(r8) == 9);
  CHECK(is_valid(two, Algorithm::fft, 1 << 18, kArch));
  const auto short_plan = is_valid(two, Algorithm::fft, 1 << 19, kArch);
  CHECK_FALSE(short_plan);
  CHECK(short_plan.reason.find("plan does not cover N") != std::string::npos);

  MultiKernelPlan three;
  three.kernel_configs = {r8, r8, r8};
  const auto extra = is_valid(three, Algorithm::fft, 1 << 14, kArch);
  CHECK_FALSE(extra);
  CHECK(extra.reason.find("redundant") != std::string::npos);
}

TEST_CASE("encoding and json") {
  const KernelConfig k{1024, 4, 256, 4, false};
  CHECK(encode(Candidate(k)).size() == encode(Candidate(KernelConfig{0, 2, 64, 2, true})).size());
  CHECK(encode(Candidate(k)) != encode(Candidate(KernelConfig{512, 4, 128, 4, false})));

  const auto space = enumerate(Algorithm::fft, 1 << 20, kArch);
  std::set<std::vector<double>> codes;
  for (const auto& c : space.candidates) {
    CHECK(encode(c).size() == encode(space.candidates.front()).size());
    codes.insert(encode(c));
    CHECK(candidate_from_json(to_json(c)) == c);
  }
  CHECK(codes.size() == space.size());

  CHECK(candidate_from_json(to_json(Candidate(k))) == Candidate(k));
  CHECK(kernel_config_from_json(to_json(k)) == k);
  CHECK(to_string(k) == "(1024,4,256) r=4");
  CHECK_THROWS_AS(kernel_config_from_json(nlohmann::json{{"S", 1}}), ValidationError);
}
