#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <sstream>

#include <gimli_sifa/campaign.hpp>
#include <gimli_sifa/tracer.hpp>

using namespace gimli_sifa;
using Catch::Matchers::WithinAbs;

namespace {

Key random_key(uint64_t seed) {
  SplitMix64 rng{splitmix64_mix(seed)};
  Key k;
  for (auto& w : k.w) w = rng.next_u32();
  return k;
}

FaultSpec spec_of(const std::string& model, int boundary, int offset, unsigned width) {
  FaultSpec s;
  s.model = fault_model_from_string(model);
  s.location = FaultLocation{boundary, Row::b, 0, offset, width};
  return s;
}

}  // namespace

TEST_CASE("fault window read/write") {
  GimliState s{};
  s.b[0] = 0xdeadbeefu;
  FaultLocation loc{23, Row::b, 0, 8, 8};
  CHECK(read_window(s, loc) == 0xbe);
  write_window(s, loc, 0x12);
  CHECK(s.b[0] == 0xdead12efu);
  CHECK_THROWS_AS((FaultLocation{23, Row::b, 0, 28, 8}).validate(), std::invalid_argument);
  CHECK_THROWS_AS((FaultLocation{0, Row::b, 0, 0, 8}).validate(), std::invalid_argument);
  CHECK_THROWS_AS((FaultLocation{23, Row::b, 4, 0, 8}).validate(), std::invalid_argument);
}

TEST_CASE("bit-flip faults are always effective") {
  Key key = random_key(1);
  FaultSpec spec = spec_of("bit-flip", 23, 0, 8);
  const bytes_t& msg = campaign_message();
  for (uint64_t t = 0; t < 50; ++t) {
    SplitMix64 rng = trial_stream(5, t);
    Nonce nonce = draw_nonce(rng);
    AeadResult enc = aead_encrypt(key, nonce, {}, msg);
    auto r = faulted_decrypt(key, nonce, {}, enc.ciphertext, enc.tag, spec, rng);
    CHECK_FALSE(r.ineffective);
    CHECK_FALSE(r.output.has_value());
  }
}

TEST_CASE("fast path agrees with the tag-match path") {
  Key key = random_key(2);
  const bytes_t& msg = campaign_message();
  for (const char* model : {"prob-bitflip:2/3,1/3", "random-and", "stuck-at-0", "random-fault"}) {
    FaultSpec spec = spec_of(model, 23, 0, 8);
    int ineffective = 0;
    for (uint64_t t = 0; t < 3000; ++t) {
      SplitMix64 full_rng = trial_stream(42, t);
      Nonce nonce = draw_nonce(full_rng);
      SplitMix64 fast_rng = full_rng;  // same position in the trial stream
      AeadResult enc = aead_encrypt(key, nonce, {}, msg);
      auto r = faulted_decrypt(key, nonce, {}, enc.ciphertext, enc.tag, spec, full_rng);
      bool fast = faulted_window_unchanged(key, nonce, spec, fast_rng);
      REQUIRE(r.ineffective == fast);
      if (r.ineffective) {
        REQUIRE(r.output.has_value());
        CHECK(*r.output == msg);
        ++ineffective;
      }
    }
    CHECK(ineffective > 0);
  }
}

TEST_CASE("collection is deterministic and matches the analytic rate") {
  Key key = random_key(3);
  FaultSpec spec = spec_of("prob-bitflip:2/3,1/3", 23, 0, 4);
  TraceSet a = collect_ineffective(key, spec, 200, 99);
  TraceSet b = collect_ineffective(key, spec, 200, 99);
  REQUIRE(a.nonces.size() == 200);
  CHECK(a.complete);
  CHECK(a.trials == b.trials);
  CHECK(a.nonces == b.nonces);

  // binomial 3-sigma band around the analytic rate 2^-4
  double p = analytic_ineffectiveness_rate(spec.model, spec.location.width);
  double sigma = std::sqrt(p * (1 - p) / static_cast<double>(a.trials));
  CHECK_THAT(a.empirical_rate(), WithinAbs(p, 3 * sigma + 1e-12));
}

TEST_CASE("stuck-at-0 collection only keeps nonces with a zero window") {
  Key key = random_key(4);
  FaultSpec spec = spec_of("stuck-at-0", 23, 7, 1);
  TraceSet ts = collect_ineffective(key, spec, 100, 5);
  TraceTarget target{22, Row::b, 0, 7};
  for (const Nonce& n : ts.nonces) CHECK(oracle_bit(key, n, target) == 0);
}

TEST_CASE("a zero-target collection is a valid empty campaign") {
  Key key = random_key(9);
  FaultSpec spec = spec_of("stuck-at-0", 23, 0, 8);
  TraceSet ts = collect_ineffective(key, spec, 0, 1);
  CHECK(ts.complete);
  CHECK(ts.trials == 0);
  CHECK(ts.nonces.empty());
  std::ostringstream out;
  write_traceset(out, ts);
  std::istringstream in(out.str());
  TraceSet back = read_traceset(in);
  CHECK(back.nonces.empty());
  CHECK(back.spec == ts.spec);
}

TEST_CASE("trial cap yields a partial trace set") {
  Key key = random_key(5);
  FaultSpec spec = spec_of("prob-bitflip:2/3,1/3", 23, 0, 8);
  TraceSet ts = collect_ineffective(key, spec, 1000000, 7, 2000);
  CHECK_FALSE(ts.complete);
  CHECK(ts.trials == 2000);
  CHECK(ts.nonces.size() < 1000000);
}

TEST_CASE("trace set files round-trip bit-exactly") {
  Key key = random_key(6);
  FaultSpec spec = spec_of("prob-bitflip:2/3,1/3", 23, 0, 8);
  TraceSet ts = collect_ineffective(key, spec, 50, 11);

  std::ostringstream out;
  write_traceset(out, ts);
  std::istringstream in(out.str());
  TraceSet back = read_traceset(in);
  CHECK(back.spec == ts.spec);
  CHECK(back.seed == ts.seed);
  CHECK(back.trials == ts.trials);
  CHECK(back.nonces == ts.nonces);

  std::ostringstream again;
  write_traceset(again, back);
  CHECK(again.str() == out.str());
}

TEST_CASE("trace set reader reports bad input with line numbers") {
  SECTION("bad hex") {
    std::istringstream in(
        "model=stuck-at-0 w=1 boundary=23 row=b col=0 off=7 seed=1 trials=10\n"
        "00112233445566778899aabbccddeeff\n"
        "zz112233445566778899aabbccddeeff\n");
    CHECK_THROWS_WITH(read_traceset(in), Catch::Matchers::ContainsSubstring("line 3"));
  }
  SECTION("wrong nonce length") {
    std::istringstream in(
        "model=stuck-at-0 w=1 boundary=23 row=b col=0 off=7 seed=1 trials=10\nabcd\n");
    CHECK_THROWS_WITH(read_traceset(in), Catch::Matchers::ContainsSubstring("line 2"));
  }
  SECTION("missing metadata fields") {
    std::istringstream in("model=stuck-at-0 w=1\n");
    CHECK_THROWS_AS(read_traceset(in), std::invalid_argument);
  }
  SECTION("empty file") {
    std::istringstream in("");
    CHECK_THROWS_AS(read_traceset(in), std::invalid_argument);
  }
  SECTION("empty body is a valid trace set") {
    std::istringstream in("model=stuck-at-0 w=1 boundary=23 row=b col=0 off=7 seed=1 trials=0\n");
    TraceSet ts = read_traceset(in);
    CHECK(ts.nonces.empty());
    CHECK(ts.spec.location.boundary == 23);
  }
}

TEST_CASE("intermediate histograms show the ineffective bias") {
  Key key = random_key(8);
  SECTION("single bit: unfaulted counts near uniform, ineffective near 2:1") {
    FaultSpec spec = spec_of("prob-bitflip:2/3,1/3", 23, 7, 1);
    HistogramPair h = intermediate_histogram(key, spec, 100000, 21);
    double total = static_cast<double>(h.no_fault[0] + h.no_fault[1]);
    CHECK_THAT(static_cast<double>(h.no_fault[0]) / total, WithinAbs(0.5, 0.01));
    double ratio = static_cast<double>(h.ineffective[0]) / static_cast<double>(h.ineffective[1]);
    CHECK_THAT(ratio, WithinAbs(2.0, 0.15));
  }
  SECTION("byte-wide window: ineffective counts are visibly non-uniform") {
    FaultSpec spec = spec_of("prob-bitflip:2/3,1/3", 23, 0, 8);
    HistogramPair h = intermediate_histogram(key, spec, 200000, 23);
    auto normalized_sei = [](const std::vector<uint64_t>& bins) {
      double total = 0;
      for (uint64_t c : bins) total += static_cast<double>(c);
      double uniform = 1.0 / static_cast<double>(bins.size());
      double s = 0;
      for (uint64_t c : bins) {
        double diff = static_cast<double>(c) / total - uniform;
        s += diff * diff;
      }
      return s;
    };
    CHECK(normalized_sei(h.ineffective) > 10.0 * normalized_sei(h.no_fault));
  }
  SECTION("bit-flip leaves the ineffective histogram empty") {
    FaultSpec spec = spec_of("bit-flip", 23, 0, 4);
    HistogramPair h = intermediate_histogram(key, spec, 2000, 22);
    for (uint64_t c : h.ineffective) CHECK(c == 0);
  }
  SECTION("width is bounded by the bin count") {
    FaultSpec spec = spec_of("stuck-at-0", 23, 0, 8);
    spec.location.width = 20;
    CHECK_THROWS_AS(intermediate_histogram(key, spec, 10, 1), std::invalid_argument);
  }
}
