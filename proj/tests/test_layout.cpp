#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <set>

#include <gimli_sifa/layout.hpp>
#include <gimli_sifa/rng.hpp>

using namespace gimli_sifa;

namespace {

Key random_key(SplitMix64& rng) {
  Key k;
  for (auto& w : k.w) w = rng.next_u32();
  return k;
}

Nonce random_nonce(SplitMix64& rng) {
  Nonce n;
  for (auto& w : n.w) w = rng.next_u32();
  return n;
}

std::set<std::string> leaf_names(const std::vector<BitRef>& v) {
  std::set<std::string> out;
  for (const BitRef& r : v) out.insert(r.name());
  return out;
}

}  // namespace

TEST_CASE("round-23 layout: two unique bits, no groups") {
  ExprArena arena;
  NodeId e = trace(arena, TraceTarget{23, Row::b, 0, 7});
  HypothesisLayout lay = reduce_layout(arena, e);
  CHECK(lay.unique_bits.size() == 2);
  CHECK(lay.groups.empty());
  CHECK(lay.parameter_count() == 2);
  CHECK(lay.n_keybits() == 2);
  CHECK(leaf_names(lay.unique_bits) == std::set<std::string>{"k0.30", "k4.6"});
}

TEST_CASE("round-22 layout: three unique bits and three sums") {
  ExprArena arena;
  NodeId e = trace(arena, TraceTarget{22, Row::b, 0, 7});
  HypothesisLayout lay = reduce_layout(arena, e);
  CHECK(lay.parameter_count() == 6);
  CHECK(lay.n_keybits() == 11);
  CHECK(lay.distinct_key_bits.size() == 11);
  CHECK(leaf_names(lay.unique_bits) == std::set<std::string>{"k1.2", "k1.3", "k4.29"});
  REQUIRE(lay.groups.size() == 3);
  std::set<std::set<std::string>> group_sets;
  for (const auto& g : lay.groups) group_sets.insert(leaf_names(g.leaves));
  std::set<std::set<std::string>> expected{
      {"k0.21", "k1.6", "k5.15"},          // plain parity of three bits
      {"k1.5", "k5.14"},                   // parity of two bits
      {"k0.27", "k4.4", "k4.5"},           // sum containing an AND of two key bits
  };
  CHECK(group_sets == expected);
}

TEST_CASE("round-21 layout: fifteen unique bits and seven sums over 22 slots") {
  ExprArena arena;
  NodeId e = trace(arena, TraceTarget{21, Row::b, 0, 7});
  HypothesisLayout lay = reduce_layout(arena, e);
  CHECK(lay.parameter_count() == 22);
  CHECK(lay.unique_bits.size() == 15);
  CHECK(lay.groups.size() == 7);
  CHECK(lay.n_keybits() == 37);
  CHECK(lay.distinct_key_bits.size() == 35);
  CHECK(leaf_names(lay.unique_bits) ==
        std::set<std::string>{"k0.18", "k0.25", "k0.26", "k1.2", "k1.7", "k1.8", "k1.25", "k1.26",
                              "k4.1", "k4.2", "k4.3", "k4.4", "k4.5", "k4.20", "k4.26"});
  size_t slots = 0;
  for (const auto& g : lay.groups) slots += g.leaves.size();
  CHECK(slots == 22);
}

TEST_CASE("round-20 layout is computed but far beyond enumeration") {
  ExprArena arena;
  NodeId e = trace(arena, TraceTarget{20, Row::b, 0, 7});
  HypothesisLayout lay = reduce_layout(arena, e);
  CHECK(lay.parameter_count() > 60);
  CHECK(arena.expanded_leaf_slots(e, BitSource::key) == 168);
}

TEST_CASE("induced hypotheses predict the oracle bit") {
  ExprArena arena;
  SymbolicPermutation sym(arena);
  SplitMix64 rng{0x900d};
  for (int round : {23, 22, 21}) {
    TraceTarget t{round, Row::b, 0, 7};
    NodeId e = sym.before_round(round).word(Row::b, 0)[7];
    HypothesisLayout lay = reduce_layout(arena, e);
    for (int trial = 0; trial < 40; ++trial) {
      Key k = random_key(rng);
      Hypothesis h = induced_hypothesis(arena, lay, k);
      for (int i = 0; i < 40; ++i) {
        Nonce n = random_nonce(rng);
        REQUIRE(static_cast<int>(evaluate_hypothesis(arena, lay, h, n)) == oracle_bit(k, n, t));
      }
    }
  }
}

TEST_CASE("bit-packed tape agrees with the reference evaluator") {
  ExprArena arena;
  SymbolicPermutation sym(arena);
  SplitMix64 rng{0x7a7e};
  for (int round : {23, 22, 21}) {
    NodeId e = sym.before_round(round).word(Row::b, 0)[7];
    HypothesisLayout lay = reduce_layout(arena, e);
    EvalTape tape = compile_tape(arena, lay);
    CHECK(tape.param_count == static_cast<uint32_t>(lay.parameter_count()));

    std::vector<Nonce> nonces(150);
    for (auto& n : nonces) n = random_nonce(rng);
    NonceLanes lanes = pack_nonce_lanes(tape, nonces);
    std::vector<uint64_t> scratch(tape.scratch_size());
    for (int trial = 0; trial < 12; ++trial) {
      Hypothesis h = rng.next() & ((uint64_t{1} << lay.parameter_count()) - 1);
      for (size_t b = 0; b < lanes.n_blocks; ++b) {
        uint64_t lane = tape.eval_block(lanes.block(b), h, scratch.data());
        for (size_t i = 0; i < 64 && b * 64 + i < nonces.size(); ++i) {
          REQUIRE(((lane >> i) & 1) ==
                  static_cast<uint64_t>(evaluate_hypothesis(arena, lay, h, nonces[b * 64 + i])));
        }
      }
    }
  }
}

TEST_CASE("window layouts keep their own parameter spaces") {
  ExprArena arena;
  auto window = target_window(arena, TraceTarget{22, Row::b, 0, 0}, 8);
  REQUIRE(window.size() == 8);
  std::vector<int> params;
  for (const auto& wb : window) params.push_back(wb.layout.parameter_count());
  // the low bits lose terms to the shift boundaries, so their spaces shrink
  CHECK(params == std::vector<int>{3, 5, 6, 6, 6, 6, 6, 6});
  for (const auto& wb : window) CHECK(wb.target.round == 22);
}

TEST_CASE("single-bit window reduces to the plain trace") {
  ExprArena arena;
  auto window = target_window(arena, TraceTarget{22, Row::b, 0, 7}, 1);
  REQUIRE(window.size() == 1);
  CHECK(window[0].expr == trace(arena, TraceTarget{22, Row::b, 0, 7}));
}

TEST_CASE("every bit of the round-22 window is oracle-consistent") {
  ExprArena arena;
  auto window = target_window(arena, TraceTarget{22, Row::b, 0, 0}, 8);
  SplitMix64 rng{0x1dea};
  for (const auto& wb : window) {
    for (int i = 0; i < 200; ++i) {
      Key k = random_key(rng);
      Nonce n = random_nonce(rng);
      REQUIRE(static_cast<int>(evaluate_full(arena, wb.expr, k, n)) == oracle_bit(k, n, wb.target));
    }
  }
}

TEST_CASE("hypothesis aliasing has exactly the gate-deadness structure") {
  // Parameters of the round-22 bit-7 layout: p0..p2 the unique bits k1.2,
  // k1.3, k4.29; p3 the top-level sum; p4 the sum feeding the OR's right
  // branch; p5 the sum in its left branch. With p0 = 0 the left branch is
  // the constant 1 ^ p5, so either p4 never reaches the output (p5 = 0) or
  // p4 turns into a second top-level XOR term and flipping p3 and p4
  // together cancels (p5 = 1). All other hypothesis pairs predict
  // differently somewhere.
  ExprArena arena;
  auto window = target_window(arena, TraceTarget{22, Row::b, 0, 7}, 1);
  const WindowBit& wb = window[0];
  // 1001 nonces: an odd count, so a vector can never equal its complement
  std::vector<Nonce> nonces(1001);
  SplitMix64 rng{0xabc1};
  for (auto& n : nonces) n = random_nonce(rng);
  NonceLanes lanes = pack_nonce_lanes(wb.tape, nonces);
  std::vector<std::vector<uint64_t>> preds;
  for (Hypothesis h = 0; h < 64; ++h) {
    std::vector<uint64_t> scratch(wb.tape.scratch_size());
    std::vector<uint64_t> p(lanes.n_blocks);
    for (size_t b = 0; b < lanes.n_blocks; ++b)
      p[b] = wb.tape.eval_block(lanes.block(b), h, scratch.data()) & lanes.block_mask(b, 1001);
    preds.push_back(std::move(p));
  }
  for (uint32_t i = 0; i < preds.size(); ++i) {
    for (uint32_t j = i + 1; j < preds.size(); ++j) {
      bool p0 = i & 1, p5 = (i >> 5) & 1;
      bool aliased = !p0 && ((!p5 && (i ^ j) == 0b010000u) || (p5 && (i ^ j) == 0b011000u));
      REQUIRE((preds[i] == preds[j]) == aliased);
    }
  }
}

TEST_CASE("layout invariants") {
  ExprArena arena;
  NodeId e = trace(arena, TraceTarget{22, Row::b, 0, 7});
  HypothesisLayout lay = reduce_layout(arena, e);

  SECTION("unique bits are sorted and indexable") {
    CHECK(std::is_sorted(lay.unique_bits.begin(), lay.unique_bits.end()));
    for (size_t i = 0; i < lay.unique_bits.size(); ++i)
      CHECK(lay.unique_index(lay.unique_bits[i]) == static_cast<int>(i));
    CHECK_THROWS_AS(lay.unique_index(key_bit(7, 31)), std::logic_error);
  }
  SECTION("group leaves cover all non-unique distinct bits") {
    std::set<BitRef> covered(lay.unique_bits.begin(), lay.unique_bits.end());
    for (const auto& g : lay.groups)
      for (const BitRef& l : g.leaves) covered.insert(l);
    CHECK(covered == lay.distinct_key_bits);
  }
  SECTION("key-only expressions are rejected") {
    NodeId key_only = arena.band(arena.leaf(key_bit(0, 0)), arena.leaf(key_bit(1, 1)));
    CHECK_THROWS_AS(reduce_layout(arena, key_only), std::invalid_argument);
  }
}
