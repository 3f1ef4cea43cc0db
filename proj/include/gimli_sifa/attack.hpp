#pragma once

#include <algorithm>
#include <bit>
#include <cstdint>
#include <numeric>
#include <ostream>
#include <span>
#include <thread>
#include <vector>

#include "campaign.hpp"
#include "layout.hpp"
#include "stats.hpp"

// The key-recovery loop: enumerate every hypothesis of a window bit, predict
// the intermediate bit for every collected nonce, and rank hypotheses by the
// imbalance of the predicted distribution. Ranking and ties are computed on
// the integer score |2*ones - N|, which orders exactly like the SEI.
//
// One ambiguity is inherent: flipping a parameter that enters the expression
// as a top-level XOR term complements the prediction for every nonce, and a
// mirrored distribution has the same imbalance. The true hypothesis and its
// complement-mates therefore tie exactly, and reports always carry the full
// tie set.
namespace gimli_sifa {

inline constexpr int max_enumeration_params = 24;

struct HypothesisScore {
  Hypothesis hypothesis = 0;
  double sei = 0.0;
};

struct BitAttackReport {
  TraceTarget target;
  int parameter_count = 0;
  uint64_t n_used = 0;
  Hypothesis best = 0;  // lowest-index member of the tie set
  double best_sei = 0.0;
  uint64_t tie_count = 0;
  std::vector<Hypothesis> tie_set;       // ascending; capped at tie_set_cap
  std::vector<HypothesisScore> ranking;  // descending SEI, ties by ascending index
};

struct AttackReport {
  std::vector<BitAttackReport> bits;
};

struct AttackOptions {
  size_t ranking_rows = 1024;  // ranking entries kept per bit
  size_t tie_set_cap = 4096;
  unsigned threads = 1;
};

namespace detail {

// ones[h] = number of collected nonces for which hypothesis h predicts 1.
inline std::vector<uint32_t> predict_ones(const EvalTape& tape, const NonceLanes& lanes,
                                          unsigned threads) {
  if (tape.param_count > max_enumeration_params)
    throw std::invalid_argument("hypothesis space 2^" + std::to_string(tape.param_count) +
                                " exceeds the enumeration limit 2^" +
                                std::to_string(max_enumeration_params));
  const uint64_t n_hyp = uint64_t{1} << tape.param_count;
  std::vector<uint32_t> ones(n_hyp, 0);
  const size_t n_blocks = lanes.n_blocks;
  std::vector<uint64_t> masks(n_blocks);
  for (size_t b = 0; b < n_blocks; ++b) masks[b] = lanes.block_mask(b, lanes.n_nonces);

  auto work = [&](uint64_t lo, uint64_t hi) {
    std::vector<uint64_t> scratch(tape.scratch_size());
    for (uint64_t h = lo; h < hi; ++h) {
      uint32_t c = 0;
      for (size_t b = 0; b < n_blocks; ++b)
        c += static_cast<uint32_t>(
            std::popcount(tape.eval_block(lanes.block(b), h, scratch.data()) & masks[b]));
      ones[h] = c;
    }
  };

  unsigned t = std::max(1u, threads);
  if (t == 1 || n_hyp < 4096) {
    work(0, n_hyp);
  } else {
    std::vector<std::thread> pool;
    uint64_t chunk = (n_hyp + t - 1) / t;
    for (unsigned i = 0; i < t; ++i) {
      uint64_t lo = i * chunk, hi = std::min(n_hyp, lo + chunk);
      if (lo < hi) pool.emplace_back(work, lo, hi);
    }
    for (auto& th : pool) th.join();
  }
  return ones;
}

}  // namespace detail

inline BitAttackReport attack_bit(const WindowBit& wb, std::span<const Nonce> nonces,
                                  const AttackOptions& opts = {}) {
  if (nonces.empty()) throw std::invalid_argument("attack needs a non-empty trace set");
  BitAttackReport rep;
  rep.target = wb.target;
  rep.parameter_count = wb.layout.parameter_count();
  rep.n_used = nonces.size();

  NonceLanes lanes = pack_nonce_lanes(wb.tape, nonces);
  std::vector<uint32_t> ones = detail::predict_ones(wb.tape, lanes, opts.threads);
  const uint64_t n = nonces.size();

  uint64_t best_score = 0;
  for (uint64_t h = 0; h < ones.size(); ++h) {
    uint64_t s = sei_rank_score(ones[h], n);
    if (h == 0 || s > best_score) {
      best_score = s;
      rep.best = h;
      rep.tie_count = 1;
      rep.tie_set.assign(1, h);
    } else if (s == best_score) {
      ++rep.tie_count;
      if (rep.tie_set.size() < opts.tie_set_cap) rep.tie_set.push_back(h);
    }
  }
  rep.best_sei = sei_from_ones(ones[rep.best], n);

  size_t rows = std::min<size_t>(opts.ranking_rows, ones.size());
  std::vector<uint32_t> idx(ones.size());
  std::iota(idx.begin(), idx.end(), 0);
  auto better = [&](uint32_t a, uint32_t b) {
    uint64_t sa = sei_rank_score(ones[a], n), sb = sei_rank_score(ones[b], n);
    return sa != sb ? sa > sb : a < b;
  };
  std::partial_sort(idx.begin(), idx.begin() + rows, idx.end(), better);
  rep.ranking.reserve(rows);
  for (size_t i = 0; i < rows; ++i)
    rep.ranking.push_back({idx[i], sei_from_ones(ones[idx[i]], n)});
  return rep;
}

// Runs every bit of the window independently; bits keep their own parameter
// spaces, and recovered parameters are combined by the caller.
inline AttackReport attack(std::span<const WindowBit> window, std::span<const Nonce> nonces,
                           const AttackOptions& opts = {}) {
  if (window.empty()) throw std::invalid_argument("attack needs a non-empty window");
  AttackReport rep;
  for (const WindowBit& wb : window) rep.bits.push_back(attack_bit(wb, nonces, opts));
  return rep;
}

// Consistency check between a trace set and an attack target: the fault at
// `boundary` biases the state before round boundary-1.
inline TraceTarget target_for_traceset(const TraceSet& ts) {
  TraceTarget t;
  t.round = ts.spec.location.boundary - 1;
  t.row = ts.spec.location.row;
  t.col = ts.spec.location.col;
  t.bit = ts.spec.location.bit_offset;
  return t;
}

// --- prefix curves -----------------------------------------------------------

struct CurvePoint {
  uint64_t n_used = 0;
  int bit = 0;  // bit position within the faulted word
  double sei_correct = 0.0;
  double sei_best_wrong = 0.0;  // best hypothesis that is not a prediction alias of the truth
  int advantage_top = 0;        // parameter bits of the top-ranked hypothesis matching truth
  int advantage_tie_best = 0;   // best match among the exact-tie set
  uint64_t tie_count = 0;
};

// Walks prefixes step, 2*step, ... of the trace set for one window bit and
// tracks the true hypothesis against the field. "Wrong" excludes hypotheses
// whose predictions over the prefix equal the truth's or its complement;
// those carry the same information and the same score by construction.
inline std::vector<CurvePoint> attack_bit_curves(const ExprArena& arena, const WindowBit& wb,
                                                 std::span<const Nonce> nonces, const Key& true_key,
                                                 uint64_t step) {
  if (step == 0) throw std::invalid_argument("curve step must be >= 1");
  if (nonces.empty()) throw std::invalid_argument("curves need a non-empty trace set");
  if (wb.tape.param_count > max_enumeration_params)
    throw std::invalid_argument("hypothesis space exceeds the enumeration limit");

  const Hypothesis truth = induced_hypothesis(arena, wb.layout, true_key);
  const int n_params = wb.layout.parameter_count();
  NonceLanes lanes = pack_nonce_lanes(wb.tape, nonces);
  const size_t n_blocks = lanes.n_blocks;

  std::vector<uint64_t> prefixes;
  for (uint64_t p = step; p < nonces.size(); p += step) prefixes.push_back(p);
  prefixes.push_back(nonces.size());
  const size_t n_pref = prefixes.size();

  // Per-prefix block masks and the truth's prediction blocks.
  std::vector<uint64_t> pref_mask(n_pref * n_blocks);
  for (size_t k = 0; k < n_pref; ++k)
    for (size_t b = 0; b < n_blocks; ++b)
      pref_mask[k * n_blocks + b] = lanes.block_mask(b, prefixes[k]);
  std::vector<uint64_t> truth_pred(n_blocks);
  std::vector<uint64_t> scratch(wb.tape.scratch_size());
  for (size_t b = 0; b < n_blocks; ++b)
    truth_pred[b] = wb.tape.eval_block(lanes.block(b), truth, scratch.data());

  struct PrefixState {
    uint64_t best_score = 0;
    Hypothesis best = 0;
    uint64_t tie_count = 0;
    int tie_best_match = 0;
    bool initialized = false;
    uint64_t truth_ones = 0;
    uint64_t wrong_best_score = 0;
    bool wrong_seen = false;
  };
  std::vector<PrefixState> st(n_pref);

  std::vector<uint64_t> pred(n_blocks);
  const uint64_t n_hyp = uint64_t{1} << wb.tape.param_count;
  for (Hypothesis h = 0; h < n_hyp; ++h) {
    for (size_t b = 0; b < n_blocks; ++b)
      pred[b] = wb.tape.eval_block(lanes.block(b), h, scratch.data());
    int match = n_params - std::popcount(h ^ truth);
    for (size_t k = 0; k < n_pref; ++k) {
      const uint64_t* masks = &pref_mask[k * n_blocks];
      uint64_t ones = 0;
      bool same = true, compl_ = true;
      for (size_t b = 0; b < n_blocks; ++b) {
        uint64_t v = pred[b] & masks[b];
        ones += static_cast<uint64_t>(std::popcount(v));
        uint64_t tv = truth_pred[b] & masks[b];
        same = same && v == tv;
        compl_ = compl_ && v == (~truth_pred[b] & masks[b]);
      }
      uint64_t score = sei_rank_score(ones, prefixes[k]);
      PrefixState& s = st[k];
      if (!s.initialized || score > s.best_score) {
        s.initialized = true;
        s.best_score = score;
        s.best = h;
        s.tie_count = 1;
        s.tie_best_match = match;
      } else if (score == s.best_score) {
        ++s.tie_count;
        s.tie_best_match = std::max(s.tie_best_match, match);
      }
      if (h == truth) s.truth_ones = ones;
      bool alias = same || compl_;
      if (!alias && (!s.wrong_seen || score > s.wrong_best_score)) {
        s.wrong_seen = true;
        s.wrong_best_score = score;
      }
    }
  }

  std::vector<CurvePoint> out;
  out.reserve(n_pref);
  for (size_t k = 0; k < n_pref; ++k) {
    const PrefixState& s = st[k];
    CurvePoint p;
    p.n_used = prefixes[k];
    p.bit = wb.target.bit;
    p.sei_correct = sei_from_ones(s.truth_ones, prefixes[k]);
    // score s' = |2c - N|  =>  SEI = s'^2 / (2 N^2)
    p.sei_best_wrong =
        s.wrong_seen ? static_cast<double>(s.wrong_best_score) * static_cast<double>(s.wrong_best_score) /
                           (2.0 * static_cast<double>(prefixes[k]) * static_cast<double>(prefixes[k]))
                     : 0.0;
    p.advantage_top = n_params - std::popcount(s.best ^ truth);
    p.advantage_tie_best = s.tie_best_match;
    p.tie_count = s.tie_count;
    out.push_back(p);
  }
  return out;
}

inline std::vector<CurvePoint> attack_curves(const ExprArena& arena,
                                             std::span<const WindowBit> window,
                                             std::span<const Nonce> nonces, const Key& true_key,
                                             uint64_t step) {
  std::vector<CurvePoint> out;
  for (const WindowBit& wb : window) {
    auto rows = attack_bit_curves(arena, wb, nonces, true_key, step);
    out.insert(out.end(), rows.begin(), rows.end());
  }
  return out;
}

// Spec-level views of the curve rows.
struct AdvantagePoint {
  uint64_t n_used;
  int bit;
  int advantage_top;
  int advantage_tie_best;
};

inline std::vector<AdvantagePoint> advantage_curve(const ExprArena& arena, const WindowBit& wb,
                                                   std::span<const Nonce> nonces,
                                                   const Key& true_key, uint64_t step) {
  std::vector<AdvantagePoint> out;
  for (const CurvePoint& p : attack_bit_curves(arena, wb, nonces, true_key, step))
    out.push_back({p.n_used, p.bit, p.advantage_top, p.advantage_tie_best});
  return out;
}

struct SeiPoint {
  uint64_t n_used;
  int bit;
  double sei_correct;
  double sei_best_wrong;
};

inline std::vector<SeiPoint> sei_curve(const ExprArena& arena, const WindowBit& wb,
                                       std::span<const Nonce> nonces, const Key& true_key,
                                       uint64_t step) {
  std::vector<SeiPoint> out;
  for (const CurvePoint& p : attack_bit_curves(arena, wb, nonces, true_key, step))
    out.push_back({p.n_used, p.bit, p.sei_correct, p.sei_best_wrong});
  return out;
}

// Prediction blocks of one hypothesis over a packed trace set; used to test
// whether two hypotheses are prediction aliases over those nonces.
inline std::vector<uint64_t> prediction_blocks(const WindowBit& wb, const NonceLanes& lanes,
                                               Hypothesis h) {
  std::vector<uint64_t> scratch(wb.tape.scratch_size());
  std::vector<uint64_t> out(lanes.n_blocks);
  for (size_t b = 0; b < lanes.n_blocks; ++b) {
    out[b] = wb.tape.eval_block(lanes.block(b), h, scratch.data()) & lanes.block_mask(b, lanes.n_nonces);
  }
  return out;
}

inline bool predictions_equal_or_complement(const WindowBit& wb, const NonceLanes& lanes,
                                            Hypothesis a, Hypothesis b) {
  auto pa = prediction_blocks(wb, lanes, a);
  auto pb = prediction_blocks(wb, lanes, b);
  bool same = true, compl_ = true;
  for (size_t i = 0; i < pa.size(); ++i) {
    uint64_t mask = lanes.block_mask(i, lanes.n_nonces);
    same = same && pa[i] == pb[i];
    compl_ = compl_ && pb[i] == (~pa[i] & mask);
  }
  return same || compl_;
}

}  // namespace gimli_sifa
