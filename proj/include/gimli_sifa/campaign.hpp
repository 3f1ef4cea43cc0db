#pragma once

#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "aead.hpp"
#include "fault.hpp"
#include "gimli.hpp"
#include "rng.hpp"

// Fault injection into the first permutation of a Gimli-Cipher decryption and
// collection of nonces whose faulted decryptions were ineffective.
namespace gimli_sifa {

// Where a fault lands: `boundary` names the round that has just completed
// when the fault strikes, so boundary = 23 corrupts the state the paper
// writes as a^22/b^22/c^22. The w-bit window lives inside a single word.
struct FaultLocation {
  int boundary = 23;
  Row row = Row::b;
  int col = 0;
  int bit_offset = 0;
  unsigned width = 8;

  void validate() const {
    if (boundary < 1 || boundary > gimli_rounds)
      throw std::invalid_argument("fault boundary outside 1..24: " + std::to_string(boundary));
    if (col < 0 || col > 3) throw std::invalid_argument("fault column outside 0..3");
    if (width < 1 || width > 32) throw std::invalid_argument("fault width outside 1..32");
    if (bit_offset < 0 || bit_offset + static_cast<int>(width) > 32)
      throw std::invalid_argument("fault window must stay inside one 32-bit word");
  }

  // Hook label of the state the fault mutates (state before this round).
  int hooked_round() const { return boundary - 1; }

  bool operator==(const FaultLocation&) const = default;
};

struct FaultSpec {
  FaultModel model;
  FaultLocation location;
  SpBoxVariant variant = SpBoxVariant::official;

  bool operator==(const FaultSpec&) const = default;
};

inline uint32_t read_window(const GimliState& s, const FaultLocation& loc) {
  return (s.word(loc.row, loc.col) >> loc.bit_offset) & width_mask(loc.width);
}

inline void write_window(GimliState& s, const FaultLocation& loc, uint32_t value) {
  uint32_t& w = s.word(loc.row, loc.col);
  uint32_t mask = width_mask(loc.width) << loc.bit_offset;
  w = (w & ~mask) | ((value << loc.bit_offset) & mask);
}

struct FaultedDecryptResult {
  std::optional<bytes_t> output;  // plaintext on tag match, nothing otherwise
  bool ineffective = false;       // output released, i.e. the fault changed nothing
};

// Full path: run the decryption with the fault injected into the first
// permutation and classify by the tag check. Expects the trial stream
// positioned right after the nonce draw.
inline FaultedDecryptResult faulted_decrypt(const Key& key, const Nonce& nonce,
                                            std::span<const uint8_t> ad, std::span<const uint8_t> ct,
                                            std::span<const uint8_t> tag, const FaultSpec& spec,
                                            SplitMix64& rng) {
  spec.location.validate();
  const int hooked = spec.location.hooked_round();
  auto hook = [&](int r, GimliState& s) {
    if (r != hooked) return;
    uint32_t before = read_window(s, spec.location);
    uint32_t after = apply_fault(before, spec.location.width, spec.model, rng);
    write_window(s, spec.location, after);
  };
  auto output = aead_decrypt_hooked(key, nonce, ad, ct, tag, hook, spec.variant);
  bool ineffective = output.has_value();
  return {std::move(output), ineffective};
}

// Fast path: compare the faulted window against the original and skip the
// rest of the decryption. Consumes exactly the draws the full path would,
// and the two paths agree trial for trial (the fault is ineffective iff the
// state, and therefore the tag, is unchanged).
inline bool faulted_window_unchanged(const Key& key, const Nonce& nonce, const FaultSpec& spec,
                                     SplitMix64& rng) {
  spec.location.validate();
  GimliState s = state_before_round(init_state(key, nonce), spec.location.hooked_round(), spec.variant);
  uint32_t before = read_window(s, spec.location);
  uint32_t after = apply_fault(before, spec.location.width, spec.model, rng);
  return before == after;
}

inline Nonce draw_nonce(SplitMix64& rng) {
  Nonce n;
  for (int i = 0; i < 4; ++i) n.w[i] = rng.next_u32();
  return n;
}

// Nonces whose faulted decryptions released the plaintext, plus the campaign
// bookkeeping needed to reproduce or extend the run.
struct TraceSet {
  FaultSpec spec;
  uint64_t seed = 0;
  uint64_t trials = 0;
  std::vector<Nonce> nonces;
  bool complete = true;  // false when the trial cap cut the campaign short

  uint64_t n_ineffective() const { return nonces.size(); }
  double empirical_rate() const {
    return trials == 0 ? 0.0 : static_cast<double>(nonces.size()) / static_cast<double>(trials);
  }
};

inline constexpr uint64_t default_trial_cap = 100'000'000;

// The message every collection trial encrypts; the attack consumes nonces
// only, so any fixed plaintext works.
inline const bytes_t& campaign_message() {
  static const bytes_t msg = {0x00, 0x01, 0x02, 0x03, 0x04, 0x05, 0x06, 0x07};
  return msg;
}

// Draws one random nonce per trial, encrypts the fixed message, decrypts it
// under the fault, and keeps nonces where the plaintext came back. Trial i
// uses substream (seed, i), so thread count or chunking cannot change the
// outcome.
inline TraceSet collect_ineffective(const Key& key, const FaultSpec& spec, uint64_t target,
                                    uint64_t seed, uint64_t trial_cap = default_trial_cap) {
  spec.location.validate();
  TraceSet ts;
  ts.spec = spec;
  ts.seed = seed;
  ts.nonces.reserve(target);
  const bytes_t& msg = campaign_message();
  const bytes_t ad;
  uint64_t t = 0;
  for (; ts.nonces.size() < target && t < trial_cap; ++t) {
    SplitMix64 rng = trial_stream(seed, t);
    Nonce nonce = draw_nonce(rng);
    AeadResult enc = aead_encrypt(key, nonce, ad, msg, spec.variant);
    FaultedDecryptResult r = faulted_decrypt(key, nonce, ad, enc.ciphertext, enc.tag, spec, rng);
    if (r.ineffective) ts.nonces.push_back(nonce);
  }
  ts.trials = t;
  ts.complete = ts.nonces.size() >= target;
  return ts;
}

struct HistogramPair {
  std::vector<uint64_t> no_fault;     // window value counts over all trials
  std::vector<uint64_t> ineffective;  // counts over trials whose fault was ineffective
};

// Distribution of the targeted window with and without the fault filter
// (the paper's green/blue histograms). Widths up to 16 bits.
inline HistogramPair intermediate_histogram(const Key& key, const FaultSpec& spec, uint64_t trials,
                                            uint64_t seed) {
  spec.location.validate();
  if (spec.location.width > 16)
    throw std::invalid_argument("histogram width outside 1..16 (would need 2^w bins)");
  const size_t bins = size_t{1} << spec.location.width;
  HistogramPair h{std::vector<uint64_t>(bins, 0), std::vector<uint64_t>(bins, 0)};
  for (uint64_t t = 0; t < trials; ++t) {
    SplitMix64 rng = trial_stream(seed, t);
    Nonce nonce = draw_nonce(rng);
    GimliState s =
        state_before_round(init_state(key, nonce), spec.location.hooked_round(), spec.variant);
    uint32_t value = read_window(s, spec.location);
    h.no_fault[value] += 1;
    uint32_t faulted = apply_fault(value, spec.location.width, spec.model, rng);
    if (faulted == value) h.ineffective[value] += 1;
  }
  return h;
}

// --- trace set file format -------------------------------------------------
//
// Line 1:  model=<name> w=<int> boundary=<int> row=<a|b|c> col=<int> off=<int>
//          seed=<u64> trials=<u64>
// Then one nonce per line as 32 hex characters (words n_0..n_3, little-endian
// bytes per word). Round-trips bit-exactly.

inline std::string traceset_metadata_line(const TraceSet& ts) {
  std::ostringstream os;
  os << "model=" << to_string(ts.spec.model) << " w=" << ts.spec.location.width
     << " boundary=" << ts.spec.location.boundary << " row=" << to_char(ts.spec.location.row)
     << " col=" << ts.spec.location.col << " off=" << ts.spec.location.bit_offset
     << " seed=" << ts.seed << " trials=" << ts.trials;
  return os.str();
}

inline void write_traceset(std::ostream& out, const TraceSet& ts) {
  out << traceset_metadata_line(ts) << "\n";
  for (const Nonce& n : ts.nonces) out << to_hex(n.to_bytes()) << "\n";
}

inline void write_traceset(const std::string& path, const TraceSet& ts) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::invalid_argument("cannot open trace file for writing: " + path);
  write_traceset(f, ts);
}

inline TraceSet read_traceset(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw std::invalid_argument("trace file is empty");
  TraceSet ts;
  std::istringstream meta(line);
  std::string tok;
  int seen = 0;
  while (meta >> tok) {
    size_t eq = tok.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("trace file line 1: bad metadata token '" + tok + "'");
    std::string k = tok.substr(0, eq);
    std::string v = tok.substr(eq + 1);
    try {
      if (k == "model") ts.spec.model = fault_model_from_string(v);
      else if (k == "w") ts.spec.location.width = static_cast<unsigned>(std::stoul(v));
      else if (k == "boundary") ts.spec.location.boundary = std::stoi(v);
      else if (k == "row") ts.spec.location.row = row_from_char(v.at(0));
      else if (k == "col") ts.spec.location.col = std::stoi(v);
      else if (k == "off") ts.spec.location.bit_offset = std::stoi(v);
      else if (k == "seed") ts.seed = std::stoull(v);
      else if (k == "trials") ts.trials = std::stoull(v);
      else throw std::invalid_argument("unknown key '" + k + "'");
    } catch (const std::invalid_argument&) {
      throw std::invalid_argument("trace file line 1: cannot parse '" + tok + "'");
    }
    ++seen;
  }
  if (seen != 8) throw std::invalid_argument("trace file line 1: expected 8 metadata fields");
  ts.spec.location.validate();
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    std::string t = detail::trim_copy(line);
    if (t.empty()) continue;
    bytes_t raw;
    try {
      raw = parse_hex(t);
    } catch (const std::exception& e) {
      throw std::invalid_argument("trace file line " + std::to_string(lineno) + ": " + e.what());
    }
    if (raw.size() != 16)
      throw std::invalid_argument("trace file line " + std::to_string(lineno) +
                                  ": nonce must be 32 hex characters");
    ts.nonces.push_back(Nonce::from_bytes(raw));
  }
  return ts;
}

inline TraceSet read_traceset(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::invalid_argument("cannot open trace file: " + path);
  return read_traceset(f);
}

}  // namespace gimli_sifa
