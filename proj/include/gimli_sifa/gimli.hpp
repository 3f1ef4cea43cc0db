#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>

#include "words.hpp"

// Gimli permutation (Bernstein et al., 24 rounds over a 3x4 matrix of 32-bit
// words) with per-round-boundary observation hooks. Rows are named a, b, c;
// columns 0..3. Rounds count down: a permutation starts with round 24 and
// ends with round 1, so "the state before round r" is well defined for
// r = 24 (the input) down to r = 0 (the output).
namespace gimli_sifa {

inline constexpr int gimli_rounds = 24;
inline constexpr uint32_t round_constant_base = 0x9e377900u;

// Round constant injected in round r (only rounds with r mod 4 = 0 add it).
// The low byte of the base is zero, so for r <= 24 XOR equals OR.
inline constexpr uint32_t round_constant(int r) {
  return round_constant_base ^ static_cast<uint32_t>(r);
}

// The published SP-box shifts the (t_b & t_c) term of the c-update by 2.
// A variant with shift 3 exists in some descriptions of the cipher and can
// be selected everywhere a permutation runs; known-answer tests only pass
// with the official box.
enum class SpBoxVariant { official, paper };

inline SpBoxVariant spbox_variant_from_string(const std::string& s) {
  if (s == "official") return SpBoxVariant::official;
  if (s == "paper") return SpBoxVariant::paper;
  throw std::invalid_argument("unknown sp-box variant: " + s + " (expected official|paper)");
}

inline const char* to_string(SpBoxVariant v) {
  return v == SpBoxVariant::official ? "official" : "paper";
}

enum class Row : uint8_t { a = 0, b = 1, c = 2 };

inline Row row_from_char(char c) {
  switch (c) {
    case 'a': return Row::a;
    case 'b': return Row::b;
    case 'c': return Row::c;
    default: throw std::invalid_argument(std::string("bad row: ") + c + " (expected a|b|c)");
  }
}

inline char to_char(Row r) { return "abc"[static_cast<int>(r)]; }

// 256-bit key, eight words k_0..k_7 loaded little-endian from 32 bytes.
struct Key {
  std::array<uint32_t, 8> w{};

  static Key from_bytes(std::span<const uint8_t> bytes) {
    if (bytes.size() != 32) throw std::invalid_argument("key must be 32 bytes");
    Key k;
    for (int i = 0; i < 8; ++i) k.w[i] = load_le32(bytes.data() + 4 * i);
    return k;
  }

  static Key from_hex(const std::string& hex) {
    auto bytes = from_hex_checked(hex, 32, "key");
    return from_bytes(bytes);
  }

  std::array<uint8_t, 32> to_bytes() const {
    std::array<uint8_t, 32> out{};
    for (int i = 0; i < 8; ++i) store_le32(out.data() + 4 * i, w[i]);
    return out;
  }

  int bit(int word, int bit_index) const { return (w[word] >> bit_index) & 1; }

  void flip_bit(int word, int bit_index) { w[word] ^= (1u << bit_index); }

  bool operator==(const Key&) const = default;

 private:
  static std::vector<uint8_t> from_hex_checked(const std::string& hex, size_t n, const char* what) {
    auto bytes = parse_hex(hex);
    if (bytes.size() != n)
      throw std::invalid_argument(std::string(what) + " hex must encode " + std::to_string(n) + " bytes");
    return bytes;
  }
};

// 128-bit nonce, four words n_0..n_3 loaded little-endian from 16 bytes.
struct Nonce {
  std::array<uint32_t, 4> w{};

  static Nonce from_bytes(std::span<const uint8_t> bytes) {
    if (bytes.size() != 16) throw std::invalid_argument("nonce must be 16 bytes");
    Nonce n;
    for (int i = 0; i < 4; ++i) n.w[i] = load_le32(bytes.data() + 4 * i);
    return n;
  }

  std::array<uint8_t, 16> to_bytes() const {
    std::array<uint8_t, 16> out{};
    for (int i = 0; i < 4; ++i) store_le32(out.data() + 4 * i, w[i]);
    return out;
  }

  int bit(int word, int bit_index) const { return (w[word] >> bit_index) & 1; }

  bool operator==(const Nonce&) const = default;
};

// 384-bit state. Row a is the sponge rate, b||c the capacity.
struct GimliState {
  std::array<uint32_t, 4> a{};
  std::array<uint32_t, 4> b{};
  std::array<uint32_t, 4> c{};

  uint32_t& word(Row r, int col) {
    switch (r) {
      case Row::a: return a[col];
      case Row::b: return b[col];
      default: return c[col];
    }
  }

  uint32_t word(Row r, int col) const {
    switch (r) {
      case Row::a: return a[col];
      case Row::b: return b[col];
      default: return c[col];
    }
  }

  int bit(Row r, int col, int bit_index) const { return (word(r, col) >> bit_index) & 1; }

  // 48-byte serialization: little-endian words, row-major a, b, c. This is a
  // bijection and matches the byte layout the AEAD operates on.
  std::array<uint8_t, 48> to_bytes() const {
    std::array<uint8_t, 48> out{};
    for (int i = 0; i < 4; ++i) {
      store_le32(out.data() + 4 * i, a[i]);
      store_le32(out.data() + 16 + 4 * i, b[i]);
      store_le32(out.data() + 32 + 4 * i, c[i]);
    }
    return out;
  }

  static GimliState from_bytes(std::span<const uint8_t> bytes) {
    if (bytes.size() != 48) throw std::invalid_argument("state must be 48 bytes");
    GimliState s;
    for (int i = 0; i < 4; ++i) {
      s.a[i] = load_le32(bytes.data() + 4 * i);
      s.b[i] = load_le32(bytes.data() + 16 + 4 * i);
      s.c[i] = load_le32(bytes.data() + 32 + 4 * i);
    }
    return s;
  }

  uint8_t byte(int i) const {
    uint32_t w = i < 16 ? a[i / 4] : (i < 32 ? b[(i - 16) / 4] : c[(i - 32) / 4]);
    return static_cast<uint8_t>(w >> (8 * (i % 4)));
  }

  void xor_byte(int i, uint8_t v) {
    uint32_t& w = i < 16 ? a[i / 4] : (i < 32 ? b[(i - 16) / 4] : c[(i - 32) / 4]);
    w ^= static_cast<uint32_t>(v) << (8 * (i % 4));
  }

  void set_byte(int i, uint8_t v) {
    uint32_t& w = i < 16 ? a[i / 4] : (i < 32 ? b[(i - 16) / 4] : c[(i - 32) / 4]);
    int sh = 8 * (i % 4);
    w = (w & ~(0xffu << sh)) | (static_cast<uint32_t>(v) << sh);
  }

  bool operator==(const GimliState&) const = default;
};

// The non-linear column operation. Pure; returns the updated (a, b, c) words.
struct SpBoxOut {
  uint32_t a, b, c;
};

inline SpBoxOut sp_box(uint32_t a, uint32_t b, uint32_t c,
                       SpBoxVariant v = SpBoxVariant::official) {
  const uint32_t x = std::rotl(a, 24);
  const uint32_t y = std::rotl(b, 9);
  const uint32_t z = c;
  const int c_shift = v == SpBoxVariant::official ? 2 : 3;
  return {
      z ^ y ^ ((x & y) << 3),
      y ^ x ^ ((x | z) << 1),
      x ^ (z << 1) ^ ((y & z) << c_shift),
  };
}

// Swaps and constant addition of round r. Rounds with r mod 4 = 0 apply the
// small swap (a1,a0,a3,a2) followed by the constant. Rounds with r mod 4 = 2
// apply the big swap (a2,a3,a0,a1). All other rounds leave the state alone.
inline void linear_layer(GimliState& s, int r) {
  if (r < 1 || r > gimli_rounds) throw std::invalid_argument("round out of range: " + std::to_string(r));
  if (r % 4 == 0) {
    std::swap(s.a[0], s.a[1]);
    std::swap(s.a[2], s.a[3]);
    s.a[0] ^= round_constant(r);
  } else if (r % 4 == 2) {
    std::swap(s.a[0], s.a[2]);
    std::swap(s.a[1], s.a[3]);
  }
}

inline void gimli_round(GimliState& s, int r, SpBoxVariant v = SpBoxVariant::official) {
  for (int j = 0; j < 4; ++j) {
    SpBoxOut o = sp_box(s.a[j], s.b[j], s.c[j], v);
    s.a[j] = o.a;
    s.b[j] = o.b;
    s.c[j] = o.c;
  }
  linear_layer(s, r);
}

inline GimliState permute(GimliState s, SpBoxVariant v = SpBoxVariant::official) {
  for (int r = gimli_rounds; r >= 1; --r) gimli_round(s, r, v);
  return s;
}

// Permutation with a callback at every round boundary. The hook receives the
// number of the round about to execute together with a mutable state view:
// hook(24, s) sees the input state, hook(r, s) for r in 23..1 sees the state
// after round r+1 finished (the paper's a^r, b^r, c^r), and hook(0, s) sees
// the output. A hook may record bits or alter the state in place.
template <typename Hook>
GimliState permute_hooked(GimliState s, Hook&& hook, SpBoxVariant v = SpBoxVariant::official) {
  for (int r = gimli_rounds; r >= 1; --r) {
    hook(r, s);
    gimli_round(s, r, v);
  }
  hook(0, s);
  return s;
}

// State before round r of a permutation of `s`, r in 24..0 (24 returns the
// input unchanged, 0 the full permutation output).
inline GimliState state_before_round(GimliState s, int r, SpBoxVariant v = SpBoxVariant::official) {
  if (r < 0 || r > gimli_rounds) throw std::invalid_argument("round out of range: " + std::to_string(r));
  for (int round = gimli_rounds; round > r; --round) gimli_round(s, round, v);
  return s;
}

// Initialization of the AEAD: nonce into row a, key into rows b and c.
inline GimliState init_state(const Key& k, const Nonce& n) {
  GimliState s;
  for (int i = 0; i < 4; ++i) {
    s.a[i] = n.w[i];
    s.b[i] = k.w[i];
    s.c[i] = k.w[4 + i];
  }
  return s;
}

}  // namespace gimli_sifa
