#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "gimli.hpp"

// Gimli-24-Cipher: sponge AEAD with 128-bit rate (row a) and 256-bit capacity
// (rows b, c). Framing follows the designers' NIST submission byte for byte:
// 16-byte blocks, a single 0x01 padding byte at the block cursor plus 0x01
// into the last capacity byte for domain separation, applied after the final
// (possibly empty) block of both the associated data and the message phase.
namespace gimli_sifa {

using bytes_t = std::vector<uint8_t>;

struct AeadResult {
  bytes_t ciphertext;  // same length as the message
  std::array<uint8_t, 16> tag{};
};

namespace detail {

// One sponge pass shared by encrypt and decrypt. `Permute` is invoked for
// every permutation call; the caller decides whether the first one (the
// initialization permutation the fault attack targets) behaves differently.
template <typename Permute>
AeadResult sponge_run(const Key& key, const Nonce& nonce, std::span<const uint8_t> ad,
                      std::span<const uint8_t> in, bool decrypting, Permute&& perm) {
  GimliState s = init_state(key, nonce);
  bool first = true;
  auto run = [&](GimliState& st) {
    perm(st, first);
    first = false;
  };

  run(s);

  size_t off = 0;
  while (ad.size() - off >= 16) {
    for (int i = 0; i < 16; ++i) s.xor_byte(i, ad[off + i]);
    run(s);
    off += 16;
  }
  size_t rem = ad.size() - off;
  for (size_t i = 0; i < rem; ++i) s.xor_byte(static_cast<int>(i), ad[off + i]);
  s.xor_byte(static_cast<int>(rem), 0x01);
  s.xor_byte(47, 0x01);
  run(s);

  AeadResult out;
  out.ciphertext.resize(in.size());
  off = 0;
  while (in.size() - off >= 16) {
    for (int i = 0; i < 16; ++i) {
      if (decrypting) {
        out.ciphertext[off + i] = static_cast<uint8_t>(s.byte(i) ^ in[off + i]);
        s.set_byte(i, in[off + i]);
      } else {
        s.xor_byte(i, in[off + i]);
        out.ciphertext[off + i] = s.byte(i);
      }
    }
    run(s);
    off += 16;
  }
  rem = in.size() - off;
  for (size_t i = 0; i < rem; ++i) {
    int bi = static_cast<int>(i);
    if (decrypting) {
      out.ciphertext[off + i] = static_cast<uint8_t>(s.byte(bi) ^ in[off + i]);
      s.set_byte(bi, in[off + i]);
    } else {
      s.xor_byte(bi, in[off + i]);
      out.ciphertext[off + i] = s.byte(bi);
    }
  }
  s.xor_byte(static_cast<int>(rem), 0x01);
  s.xor_byte(47, 0x01);
  run(s);

  for (int i = 0; i < 16; ++i) out.tag[i] = s.byte(i);
  return out;
}

}  // namespace detail

// Encryption where the first permutation runs through the supplied hook (see
// permute_hooked); all later permutations are plain. The plain aead_encrypt /
// aead_decrypt below wrap this with an identity hook.
template <typename Hook>
AeadResult aead_encrypt_hooked(const Key& key, const Nonce& nonce, std::span<const uint8_t> ad,
                               std::span<const uint8_t> msg, Hook&& hook,
                               SpBoxVariant v = SpBoxVariant::official) {
  return detail::sponge_run(key, nonce, ad, msg, false, [&](GimliState& s, bool first) {
    s = first ? permute_hooked(s, hook, v) : permute(s, v);
  });
}

inline AeadResult aead_encrypt(const Key& key, const Nonce& nonce, std::span<const uint8_t> ad,
                               std::span<const uint8_t> msg,
                               SpBoxVariant v = SpBoxVariant::official) {
  return aead_encrypt_hooked(key, nonce, ad, msg, [](int, GimliState&) {}, v);
}

// Decryption with a hooked first permutation. Returns the plaintext on tag
// match and nothing otherwise; a mismatch releases no data.
template <typename Hook>
std::optional<bytes_t> aead_decrypt_hooked(const Key& key, const Nonce& nonce,
                                           std::span<const uint8_t> ad, std::span<const uint8_t> ct,
                                           std::span<const uint8_t> tag, Hook&& hook,
                                           SpBoxVariant v = SpBoxVariant::official) {
  AeadResult r = detail::sponge_run(key, nonce, ad, ct, true, [&](GimliState& s, bool first) {
    s = first ? permute_hooked(s, hook, v) : permute(s, v);
  });
  uint8_t diff = 0;
  for (int i = 0; i < 16; ++i) diff |= static_cast<uint8_t>(r.tag[i] ^ tag[i]);
  if (diff != 0) return std::nullopt;
  return std::move(r.ciphertext);
}

inline std::optional<bytes_t> aead_decrypt(const Key& key, const Nonce& nonce,
                                           std::span<const uint8_t> ad, std::span<const uint8_t> ct,
                                           std::span<const uint8_t> tag,
                                           SpBoxVariant v = SpBoxVariant::official) {
  return aead_decrypt_hooked(key, nonce, ad, ct, tag, [](int, GimliState&) {}, v);
}

}  // namespace gimli_sifa
