#pragma once

#include <cstdint>
#include <cstring>
#include <vector>

// Test-only oracle: a straight transcription of the designers' reference code
// for the Gimli permutation and Gimli-24-Cipher (the byte-oriented C version
// from the NIST LWC submission). Deliberately kept separate from the library
// under test; every structural choice here (byte order, padding, domain
// separation, tag placement) follows that reference.
namespace gimli_ref {

inline uint32_t rotate(uint32_t x, int bits) {
  if (bits == 0) return x;
  return (x << bits) | (x >> (32 - bits));
}

inline void gimli(uint32_t* state) {
  int round, column;
  uint32_t x, y, z;

  for (round = 24; round > 0; --round) {
    for (column = 0; column < 4; ++column) {
      x = rotate(state[column], 24);
      y = rotate(state[4 + column], 9);
      z = state[8 + column];

      state[8 + column] = x ^ (z << 1) ^ ((y & z) << 2);
      state[4 + column] = y ^ x ^ ((x | z) << 1);
      state[column] = z ^ y ^ ((x & y) << 3);
    }

    if ((round & 3) == 0) {  // small swap
      x = state[0];
      state[0] = state[1];
      state[1] = x;
      x = state[2];
      state[2] = state[3];
      state[3] = x;
    }
    if ((round & 3) == 2) {  // big swap
      x = state[0];
      state[0] = state[2];
      state[2] = x;
      x = state[1];
      state[1] = state[3];
      state[3] = x;
    }

    if ((round & 3) == 0) {  // add constant
      state[0] ^= 0x9e377900u | static_cast<uint32_t>(round);
    }
  }
}

inline void gimli_bytes(unsigned char* state48) {
  uint32_t s[12];
  for (int i = 0; i < 12; ++i)
    s[i] = static_cast<uint32_t>(state48[4 * i]) | (static_cast<uint32_t>(state48[4 * i + 1]) << 8) |
           (static_cast<uint32_t>(state48[4 * i + 2]) << 16) |
           (static_cast<uint32_t>(state48[4 * i + 3]) << 24);
  gimli(s);
  for (int i = 0; i < 12; ++i) {
    state48[4 * i] = static_cast<unsigned char>(s[i]);
    state48[4 * i + 1] = static_cast<unsigned char>(s[i] >> 8);
    state48[4 * i + 2] = static_cast<unsigned char>(s[i] >> 16);
    state48[4 * i + 3] = static_cast<unsigned char>(s[i] >> 24);
  }
}

// crypto_aead_encrypt of gimli24v1: c holds ciphertext || 16-byte tag.
inline int aead_encrypt(unsigned char* c, unsigned long long* clen, const unsigned char* m,
                        unsigned long long mlen, const unsigned char* ad, unsigned long long adlen,
                        const unsigned char* npub, const unsigned char* k) {
  unsigned char state[48];
  unsigned long long i;

  *clen = mlen + 16;

  for (i = 0; i < 16; ++i) state[i] = npub[i];
  for (i = 0; i < 32; ++i) state[16 + i] = k[i];
  gimli_bytes(state);

  while (adlen >= 16) {
    for (i = 0; i < 16; ++i) state[i] ^= ad[i];
    gimli_bytes(state);
    ad += 16;
    adlen -= 16;
  }
  for (i = 0; i < adlen; ++i) state[i] ^= ad[i];
  state[adlen] ^= 1;
  state[47] ^= 1;
  gimli_bytes(state);

  while (mlen >= 16) {
    for (i = 0; i < 16; ++i) {
      state[i] ^= m[i];
      c[i] = state[i];
    }
    gimli_bytes(state);
    m += 16;
    c += 16;
    mlen -= 16;
  }
  for (i = 0; i < mlen; ++i) {
    state[i] ^= m[i];
    c[i] = state[i];
  }
  c += mlen;
  state[mlen] ^= 1;
  state[47] ^= 1;
  gimli_bytes(state);

  for (i = 0; i < 16; ++i) c[i] = state[i];
  return 0;
}

// crypto_aead_decrypt of gimli24v1: returns -1 and wipes m on tag mismatch.
inline int aead_decrypt(unsigned char* m, unsigned long long* mlen, const unsigned char* c,
                        unsigned long long clen, const unsigned char* ad, unsigned long long adlen,
                        const unsigned char* npub, const unsigned char* k) {
  unsigned char state[48];
  unsigned char result = 0;
  unsigned long long i;
  unsigned char* m0 = m;

  if (clen < 16) return -1;
  clen -= 16;
  *mlen = clen;

  for (i = 0; i < 16; ++i) state[i] = npub[i];
  for (i = 0; i < 32; ++i) state[16 + i] = k[i];
  gimli_bytes(state);

  while (adlen >= 16) {
    for (i = 0; i < 16; ++i) state[i] ^= ad[i];
    gimli_bytes(state);
    ad += 16;
    adlen -= 16;
  }
  for (i = 0; i < adlen; ++i) state[i] ^= ad[i];
  state[adlen] ^= 1;
  state[47] ^= 1;
  gimli_bytes(state);

  while (clen >= 16) {
    for (i = 0; i < 16; ++i) {
      m[i] = state[i] ^ c[i];
      state[i] = c[i];
    }
    gimli_bytes(state);
    c += 16;
    m += 16;
    clen -= 16;
  }
  for (i = 0; i < clen; ++i) {
    m[i] = state[i] ^ c[i];
    state[i] = c[i];
  }
  m += clen;
  state[clen] ^= 1;
  state[47] ^= 1;
  gimli_bytes(state);

  for (i = 0; i < 16; ++i) result |= static_cast<unsigned char>(c[clen + i] ^ state[i]);
  if (result != 0) {
    std::memset(m0, 0, static_cast<size_t>(*mlen));
    return -1;
  }
  return 0;
}

}  // namespace gimli_ref
