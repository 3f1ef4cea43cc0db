#pragma once

#include <fstream>
#include <istream>
#include <sstream>
#include <string>
#include <vector>

#include "aead.hpp"
#include "words.hpp"

// Reader and runner for known-answer files in the NIST LWC genkat_aead
// format: records of Count / Key / Nonce / PT / AD / CT lines separated by
// blank lines, hex fields, CT holding ciphertext || tag.
namespace gimli_sifa {

struct KatVector {
  long count = 0;
  bytes_t key, nonce, pt, ad, ct;
  int line = 0;  // line number of the Count field, for error reporting
};

struct KatFailure {
  long count = 0;
  std::string what;
};

struct KatSummary {
  size_t total = 0;
  size_t passed = 0;
  std::vector<KatFailure> failures;
  bool all_passed() const { return failures.empty(); }
};

inline std::vector<KatVector> read_kat_file(std::istream& in) {
  std::vector<KatVector> out;
  KatVector cur;
  bool open = false;
  std::string line;
  int lineno = 0;
  auto flush = [&]() {
    if (open) out.push_back(cur);
    cur = KatVector{};
    open = false;
  };
  while (std::getline(in, line)) {
    ++lineno;
    std::string t = detail::trim_copy(line);
    if (t.empty()) {
      flush();
      continue;
    }
    size_t eq = t.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("KAT parse error at line " + std::to_string(lineno) + ": expected 'Field = value'");
    std::string field = detail::trim_copy(t.substr(0, eq));
    std::string value = detail::trim_copy(t.substr(eq + 1));
    try {
      if (field == "Count") {
        flush();
        cur.count = std::stol(value);
        cur.line = lineno;
        open = true;
      } else if (field == "Key") {
        cur.key = parse_hex(value);
      } else if (field == "Nonce") {
        cur.nonce = parse_hex(value);
      } else if (field == "PT") {
        cur.pt = parse_hex(value);
      } else if (field == "AD") {
        cur.ad = parse_hex(value);
      } else if (field == "CT") {
        cur.ct = parse_hex(value);
      } else {
        throw std::invalid_argument("unknown field '" + field + "'");
      }
    } catch (const std::exception& e) {
      throw std::invalid_argument("KAT parse error at line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  flush();
  return out;
}

inline std::vector<KatVector> read_kat_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::invalid_argument("cannot open KAT file: " + path);
  return read_kat_file(f);
}

// Runs every vector through encryption and decryption. A vector passes when
// the produced ciphertext || tag equals CT, the decryption of CT releases PT,
// and a corrupted tag is rejected.
inline KatSummary run_kat_vectors(const std::vector<KatVector>& vectors,
                                  SpBoxVariant v = SpBoxVariant::official) {
  KatSummary sum;
  sum.total = vectors.size();
  for (const KatVector& kv : vectors) {
    auto fail = [&](const std::string& what) { sum.failures.push_back({kv.count, what}); };
    if (kv.key.size() != 32 || kv.nonce.size() != 16 || kv.ct.size() != kv.pt.size() + 16) {
      fail("malformed vector (key/nonce/ct lengths)");
      continue;
    }
    Key key = Key::from_bytes(kv.key);
    Nonce nonce = Nonce::from_bytes(kv.nonce);
    AeadResult er = aead_encrypt(key, nonce, kv.ad, kv.pt, v);
    bytes_t produced = er.ciphertext;
    produced.insert(produced.end(), er.tag.begin(), er.tag.end());
    if (produced != kv.ct) {
      fail("encrypt mismatch");
      continue;
    }
    std::span<const uint8_t> ct(kv.ct.data(), kv.pt.size());
    std::span<const uint8_t> tag(kv.ct.data() + kv.pt.size(), 16);
    auto pt = aead_decrypt(key, nonce, kv.ad, ct, tag, v);
    if (!pt || *pt != kv.pt) {
      fail("decrypt mismatch");
      continue;
    }
    ++sum.passed;
  }
  return sum;
}

}  // namespace gimli_sifa
