#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "rng.hpp"

// Fault models and their fault distribution tables. A model maps a w-bit
// value s to a faulted value s'; the FDT holds P(S' = s' | S = s) and its
// diagonal carries everything the ineffective-fault analysis needs.
namespace gimli_sifa {

enum class FaultModelKind {
  stuck_at_0,
  random_and,
  random_or,
  bit_flip,
  random_fault,
  prob_bit_flip,
};

struct FaultModel {
  FaultModelKind kind = FaultModelKind::prob_bit_flip;
  // Directional flip probabilities, used by prob_bit_flip only.
  double p_one_to_zero = 2.0 / 3.0;
  double p_zero_to_one = 1.0 / 3.0;

  bool operator==(const FaultModel&) const = default;
};

inline const char* kind_name(FaultModelKind k) {
  switch (k) {
    case FaultModelKind::stuck_at_0: return "stuck-at-0";
    case FaultModelKind::random_and: return "random-and";
    case FaultModelKind::random_or: return "random-or";
    case FaultModelKind::bit_flip: return "bit-flip";
    case FaultModelKind::random_fault: return "random-fault";
    case FaultModelKind::prob_bit_flip: return "prob-bitflip";
  }
  return "?";
}

namespace detail {

// Accepts "0.25", "1/3", "2/3" style probability literals.
inline double parse_probability(const std::string& s) {
  double v;
  size_t slash = s.find('/');
  if (slash != std::string::npos) {
    double num = std::stod(s.substr(0, slash));
    double den = std::stod(s.substr(slash + 1));
    if (den == 0.0) throw std::invalid_argument("probability with zero denominator: " + s);
    v = num / den;
  } else {
    v = std::stod(s);
  }
  if (!(v >= 0.0 && v <= 1.0)) throw std::invalid_argument("probability out of [0,1]: " + s);
  return v;
}

inline std::string format_probability(double p) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", p);
  return buf;
}

}  // namespace detail

// Parses "stuck-at-0", "prob-bitflip", "prob-bitflip:2/3,1/3", ...
inline FaultModel fault_model_from_string(const std::string& s) {
  std::string name = s;
  std::string params;
  size_t colon = s.find(':');
  if (colon != std::string::npos) {
    name = s.substr(0, colon);
    params = s.substr(colon + 1);
  }
  FaultModel m;
  if (name == "stuck-at-0") m.kind = FaultModelKind::stuck_at_0;
  else if (name == "random-and") m.kind = FaultModelKind::random_and;
  else if (name == "random-or") m.kind = FaultModelKind::random_or;
  else if (name == "bit-flip") m.kind = FaultModelKind::bit_flip;
  else if (name == "random-fault") m.kind = FaultModelKind::random_fault;
  else if (name == "prob-bitflip") m.kind = FaultModelKind::prob_bit_flip;
  else throw std::invalid_argument("unknown fault model: " + name);
  if (!params.empty()) {
    if (m.kind != FaultModelKind::prob_bit_flip)
      throw std::invalid_argument("model " + name + " takes no parameters");
    size_t comma = params.find(',');
    if (comma == std::string::npos)
      throw std::invalid_argument("prob-bitflip parameters must be p10,p01");
    m.p_one_to_zero = detail::parse_probability(params.substr(0, comma));
    m.p_zero_to_one = detail::parse_probability(params.substr(comma + 1));
  }
  return m;
}

inline std::string to_string(const FaultModel& m) {
  std::string s = kind_name(m.kind);
  if (m.kind == FaultModelKind::prob_bit_flip) {
    s += ":" + detail::format_probability(m.p_one_to_zero) + "," +
         detail::format_probability(m.p_zero_to_one);
  }
  return s;
}

inline uint32_t width_mask(unsigned width) {
  return width >= 32 ? 0xffffffffu : ((1u << width) - 1u);
}

// One fault injection on a w-bit value. Consumes a fixed number of draws per
// model so replaying a trial stream reproduces the trial exactly.
inline uint32_t apply_fault(uint32_t value, unsigned width, const FaultModel& m, SplitMix64& rng) {
  const uint32_t mask = width_mask(width);
  if (value & ~mask) throw std::invalid_argument("value wider than fault width");
  switch (m.kind) {
    case FaultModelKind::stuck_at_0:
      return 0;
    case FaultModelKind::random_and:
      return value & static_cast<uint32_t>(rng.next()) & mask;
    case FaultModelKind::random_or:
      return (value | static_cast<uint32_t>(rng.next())) & mask;
    case FaultModelKind::bit_flip:
      return value ^ mask;
    case FaultModelKind::random_fault:
      return static_cast<uint32_t>(rng.next()) & mask;
    case FaultModelKind::prob_bit_flip: {
      uint32_t out = value;
      for (unsigned i = 0; i < width; ++i) {
        double u = rng.next_unit();
        bool one = (value >> i) & 1;
        if (u < (one ? m.p_one_to_zero : m.p_zero_to_one)) out ^= (1u << i);
      }
      return out;
    }
  }
  return value;
}

// Transition-probability table p[s][s'] for a w-bit value, rows summing to 1.
struct Fdt {
  unsigned width = 0;
  std::vector<double> p;  // 2^w x 2^w, row-major

  size_t size() const { return size_t{1} << width; }
  double at(uint32_t s, uint32_t s_prime) const { return p[size_t{s} * size() + s_prime]; }
  double& at(uint32_t s, uint32_t s_prime) { return p[size_t{s} * size() + s_prime]; }
};

inline constexpr unsigned fdt_max_width = 12;

// Exact table from the model's per-bit structure. The table has 4^w entries,
// so widths past fdt_max_width must use estimate_fdt or the closed-form
// analytic_ineffectiveness_rate instead.
inline Fdt build_fdt(const FaultModel& m, unsigned width) {
  if (width < 1 || width > fdt_max_width)
    throw std::invalid_argument("build_fdt: width " + std::to_string(width) +
                                " outside 1.." + std::to_string(fdt_max_width) +
                                "; use estimate_fdt or analytic_ineffectiveness_rate");
  const size_t n = size_t{1} << width;
  Fdt fdt{width, std::vector<double>(n * n, 0.0)};
  for (uint32_t s = 0; s < n; ++s) {
    switch (m.kind) {
      case FaultModelKind::stuck_at_0:
        fdt.at(s, 0) = 1.0;
        break;
      case FaultModelKind::bit_flip:
        fdt.at(s, s ^ width_mask(width)) = 1.0;
        break;
      case FaultModelKind::random_fault:
        for (uint32_t t = 0; t < n; ++t) fdt.at(s, t) = 1.0 / static_cast<double>(n);
        break;
      case FaultModelKind::random_and: {
        // s' must be a submask of s; each of the 2^popcount(s) submasks is
        // equally likely.
        double pr = std::ldexp(1.0, -std::popcount(s));
        for (uint32_t t = s;; t = (t - 1) & s) {
          fdt.at(s, t) = pr;
          if (t == 0) break;
        }
        break;
      }
      case FaultModelKind::random_or: {
        uint32_t free_bits = ~s & width_mask(width);
        double pr = std::ldexp(1.0, -std::popcount(free_bits));
        for (uint32_t u = free_bits;; u = (u - 1) & free_bits) {
          fdt.at(s, s | u) = pr;
          if (u == 0) break;
        }
        break;
      }
      case FaultModelKind::prob_bit_flip:
        for (uint32_t t = 0; t < n; ++t) {
          double pr = 1.0;
          for (unsigned i = 0; i < width; ++i) {
            bool was = (s >> i) & 1;
            bool flipped = ((s ^ t) >> i) & 1;
            double flip_p = was ? m.p_one_to_zero : m.p_zero_to_one;
            pr *= flipped ? flip_p : 1.0 - flip_p;
          }
          fdt.at(s, t) = pr;
        }
        break;
    }
  }
  return fdt;
}

// Empirical table: `samples` draws of apply_fault per input value.
inline Fdt estimate_fdt(const FaultModel& m, unsigned width, uint64_t samples, SplitMix64& rng) {
  if (width < 1 || width > fdt_max_width)
    throw std::invalid_argument("estimate_fdt: width outside 1.." + std::to_string(fdt_max_width));
  if (samples == 0) throw std::invalid_argument("estimate_fdt: samples must be >= 1");
  const size_t n = size_t{1} << width;
  Fdt fdt{width, std::vector<double>(n * n, 0.0)};
  for (uint32_t s = 0; s < n; ++s) {
    for (uint64_t k = 0; k < samples; ++k) fdt.at(s, apply_fault(s, width, m, rng)) += 1.0;
    for (uint32_t t = 0; t < n; ++t) fdt.at(s, t) /= static_cast<double>(samples);
  }
  return fdt;
}

// Rate of ineffective faults under a uniform prior on S: the mean of the
// FDT diagonal.
inline double ineffectiveness_rate(const Fdt& fdt) {
  double sum = 0.0;
  for (uint32_t s = 0; s < fdt.size(); ++s) sum += fdt.at(s, s);
  return sum / static_cast<double>(fdt.size());
}

// Closed-form rate for any width; all six models factor per bit.
inline double analytic_ineffectiveness_rate(const FaultModel& m, unsigned width) {
  if (width < 1 || width > 32) throw std::invalid_argument("width outside 1..32");
  double per_bit;
  switch (m.kind) {
    case FaultModelKind::stuck_at_0:
    case FaultModelKind::random_fault:
      per_bit = 0.5;
      break;
    case FaultModelKind::random_and:
    case FaultModelKind::random_or:
      per_bit = 0.75;
      break;
    case FaultModelKind::bit_flip:
      return 0.0;
    case FaultModelKind::prob_bit_flip:
      per_bit = 0.5 * (1.0 - m.p_one_to_zero) + 0.5 * (1.0 - m.p_zero_to_one);
      break;
    default:
      throw std::invalid_argument("unknown model");
  }
  return std::pow(per_bit, static_cast<double>(width));
}

// The distribution an attacker estimates from ineffective faults: the FDT
// diagonal normalized by |S| * r_ineff.
inline std::vector<double> diagonal_distribution(const Fdt& fdt) {
  double rate = ineffectiveness_rate(fdt);
  if (rate <= 0.0)
    throw std::domain_error("no ineffective faults possible: FDT diagonal is all zero");
  std::vector<double> out(fdt.size());
  double denom = static_cast<double>(fdt.size()) * rate;
  for (uint32_t s = 0; s < fdt.size(); ++s) out[s] = fdt.at(s, s) / denom;
  return out;
}

}  // namespace gimli_sifa
