#pragma once

#include <cstdint>
#include <cstdlib>
#include <span>
#include <stdexcept>
#include <vector>

// Distinguisher statistics: Pearson's chi-squared against a reference
// distribution and the squared Euclidean imbalance (SEI), its uniform-scaled
// version. CHI(a, theta) = |S| * N * SEI(a) holds exactly.
namespace gimli_sifa {

struct DistributionCounts {
  std::vector<uint64_t> bins;

  uint64_t total() const {
    uint64_t n = 0;
    for (uint64_t b : bins) n += b;
    return n;
  }
};

// N * sum((a(x) - b(x))^2 / b(x)) with a the observed frequencies and b the
// expected distribution (all entries strictly positive).
inline double chi_squared(const DistributionCounts& observed, std::span<const double> expected) {
  if (observed.bins.size() != expected.size())
    throw std::invalid_argument("chi_squared: dimension mismatch");
  uint64_t n = observed.total();
  if (n == 0) throw std::invalid_argument("chi_squared: no observations");
  double sum = 0.0;
  for (size_t i = 0; i < expected.size(); ++i) {
    if (!(expected[i] > 0.0))
      throw std::invalid_argument("chi_squared: expected distribution must be strictly positive");
    double diff = static_cast<double>(observed.bins[i]) / static_cast<double>(n) - expected[i];
    sum += diff * diff / expected[i];
  }
  return static_cast<double>(n) * sum;
}

// sum((a(x) - 1/|S|)^2); zero exactly on uniform counts.
inline double sei(const DistributionCounts& observed) {
  uint64_t n = observed.total();
  if (n == 0) throw std::invalid_argument("sei: no observations");
  double uniform = 1.0 / static_cast<double>(observed.bins.size());
  double sum = 0.0;
  for (uint64_t b : observed.bins) {
    double diff = static_cast<double>(b) / static_cast<double>(n) - uniform;
    sum += diff * diff;
  }
  return sum;
}

// Single-bit SEI from the count of ones: 2 * (ones/N - 1/2)^2.
inline double sei_from_ones(uint64_t ones, uint64_t n) {
  if (n == 0) throw std::invalid_argument("sei: no observations");
  double diff = static_cast<double>(ones) / static_cast<double>(n) - 0.5;
  return 2.0 * diff * diff;
}

// Exact integer score with the same ordering as the single-bit SEI:
// |2*ones - N|. Counts are integers, so equal scores here are exactly the
// ties the SEI tolerance below is meant to capture, without any rounding.
inline uint64_t sei_rank_score(uint64_t ones, uint64_t n) {
  return ones * 2 >= n ? ones * 2 - n : n - ones * 2;
}

// Two floating-point SEI values tie when they differ by at most 2^-40; true
// ties come from integer count coincidences (c and N - c give identical
// imbalance), so the tolerance only has to absorb rounding.
inline constexpr double sei_tie_tolerance = 0x1.0p-40;

inline bool sei_ties(double a, double b) {
  return std::abs(a - b) <= sei_tie_tolerance;
}

}  // namespace gimli_sifa
