#pragma once

#include <span>
#include <string>
#include <string_view>

namespace adapool {

// Distances between a region mean and one member's channel vector.
struct DistanceKind {
  enum class Tag {
    kL1,
    kL2,
    // Per-channel square root summed over channels, read literally from the
    // table form of L2. Coincides with L1.
    kL2PerChannel,
    kHuber,
    kChebyshev,
    kGower,
  };

  Tag tag = Tag::kL2;
  double delta = 0.5;  // Huber only.

  static DistanceKind l1() { return {Tag::kL1}; }
  static DistanceKind l2() { return {Tag::kL2}; }
  static DistanceKind huber(double delta = 0.5);
  static DistanceKind chebyshev() { return {Tag::kChebyshev}; }
  static DistanceKind gower() { return {Tag::kGower}; }

  // l1, l2, l2-channel, huber, huber:<delta>, chebyshev, gower.
  static DistanceKind parse(std::string_view name);
  std::string name() const;
};

enum class SimilarityKind { kCosine, kPce, kDsc };

SimilarityKind parse_similarity(std::string_view name);
std::string similarity_name(SimilarityKind kind);

// Stabilizer in every DSC channel denominator; makes a 0/0 channel term 0.
inline constexpr double kDscEpsilon = 1e-12;

// Throws DimensionMismatch when the vectors differ in length.
double distance(const DistanceKind& kind, std::span<const double> mean,
                std::span<const double> member);

// Cosine and PCE return 0 when either vector is all zero.
double similarity(SimilarityKind kind, std::span<const double> mean,
                  std::span<const double> member);

// Single DSC channel term 2|m a| / (m^2 + a^2 + eps) and its partials.
double dsc_term(double mean, double member);
double dsc_term_d_member(double mean, double member);
double dsc_term_d_mean(double mean, double member);

}  // namespace adapool
