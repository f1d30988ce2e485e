#include "adapool/measures.h"

#include <algorithm>
#include <charconv>
#include <cmath>

#include "adapool/errors.h"

namespace adapool {

namespace {

void check_lengths(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw DimensionMismatch("channel vectors of length " +
                            std::to_string(a.size()) + " and " +
                            std::to_string(b.size()));
  }
  if (a.empty()) throw DimensionMismatch("empty channel vectors");
}

double l1(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t c = 0; c < a.size(); ++c) s += std::abs(a[c] - b[c]);
  return s;
}

double l2(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t c = 0; c < a.size(); ++c) {
    const double d = a[c] - b[c];
    s += d * d;
  }
  return std::sqrt(s);
}

double sign(double x) { return (x > 0.0) - (x < 0.0); }

}  // namespace

DistanceKind DistanceKind::huber(double delta) {
  if (!(delta > 0.0) || !std::isfinite(delta)) {
    throw InvalidArgument("huber delta must be positive");
  }
  return {Tag::kHuber, delta};
}

DistanceKind DistanceKind::parse(std::string_view name) {
  if (name == "l1") return l1();
  if (name == "l2") return l2();
  if (name == "l2-channel") return {Tag::kL2PerChannel};
  if (name == "chebyshev") return chebyshev();
  if (name == "gower") return gower();
  if (name == "huber") return huber();
  if (name.starts_with("huber:")) {
    const std::string text(name.substr(6));
    std::size_t used = 0;
    double delta = 0.0;
    try {
      delta = std::stod(text, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != text.size() || text.empty()) {
      throw InvalidArgument("bad huber delta '" + text + "'");
    }
    return huber(delta);
  }
  throw InvalidArgument("unknown distance '" + std::string(name) + "'");
}

std::string DistanceKind::name() const {
  switch (tag) {
    case Tag::kL1: return "l1";
    case Tag::kL2: return "l2";
    case Tag::kL2PerChannel: return "l2-channel";
    case Tag::kHuber: {
      char buf[32];
      auto [end, ec] = std::to_chars(buf, buf + sizeof buf, delta);
      return "huber:" + std::string(buf, end);
    }
    case Tag::kChebyshev: return "chebyshev";
    case Tag::kGower: return "gower";
  }
  return "?";
}

SimilarityKind parse_similarity(std::string_view name) {
  if (name == "cosine") return SimilarityKind::kCosine;
  if (name == "pce") return SimilarityKind::kPce;
  if (name == "dsc") return SimilarityKind::kDsc;
  throw InvalidArgument("unknown similarity '" + std::string(name) + "'");
}

std::string similarity_name(SimilarityKind kind) {
  switch (kind) {
    case SimilarityKind::kCosine: return "cosine";
    case SimilarityKind::kPce: return "pce";
    case SimilarityKind::kDsc: return "dsc";
  }
  return "?";
}

double distance(const DistanceKind& kind, std::span<const double> mean,
                std::span<const double> member) {
  check_lengths(mean, member);
  switch (kind.tag) {
    case DistanceKind::Tag::kL1:
    case DistanceKind::Tag::kL2PerChannel:
      // sqrt(|x|^2) per channel is |x|.
      return l1(mean, member);
    case DistanceKind::Tag::kL2:
      return l2(mean, member);
    case DistanceKind::Tag::kHuber: {
      const double d1 = l1(mean, member);
      if (l2(mean, member) <= kind.delta) return 0.5 * d1 * d1;
      return kind.delta * (d1 - 0.5 * kind.delta);
    }
    case DistanceKind::Tag::kChebyshev: {
      double m = 0.0;
      for (std::size_t c = 0; c < mean.size(); ++c) {
        m = std::max(m, std::abs(mean[c] - member[c]));
      }
      return m;
    }
    case DistanceKind::Tag::kGower:
      return l1(mean, member) / static_cast<double>(mean.size());
  }
  return 0.0;
}

double dsc_term(double mean, double member) {
  return 2.0 * std::abs(mean * member) /
         (mean * mean + member * member + kDscEpsilon);
}

double dsc_term_d_member(double mean, double member) {
  const double q = mean * mean + member * member + kDscEpsilon;
  const double num = 2.0 * std::abs(mean * member);
  return 2.0 * std::abs(mean) * sign(member) / q - num * 2.0 * member / (q * q);
}

double dsc_term_d_mean(double mean, double member) {
  return dsc_term_d_member(member, mean);
}

double similarity(SimilarityKind kind, std::span<const double> mean,
                  std::span<const double> member) {
  check_lengths(mean, member);
  double dot = 0.0, mm = 0.0, aa = 0.0;
  switch (kind) {
    case SimilarityKind::kCosine:
    case SimilarityKind::kPce:
      for (std::size_t c = 0; c < mean.size(); ++c) {
        dot += mean[c] * member[c];
        mm += mean[c] * mean[c];
        aa += member[c] * member[c];
      }
      if (mm == 0.0 || aa == 0.0) return 0.0;
      if (kind == SimilarityKind::kCosine) {
        return std::clamp(dot / (std::sqrt(mm) * std::sqrt(aa)), -1.0, 1.0);
      }
      return dot / (mm + aa - dot);
    case SimilarityKind::kDsc: {
      double s = 0.0;
      for (std::size_t c = 0; c < mean.size(); ++c) {
        s += dsc_term(mean[c], member[c]);
      }
      return s;
    }
  }
  return 0.0;
}

}  // namespace adapool
