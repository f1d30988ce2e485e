#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>

#include "adapool/errors.h"
#include "adapool/image_io.h"
#include "adapool/quality.h"
#include "support/reference.h"

using namespace adapool;
using adapool::oracle::random_map;

namespace {

// Single-window SSIM computed straight from the definition with an 11x11
// Gaussian window, for an 11x11 single-channel pair.
double single_window_ssim(const std::vector<double>& a, const std::vector<double>& b) {
  long double w[121], total = 0;
  for (int y = 0; y < 11; ++y) {
    for (int x = 0; x < 11; ++x) {
      const long double d2 = (x - 5) * (x - 5) + (y - 5) * (y - 5);
      w[y * 11 + x] = std::exp(-d2 / (2 * 1.5L * 1.5L));
      total += w[y * 11 + x];
    }
  }
  long double ma = 0, mb = 0;
  for (int i = 0; i < 121; ++i) {
    w[i] /= total;
    ma += w[i] * a[i];
    mb += w[i] * b[i];
  }
  long double va = 0, vb = 0, cov = 0;
  for (int i = 0; i < 121; ++i) {
    va += w[i] * (a[i] - ma) * (a[i] - ma);
    vb += w[i] * (b[i] - mb) * (b[i] - mb);
    cov += w[i] * (a[i] - ma) * (b[i] - mb);
  }
  const long double c1 = std::pow(0.01L * 255, 2), c2 = std::pow(0.03L * 255, 2);
  return static_cast<double>((2 * ma * mb + c1) * (2 * cov + c2) /
                             ((ma * ma + mb * mb + c1) * (va + vb + c2)));
}

std::filesystem::path image_dir() { return ADAPOOL_TEST_DATA_DIR "/images"; }

}  // namespace

TEST(Ssim, Identity) {
  std::mt19937_64 rng(1);
  const auto a = random_map(rng, {3, {20, 17}}, 0, 255);
  EXPECT_DOUBLE_EQ(ssim(a, a), 1.0);
}

TEST(Ssim, CheckerboardMatchesSingleWindowOracle) {
  std::vector<double> a(121), b(121);
  for (int y = 0; y < 11; ++y) {
    for (int x = 0; x < 11; ++x) {
      a[y * 11 + x] = ((x + y) % 2) * 255.0;
      b[y * 11 + x] = 255.0 - a[y * 11 + x];
    }
  }
  const double got = ssim(ActivationMap(1, {11, 11}, a), ActivationMap(1, {11, 11}, b));
  const double want = single_window_ssim(a, b);
  EXPECT_LT(got, 0.0);
  EXPECT_NEAR(got, want, 1e-12);
}

TEST(Ssim, RandomWindowsMatchOracle) {
  std::mt19937_64 rng(2);
  for (int t = 0; t < 20; ++t) {
    const auto a = random_map(rng, {1, {11, 11}}, 0, 255);
    const auto b = random_map(rng, {1, {11, 11}}, 0, 255);
    const std::vector<double> va(a.data().begin(), a.data().end());
    const std::vector<double> vb(b.data().begin(), b.data().end());
    EXPECT_NEAR(ssim(a, b), single_window_ssim(va, vb), 1e-12);
  }
}

TEST(Ssim, SymmetricAndChannelPermutationInvariant) {
  std::mt19937_64 rng(3);
  const auto a = random_map(rng, {3, {16, 16}}, 0, 255);
  const auto b = random_map(rng, {3, {16, 16}}, 0, 255);
  EXPECT_NEAR(ssim(a, b), ssim(b, a), 1e-15);
  auto swap = [](const ActivationMap& m) {
    std::vector<double> v;
    for (std::size_t c : {2, 0, 1}) {
      const auto p = m.channel(c);
      v.insert(v.end(), p.begin(), p.end());
    }
    return ActivationMap(m.shape(), v);
  };
  EXPECT_NEAR(ssim(a, b), ssim(swap(a), swap(b)), 1e-14);
  EXPECT_THROW(ssim(a, random_map(rng, {3, {16, 15}})), ShapeError);
}

TEST(Psnr, Examples) {
  const ActivationMap zero(1, {4, 4});
  const ActivationMap sixteen(1, {4, 4}, std::vector<double>(16, 16.0));
  EXPECT_NEAR(psnr(zero, sixteen), 10 * std::log10(255.0 * 255.0 / 256.0), 1e-12);
  EXPECT_NEAR(psnr(zero, sixteen), 24.05, 0.01);
  EXPECT_TRUE(std::isinf(psnr(sixteen, sixteen)));
  std::mt19937_64 rng(4);
  const auto a = random_map(rng, {2, {5, 5}}, 0, 255);
  const auto b = random_map(rng, {2, {5, 5}}, 0, 255);
  EXPECT_EQ(psnr(a, b), psnr(b, a));
}

TEST(RoundTrip, IdentityKernel) {
  std::mt19937_64 rng(5);
  const auto img = random_map(rng, {3, {12, 12}}, 0, 255);
  for (auto name : {"avg", "max", "sum", "powavg:2", "idw:l2", "em", "edscw",
                    "ada:0.5", "s3", "stoch"}) {
    const auto q = eval_roundtrip(img, OperatorSpec::parse(name), 1);
    EXPECT_EQ(q.ssim, 1.0) << name;
    EXPECT_TRUE(std::isinf(q.psnr_db)) << name;
  }
}

TEST(RoundTrip, ConstantImage) {
  const ActivationMap img(3, {10, 10}, std::vector<double>(300, 97.0));
  for (auto name : {"avg", "max", "powavg:3", "idw:gower", "em", "edscw",
                    "ada:0.5", "ada:learned", "s3", "stoch"}) {
    const auto q = eval_roundtrip(img, OperatorSpec::parse(name), 2);
    EXPECT_DOUBLE_EQ(q.ssim, 1.0) << name;
    EXPECT_TRUE(std::isinf(q.psnr_db)) << name;
  }
}

TEST(RoundTrip, Errors) {
  const ActivationMap img(1, {10, 10});
  EXPECT_THROW(eval_roundtrip(img, OperatorSpec::parse("avg"), 3), ShapeError);
  EXPECT_THROW(eval_roundtrip(img, OperatorSpec::parse("avg"), 0), InvalidArgument);
}

TEST(RoundTrip, AverageAndMaximumDiffer) {
  const auto img = read_image(image_dir() / "camera_0.png");
  const auto avg = eval_roundtrip(img, OperatorSpec::parse("avg"), 2);
  const auto max = eval_roundtrip(img, OperatorSpec::parse("max"), 2);
  EXPECT_NE(avg.ssim, max.ssim);
  EXPECT_NE(avg.psnr_db, max.psnr_db);
}

TEST(RoundTrip, CoarserKernelLosesMoreOnBundledImages) {
  std::size_t seen = 0;
  for (const auto& e : std::filesystem::directory_iterator(image_dir())) {
    if (!is_image_file(e.path())) continue;
    const auto img = read_image(e.path());
    const auto k2 = eval_roundtrip(crop_to_multiple(img, 2), OperatorSpec{}, 2);
    const auto k5 = eval_roundtrip(crop_to_multiple(img, 5), OperatorSpec{}, 5);
    EXPECT_LE(k5.psnr_db, k2.psnr_db) << e.path();
    ++seen;
  }
  EXPECT_GE(seen, 20u);
}

TEST(RoundTrip, LearnedBetaNotWorseThanFixedEndpoints) {
  const auto img = read_image(image_dir() / "coffee_0.png");
  const auto learned = eval_roundtrip(img, OperatorSpec::parse("ada:learned"), 2);
  const auto em = eval_roundtrip(img, OperatorSpec::parse("ada:0"), 2);
  EXPECT_GT(learned.psnr_db, em.psnr_db);
}
