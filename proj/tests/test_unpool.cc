#include <gtest/gtest.h>

#include "adapool/errors.h"
#include "adapool/unpool.h"
#include "support/reference.h"

using namespace adapool;
using adapool::oracle::random_map;

TEST(NearestInflate, Examples) {
  const ActivationMap one(1, {1, 1}, {4.5});
  const auto a = nearest_inflate(one, PoolGeometry::square(2), {2, 2});
  EXPECT_EQ(a, ActivationMap(1, {2, 2}, {4.5, 4.5, 4.5, 4.5}));

  const ActivationMap four(1, {2, 2}, {1, 2, 3, 4});
  const auto b = nearest_inflate(four, PoolGeometry::square(2), {4, 4});
  EXPECT_EQ(b, ActivationMap(1, {4, 4}, {1, 1, 2, 2, 1, 1, 2, 2,
                                         3, 3, 4, 4, 3, 3, 4, 4}));

  EXPECT_EQ(nearest_inflate(four, PoolGeometry::square(1), {2, 2}), four);
}

TEST(NearestInflate, RemainderReplicatesNearestRegion) {
  const ActivationMap four(1, {2, 2}, {1, 2, 3, 4});
  const auto out = nearest_inflate(four, PoolGeometry::square(2), {5, 5});
  EXPECT_EQ(out.at(0, 4), 2.0);
  EXPECT_EQ(out.at(0, 24), 4.0);
  EXPECT_EQ(out.at(0, 20), 3.0);
  EXPECT_THROW(nearest_inflate(four, PoolGeometry::square(2), {6, 4}), ShapeError);
  EXPECT_THROW(nearest_inflate(four, PoolGeometry({3, 3}, {2, 2}, {0, 0}), {5, 5}),
               ShapeError);
}

TEST(BilinearInflate, ConstantAndLinear) {
  const ActivationMap c(1, {2, 2}, {3, 3, 3, 3});
  const auto a = bilinear_inflate(c, PoolGeometry::square(2), {4, 4});
  for (double v : a.data()) EXPECT_EQ(v, 3.0);
  // Centres at 0.5 and 2.5: value at column 1.5 lies halfway.
  const ActivationMap ramp(1, {1, 2}, {0, 4});
  const auto b = bilinear_inflate(ramp, PoolGeometry::square(2), {2, 4});
  EXPECT_EQ(b.at(0, 0), 0.0);
  EXPECT_DOUBLE_EQ(b.at(0, 1), 1.0);
  EXPECT_DOUBLE_EQ(b.at(0, 2), 3.0);
  EXPECT_EQ(b.at(0, 3), 4.0);
}

TEST(AdaUnpool, UniformMasks) {
  const auto res = pool_ada(ActivationMap(1, {2, 2}, {4, 4, 4, 4}),
                            PoolGeometry::square(2), BetaMap({1, 1}, 0.5));
  const auto out = ada_unpool(res);
  for (double v : out.data()) EXPECT_DOUBLE_EQ(v, 1.0);
}

TEST(AdaUnpool, EmMaskOnly) {
  WeightMasks masks{PoolGeometry::square(2), MapShape{1, {2, 2}}, 1, 4,
                    {0.7, 0.1, 0.1, 0.1}, {}};
  const UnpoolInput in{ActivationMap(1, {1, 1}, {10.0}), masks, BetaMap({1, 1}, 0.0),
                       {2, 2}};
  const auto out = ada_unpool(in);
  EXPECT_DOUBLE_EQ(out.data()[0], 7.0);
  for (int i = 1; i < 4; ++i) EXPECT_DOUBLE_EQ(out.data()[i], 1.0);
  // Without beta, em-only masks mean beta = 0.
  const UnpoolInput no_beta{ActivationMap(1, {1, 1}, {10.0}), masks, std::nullopt,
                            {2, 2}};
  EXPECT_EQ(ada_unpool(no_beta), out);
}

TEST(AdaUnpool, BetaEndpointsUseOneMask) {
  std::mt19937_64 rng(1);
  const auto x = random_map(rng, {2, {4, 4}}, 0, 3);
  const auto g = PoolGeometry::square(2);
  const auto zero = pool_ada(x, g, BetaMap({2, 2}, 0.0));
  const auto one = pool_ada(x, g, BetaMap({2, 2}, 1.0));
  const auto out0 = ada_unpool(zero);
  const auto out1 = ada_unpool(one);
  const auto regions = oracle::naive_regions(x.shape(), g);
  for (std::size_t r = 0; r < regions.size(); ++r) {
    for (std::size_t c = 0; c < 2; ++c) {
      for (std::size_t i = 0; i < 4; ++i) {
        const auto s = regions[r].members[i];
        EXPECT_DOUBLE_EQ(out0.at(c, s),
                         zero.masks->em_region(c, r)[i] * zero.output.at(c, r));
        EXPECT_DOUBLE_EQ(out1.at(c, s),
                         one.masks->edsc_region(r)[i] * one.output.at(c, r));
      }
    }
  }
}

TEST(AdaUnpool, MassPreservedOnRandomMaps) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0, 1);
  for (int t = 0; t < 30; ++t) {
    const auto x = random_map(rng, {1, {8, 8}}, -2, 2);
    const auto g = PoolGeometry::square(2);
    std::vector<double> b(16);
    for (auto& v : b) v = u(rng);
    const auto res = pool_ada(x, g, BetaMap({4, 4}, b));
    const auto out = ada_unpool(res);
    const auto regions = oracle::naive_regions(x.shape(), g);
    for (std::size_t r = 0; r < regions.size(); ++r) {
      long double s = 0;
      for (auto m : regions[r].members) s += out.at(0, m);
      EXPECT_NEAR(static_cast<double>(s), res.output.at(0, r), 1e-12);
    }
  }
}

TEST(AdaUnpool, LinearInPooledMap) {
  std::mt19937_64 rng(3);
  const auto x = random_map(rng, {2, {6, 6}});
  const auto res = pool_ada(x, PoolGeometry::square(3), BetaMap({2, 2}, 0.6));
  const auto p = random_map(rng, {2, {2, 2}}, -1, 1);
  const auto q = random_map(rng, {2, {2, 2}}, -1, 1);
  std::vector<double> sum(8);
  for (int i = 0; i < 8; ++i) sum[i] = 2 * p.data()[i] - 3 * q.data()[i];
  auto run = [&](const ActivationMap& pooled) {
    return ada_unpool(UnpoolInput{pooled, *res.masks, res.beta, {6, 6}});
  };
  const auto a = run(p), b = run(q), s = run(ActivationMap(p.shape(), sum));
  for (std::size_t i = 0; i < s.size(); ++i) {
    EXPECT_NEAR(s.data()[i], 2 * a.data()[i] - 3 * b.data()[i], 1e-14);
  }
}

TEST(AdaUnpool, DoubleSoftmaxFlattensButPreservesMass) {
  std::mt19937_64 rng(4);
  const auto x = random_map(rng, {1, {2, 2}}, 0, 5);
  const auto res = pool_edscw(x, PoolGeometry::square(2));
  const auto out = ada_unpool(res, {.double_softmax = true});
  double total = 0.0;
  for (double v : out.data()) total += v;
  EXPECT_NEAR(total, res.output.data()[0], 1e-12);
  // exp of weights in [0, 1] keeps ratios within e.
  for (double v : out.data()) {
    EXPECT_GT(v / res.output.data()[0], 0.25 / std::exp(1.0));
  }
}

TEST(AdaUnpool, IdentityKernelAndRemainder) {
  std::mt19937_64 rng(5);
  const auto x = random_map(rng, {3, {4, 5}});
  const auto res = pool_ada(x, PoolGeometry::square(1), BetaMap({4, 5}, 0.5));
  const auto out = ada_unpool(res);
  for (std::size_t i = 0; i < x.size(); ++i) EXPECT_NEAR(out.data()[i], x.data()[i], 1e-15);

  const auto odd = random_map(rng, {1, {5, 5}});
  const auto r2 = pool_em(odd, PoolGeometry::square(2));
  const auto o2 = ada_unpool(r2);
  EXPECT_EQ(o2.spatial(), (std::vector<std::size_t>{5, 5}));
}

TEST(AdaUnpool, Errors) {
  const auto avg = pool(OperatorSpec::parse("avg"), ActivationMap(1, {2, 2}),
                        PoolGeometry::square(2));
  EXPECT_THROW(ada_unpool(avg), MissingState);
}
