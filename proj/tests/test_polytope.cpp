#include <gtest/gtest.h>

#include <random>

#include "semistatic/fixtures.hpp"
#include "semistatic/measures.hpp"
#include "semistatic/polytope.hpp"

using namespace semistatic;

namespace {

HalfSpace le(RationalVector a, Rational b) { return {std::move(a), Relation::kLessEqual, std::move(b)}; }

Polytope unit_square() {
  return Polytope::from_h(2, {le({1, 0}, 1), le({-1, 0}, 0), le({0, 1}, 1), le({0, -1}, 0)});
}

}  // namespace

TEST(Vertices, UnitSquare) {
  const auto v = vertices(unit_square());
  const std::vector<RationalVector> expected{{0, 0}, {0, 1}, {1, 0}, {1, 1}};
  EXPECT_EQ(v, expected);
}

TEST(Vertices, RedundantConstraintsAndDuplicates) {
  Polytope p = unit_square();
  p.constraints.push_back(le({1, 1}, 2));
  p.constraints.push_back(le({1, 1}, 5));
  p.constraints.push_back(le({1, 0}, 1));
  EXPECT_EQ(vertices(p).size(), 4u);
}

TEST(Vertices, UnboundedRejectedWithRay) {
  const Polytope p = Polytope::from_h(2, {le({-1, 0}, 0), le({0, -1}, 0), le({1, -1}, 1)});
  try {
    vertices(p);
    FAIL() << "expected UnboundedPolytope";
  } catch (const UnboundedPolytope& e) {
    const auto& r = e.ray();
    ASSERT_EQ(r.size(), 2u);
    EXPECT_GE(r[0], 0);
    EXPECT_GE(r[1], 0);
    EXPECT_LE(r[0] - r[1], 0);
    EXPECT_TRUE(sgn(r[0]) != 0 || sgn(r[1]) != 0);
  }
}

TEST(Vertices, EmptyPolytope) {
  const Polytope p = Polytope::from_h(1, {le({1}, -1), le({-1}, -1)});
  EXPECT_TRUE(vertices(p).empty());
}

TEST(Vertices, T2MartingalePolytopeIsUniqueEmm) {
  const MarketFile f = fixture_t2();
  const PricingSetSpec s = pricing_set_spec(f.market);
  const auto v = closure_vertices(s);
  ASSERT_EQ(v.size(), 1u);
  const RationalVector expected{Rational(1, 9), Rational(2, 9), Rational(2, 9), Rational(4, 9)};
  EXPECT_EQ(v[0], expected);
}

TEST(Vertices, P2ClosureOfRegionA) {
  const MarketFile f = fixture_p2();
  const PricingSetSpec s = pricing_set_spec(f.market);
  const auto region = parameter_region(s, {"uu", "du"});
  // Vertices of {(p, q) in [0,1/2]^2 : max(3p,1)/2 + max(10q-3,-2)/2 <= 0 v ...} by case split.
  std::vector<RationalVector> expected{{0, 0}, {Rational(1, 2), 0}, {Rational(1, 2), Rational(3, 20)},
                                       {Rational(1, 3), Rational(1, 5)}, {0, Rational(1, 5)}};
  EXPECT_EQ(region.polygon, planar_hull(expected));
  EXPECT_EQ(region.polygon.size(), 5u);
}

TEST(Facets, RoundTripOnRandomPolygonsAndCubes) {
  std::mt19937 rng(7);
  std::uniform_int_distribution<int> d(-9, 9);
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t dim = 2 + trial % 2;
    std::vector<RationalVector> pts;
    for (int i = 0; i < 8; ++i) {
      RationalVector x(dim);
      for (auto& c : x) c = frac(d(rng), 1 + i % 3);
      pts.push_back(x);
    }
    // Only keep full-dimensional samples.
    std::vector<RationalVector> diffs;
    for (std::size_t i = 1; i < pts.size(); ++i) {
      RationalVector r(dim);
      for (std::size_t k = 0; k < dim; ++k) r[k] = pts[i][k] - pts[0][k];
      diffs.push_back(r);
    }
    if (matrix_rank(diffs) < dim) continue;
    const Polytope h = to_h(Polytope::from_v(dim, pts));
    auto v = vertices(h);
    for (const auto& x : v) EXPECT_TRUE(Polytope::from_h(dim, h.constraints).contains(x));
    for (const auto& x : pts) EXPECT_TRUE(h.contains(x));
    // Every returned vertex is one of the inputs, and H -> V -> H is stable.
    for (const auto& x : v) EXPECT_NE(std::find(pts.begin(), pts.end(), x), pts.end());
    const Polytope h2 = to_h(Polytope::from_v(dim, v));
    ASSERT_EQ(h2.constraints.size(), h.constraints.size());
    for (std::size_t i = 0; i < h.constraints.size(); ++i) {
      EXPECT_EQ(h2.constraints[i].a, h.constraints[i].a);
      EXPECT_EQ(h2.constraints[i].b, h.constraints[i].b);
    }
    if (dim == 2) {
      EXPECT_EQ(planar_hull(pts).size(), v.size());
    }
  }
}

TEST(Rank, SmallMatrices) {
  EXPECT_EQ(matrix_rank({{1, 2}, {2, 4}}), 1u);
  EXPECT_EQ(matrix_rank({{1, 2}, {0, 4}, {3, 1}}), 2u);
  EXPECT_EQ(matrix_rank({}), 0u);
}
