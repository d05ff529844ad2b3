#include <gtest/gtest.h>

#include <functional>
#include <random>
#include <sstream>

#include "semistatic/exact_lp.hpp"
#include "semistatic/fixtures.hpp"
#include "semistatic/measures.hpp"

using namespace semistatic;

namespace {

/// Solves the square system rows * x = rhs; nullopt if singular.
std::optional<RationalVector> solve_square(std::vector<RationalVector> rows, RationalVector rhs) {
  const std::size_t n = rows.size();
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t p = c;
    while (p < n && sgn(rows[p][c]) == 0) ++p;
    if (p == n) return std::nullopt;
    std::swap(rows[p], rows[c]);
    std::swap(rhs[p], rhs[c]);
    for (std::size_t r = 0; r < n; ++r) {
      if (r == c || sgn(rows[r][c]) == 0) continue;
      const Rational f = rows[r][c] / rows[c][c];
      for (std::size_t k = 0; k < n; ++k) rows[r][k] -= f * rows[c][k];
      rhs[r] -= f * rhs[c];
    }
  }
  RationalVector x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = rhs[i] / rows[i][i];
  return x;
}

/// Brute-force optimum of max c.x, A x <= b, x >= 0 over all basic solutions.
std::optional<Rational> brute_force_max(const std::vector<RationalVector>& a, const RationalVector& b,
                                        const RationalVector& c) {
  const std::size_t n = c.size();
  std::vector<RationalVector> rows = a;
  RationalVector rhs = b;
  for (std::size_t j = 0; j < n; ++j) {
    RationalVector e(n, Rational(0));
    e[j] = 1;
    rows.push_back(e);
    rhs.push_back(0);
  }
  std::optional<Rational> best;
  std::vector<std::size_t> pick(n);
  const std::size_t total = rows.size();
  std::function<void(std::size_t, std::size_t)> rec = [&](std::size_t start, std::size_t depth) {
    if (depth == n) {
      std::vector<RationalVector> sq;
      RationalVector r;
      for (auto i : pick) {
        sq.push_back(rows[i]);
        r.push_back(rhs[i]);
      }
      const auto x = solve_square(sq, r);
      if (!x) return;
      for (std::size_t j = 0; j < n; ++j) {
        if ((*x)[j] < 0) return;
      }
      for (std::size_t i = 0; i < a.size(); ++i) {
        if (dot(a[i], *x) > b[i]) return;
      }
      const Rational v = dot(c, *x);
      if (!best || v > *best) best = v;
      return;
    }
    for (std::size_t i = start; i < total; ++i) {
      pick[depth] = i;
      rec(i + 1, depth + 1);
    }
  };
  rec(0, 0);
  return best;
}

}  // namespace

TEST(Solve, SingleBound) {
  LpProblem lp;
  const auto x = lp.add_free_variable("x", 1);
  lp.add_constraint(LinearExpr(x, 1), Relation::kLessEqual, 1);
  const LpSolution s = solve(lp);
  ASSERT_EQ(s.status, LpStatus::kOptimal);
  EXPECT_EQ(s.x[x], 1);
  EXPECT_EQ(s.duals[0], 1);
  EXPECT_EQ(s.objective, 1);
  EXPECT_EQ(verify_certificate(lp, s), "");
}

TEST(Solve, DegenerateFace) {
  LpProblem lp;
  const auto x = lp.add_variable("x", Rational(0), std::nullopt, 1);
  const auto y = lp.add_variable("y", Rational(0), std::nullopt, 1);
  lp.add_constraint(LinearExpr(x, 1).add(y, 1), Relation::kLessEqual, 1);
  const LpSolution s = solve(lp);
  ASSERT_EQ(s.status, LpStatus::kOptimal);
  EXPECT_EQ(s.objective, 1);
  EXPECT_EQ(verify_certificate(lp, s), "");
}

TEST(Solve, B1MartingaleFeasibility) {
  const MarketSpec m = fixture_b1().market;
  MeasureProgram p = martingale_system(m);
  const LpSolution s = solve(p.lp);
  ASSERT_EQ(s.status, LpStatus::kOptimal);
  EXPECT_EQ(s.x[p.q[m.tree.leaf_index(*m.tree.find("u"))]], Rational(1, 2));
  EXPECT_EQ(verify_certificate(p.lp, s), "");
}

TEST(Solve, InfeasibleHasFarkasCertificate) {
  LpProblem lp;
  const auto x = lp.add_variable("x");
  const auto y = lp.add_free_variable("y");
  lp.add_constraint(LinearExpr(x, 1).add(y, 1), Relation::kGreaterEqual, 3);
  lp.add_constraint(LinearExpr(x, 1).add(y, 1), Relation::kLessEqual, 2);
  const LpSolution s = solve(lp);
  ASSERT_EQ(s.status, LpStatus::kInfeasible);
  EXPECT_EQ(verify_certificate(lp, s), "");
  LpSolution bad = s;
  bad.farkas[0] = 0;
  EXPECT_NE(verify_certificate(lp, bad), "");
}

TEST(Solve, UnboundedHasRay) {
  LpProblem lp;
  const auto x = lp.add_variable("x", Rational(0), std::nullopt, 1);
  const auto y = lp.add_variable("y", Rational(0), std::nullopt, 1);
  lp.add_constraint(LinearExpr(x, 1).add(y, -1), Relation::kLessEqual, 1);
  const LpSolution s = solve(lp);
  ASSERT_EQ(s.status, LpStatus::kUnbounded);
  EXPECT_EQ(verify_certificate(lp, s), "");
  EXPECT_GT(s.ray[x], 0);
}

TEST(Solve, MinimizeWithBoundsAndEqualities) {
  LpProblem lp;
  lp.sense = Sense::kMinimize;
  const auto x = lp.add_variable("x", Rational(-2), Rational(5), 3);
  const auto y = lp.add_variable("y", std::nullopt, Rational(4), -1);
  lp.add_constraint(LinearExpr(x, 1).add(y, 2), Relation::kEqual, Rational(7, 2));
  lp.add_constraint(LinearExpr(x, 1).add(y, -1), Relation::kGreaterEqual, -3);
  const LpSolution s = solve(lp);
  ASSERT_EQ(s.status, LpStatus::kOptimal);
  EXPECT_EQ(verify_certificate(lp, s), "");
  // Substituting x = 7/2 - 2y: objective 21/2 - 7y, y <= 4, x >= -2 => y <= 11/4,
  // x - y >= -3 => y <= 13/6. Optimum at y = 13/6.
  EXPECT_EQ(s.x[y], Rational(13, 6));
  EXPECT_EQ(s.objective, Rational(21, 2) - 7 * Rational(13, 6));
}

TEST(Solve, RedundantEqualities) {
  LpProblem lp;
  const auto x = lp.add_variable("x", Rational(0), std::nullopt, 1);
  const auto y = lp.add_variable("y", Rational(0), std::nullopt, 2);
  lp.add_constraint(LinearExpr(x, 1).add(y, 1), Relation::kEqual, 1);
  lp.add_constraint(LinearExpr(x, 2).add(y, 2), Relation::kEqual, 2);
  const LpSolution s = solve(lp);
  ASSERT_EQ(s.status, LpStatus::kOptimal);
  EXPECT_EQ(s.objective, 2);
  EXPECT_EQ(verify_certificate(lp, s), "");
}

TEST(Solve, CorruptedCertificatesAreRejected) {
  LpProblem lp;
  const auto x = lp.add_variable("x", Rational(0), std::nullopt, 2);
  const auto y = lp.add_variable("y", Rational(0), std::nullopt, 3);
  lp.add_constraint(LinearExpr(x, 1).add(y, 1), Relation::kLessEqual, 4);
  lp.add_constraint(LinearExpr(x, 1).add(y, 3), Relation::kLessEqual, 6);
  const LpSolution s = solve(lp);
  ASSERT_EQ(s.status, LpStatus::kOptimal);
  EXPECT_EQ(verify_certificate(lp, s), "");
  LpSolution bad = s;
  bad.x[x] += 1;
  EXPECT_NE(verify_certificate(lp, bad), "");
  bad = s;
  bad.duals[0] += Rational(1, 7);
  EXPECT_NE(verify_certificate(lp, bad), "");
  bad = s;
  bad.objective += 1;
  EXPECT_NE(verify_certificate(lp, bad), "");
}

TEST(Solve, RandomAgainstBruteForce) {
  std::mt19937 rng(20240611);
  std::uniform_int_distribution<int> coef(-4, 6), rhs(-2, 9), dims(2, 3), rows(1, 4);
  int optimal = 0, infeasible = 0, unbounded = 0;
  for (int trial = 0; trial < 300; ++trial) {
    const int n = dims(rng), m = rows(rng);
    std::vector<RationalVector> a(m, RationalVector(n));
    RationalVector b(m), c(n);
    LpProblem lp;
    for (int j = 0; j < n; ++j) {
      c[j] = frac(coef(rng), 1 + (trial % 3));
      lp.add_variable("x" + std::to_string(j), Rational(0), std::nullopt, c[j]);
    }
    for (int i = 0; i < m; ++i) {
      LinearExpr e;
      for (int j = 0; j < n; ++j) {
        a[i][j] = coef(rng);
        e.add(j, a[i][j]);
      }
      b[i] = rhs(rng);
      lp.add_constraint(std::move(e), Relation::kLessEqual, b[i]);
    }
    const LpSolution s = solve(lp);
    ASSERT_EQ(verify_certificate(lp, s), "") << "trial " << trial;
    const auto brute = brute_force_max(a, b, c);
    if (s.status == LpStatus::kInfeasible) {
      EXPECT_FALSE(brute.has_value()) << "trial " << trial;
      ++infeasible;
    } else if (s.status == LpStatus::kOptimal) {
      ASSERT_TRUE(brute.has_value());
      EXPECT_EQ(s.objective, *brute) << "trial " << trial;
      ++optimal;
    } else {
      ++unbounded;
    }
    // Determinism.
    const LpSolution again = solve(lp);
    EXPECT_EQ(again.x, s.x);
  }
  EXPECT_GT(optimal, 0);
  EXPECT_GT(infeasible, 0);
  EXPECT_GT(unbounded, 0);
}

TEST(LpFormat, DumpIsFlaggedLossy) {
  LpProblem lp;
  const auto x = lp.add_variable("x", Rational(0), Rational(1, 3), 1);
  const auto y = lp.add_free_variable("y weird", -1);
  lp.add_constraint(LinearExpr(x, 1).add(y, Rational(-2, 3)), Relation::kLessEqual, 1);
  std::ostringstream out;
  write_lp_format(out, lp);
  const std::string text = out.str();
  EXPECT_NE(text.find("LOSSY"), std::string::npos);
  EXPECT_NE(text.find("Maximize"), std::string::npos);
  EXPECT_NE(text.find("free"), std::string::npos);
  EXPECT_NE(text.find("End"), std::string::npos);
}
