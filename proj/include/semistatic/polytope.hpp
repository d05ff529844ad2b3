#pragma once

// Polyhedra over the rationals: H/V representations, vertex enumeration and
// facet enumeration by the double-description method, and planar hulls.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <ostream>
#include <set>
#include <stdexcept>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "semistatic/exact_lp.hpp"
#include "semistatic/rational.hpp"

namespace semistatic {

/// a.x (rel) b
struct HalfSpace {
  RationalVector a;
  Relation rel = Relation::kLessEqual;
  Rational b = 0;
};

/// Either or both representations may be present.
struct Polytope {
  std::size_t dim = 0;
  std::vector<HalfSpace> constraints;
  std::vector<RationalVector> vertex_list;
  std::vector<RationalVector> ray_list;
  bool has_h = false;
  bool has_v = false;

  static Polytope from_h(std::size_t dim, std::vector<HalfSpace> rows) {
    Polytope p;
    p.dim = dim;
    p.constraints = std::move(rows);
    p.has_h = true;
    return p;
  }
  static Polytope from_v(std::size_t dim, std::vector<RationalVector> verts,
                         std::vector<RationalVector> rays = {}) {
    Polytope p;
    p.dim = dim;
    p.vertex_list = std::move(verts);
    p.ray_list = std::move(rays);
    p.has_v = true;
    return p;
  }

  bool contains(const RationalVector& x) const {
    for (const auto& h : constraints) {
      const Rational v = dot(h.a, x);
      if (h.rel == Relation::kLessEqual && v > h.b) return false;
      if (h.rel == Relation::kGreaterEqual && v < h.b) return false;
      if (h.rel == Relation::kEqual && v != h.b) return false;
    }
    return true;
  }
};

class UnboundedPolytope : public std::runtime_error {
 public:
  explicit UnboundedPolytope(RationalVector ray)
      : std::runtime_error("polyhedron is unbounded"), ray_(std::move(ray)) {}
  const RationalVector& ray() const { return ray_; }

 private:
  RationalVector ray_;
};

namespace detail {

class Bitset {
 public:
  Bitset() = default;
  explicit Bitset(std::size_t n) : words_((n + 63) / 64, 0) {}
  void set(std::size_t i) {
    if (i / 64 >= words_.size()) words_.resize(i / 64 + 1, 0);
    words_[i / 64] |= std::uint64_t{1} << (i % 64);
  }
  Bitset operator&(const Bitset& o) const {
    Bitset r;
    r.words_.resize(std::min(words_.size(), o.words_.size()));
    for (std::size_t i = 0; i < r.words_.size(); ++i) r.words_[i] = words_[i] & o.words_[i];
    return r;
  }
  bool subset_of(const Bitset& o) const {
    for (std::size_t i = 0; i < words_.size(); ++i) {
      const std::uint64_t other = i < o.words_.size() ? o.words_[i] : 0;
      if (words_[i] & ~other) return false;
    }
    return true;
  }
  std::size_t count() const {
    std::size_t c = 0;
    for (auto w : words_) c += static_cast<std::size_t>(__builtin_popcountll(w));
    return c;
  }

 private:
  std::vector<std::uint64_t> words_;
};

/// Scales v to the primitive integer vector on the same ray.
inline void normalize_ray(RationalVector& v) {
  mpz_class lcm = 1;
  for (const auto& x : v) {
    if (sgn(x) != 0) mpz_lcm(lcm.get_mpz_t(), lcm.get_mpz_t(), x.get_den_mpz_t());
  }
  mpz_class g = 0;
  for (auto& x : v) {
    x *= lcm;
    if (sgn(x) != 0) mpz_gcd(g.get_mpz_t(), g.get_mpz_t(), x.get_num_mpz_t());
  }
  if (g > 1) {
    for (auto& x : v) x /= g;
  }
}

struct ConeRay {
  RationalVector z;
  Bitset zeros;
};

struct ConeGenerators {
  std::vector<RationalVector> lineality;
  std::vector<ConeRay> rays;
};

inline void project_out(RationalVector& v, const RationalVector& l0, const Rational& gv, const Rational& gl0) {
  if (sgn(gv) == 0) return;
  const Rational f = gv / gl0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (sgn(l0[i]) != 0) v[i] -= f * l0[i];
  }
}

/// Double description of the cone {z : E z = 0, G z <= 0} in R^dim.
inline ConeGenerators double_description(std::size_t dim, const std::vector<RationalVector>& equalities,
                                         const std::vector<RationalVector>& inequalities) {
  ConeGenerators cone;
  for (std::size_t i = 0; i < dim; ++i) {
    RationalVector e(dim, Rational(0));
    e[i] = 1;
    cone.lineality.push_back(std::move(e));
  }
  const auto absorb_lineality = [&](const RationalVector& g, std::optional<std::size_t> ineq_index) -> bool {
    for (std::size_t li = 0; li < cone.lineality.size(); ++li) {
      Rational gl0 = dot(g, cone.lineality[li]);
      if (sgn(gl0) == 0) continue;
      RationalVector l0 = cone.lineality[li];
      if (ineq_index && sgn(gl0) > 0) {
        for (auto& x : l0) x = -x;
        gl0 = -gl0;
      }
      cone.lineality.erase(cone.lineality.begin() + static_cast<std::ptrdiff_t>(li));
      for (auto& l : cone.lineality) {
        project_out(l, l0, dot(g, l), gl0);
        normalize_ray(l);
      }
      for (auto& r : cone.rays) {
        project_out(r.z, l0, dot(g, r.z), gl0);
        normalize_ray(r.z);
        if (ineq_index) r.zeros.set(*ineq_index);
      }
      if (ineq_index) {
        // l0 was tight at every earlier inequality.
        Bitset zeros;
        for (std::size_t k = 0; k < *ineq_index; ++k) zeros.set(k);
        normalize_ray(l0);
        cone.rays.push_back({std::move(l0), std::move(zeros)});
      }
      return true;
    }
    return false;
  };

  const auto combine = [&](const RationalVector& g, std::optional<std::size_t> ineq_index) {
    std::vector<Rational> s(cone.rays.size());
    std::vector<std::size_t> pos, neg, zero;
    for (std::size_t i = 0; i < cone.rays.size(); ++i) {
      s[i] = dot(g, cone.rays[i].z);
      const int sg = sgn(s[i]);
      (sg > 0 ? pos : sg < 0 ? neg : zero).push_back(i);
    }
    std::vector<ConeRay> next;
    for (std::size_t i : zero) {
      next.push_back(cone.rays[i]);
      if (ineq_index) next.back().zeros.set(*ineq_index);
    }
    if (ineq_index) {
      for (std::size_t i : neg) next.push_back(cone.rays[i]);
    }
    for (std::size_t p : pos) {
      for (std::size_t q : neg) {
        const Bitset common = cone.rays[p].zeros & cone.rays[q].zeros;
        bool adjacent = true;
        for (std::size_t r = 0; r < cone.rays.size() && adjacent; ++r) {
          if (r == p || r == q) continue;
          if (common.subset_of(cone.rays[r].zeros)) adjacent = false;
        }
        if (!adjacent) continue;
        ConeRay nr;
        nr.z.resize(dim);
        const Rational sp = s[p];
        const Rational sq = -s[q];
        for (std::size_t i = 0; i < dim; ++i) nr.z[i] = sp * cone.rays[q].z[i] + sq * cone.rays[p].z[i];
        normalize_ray(nr.z);
        nr.zeros = common;
        if (ineq_index) nr.zeros.set(*ineq_index);
        next.push_back(std::move(nr));
      }
    }
    cone.rays = std::move(next);
  };

  for (const auto& e : equalities) {
    if (!absorb_lineality(e, std::nullopt)) combine(e, std::nullopt);
  }
  for (std::size_t k = 0; k < inequalities.size(); ++k) {
    if (!absorb_lineality(inequalities[k], k)) combine(inequalities[k], k);
  }
  return cone;
}

}  // namespace detail

/// Vertices of a bounded H-polytope (empty when infeasible). Throws
/// UnboundedPolytope with a recession direction when unbounded.
inline std::vector<RationalVector> vertices(const Polytope& p) {
  if (p.has_v) {
    if (!p.ray_list.empty()) throw UnboundedPolytope(p.ray_list.front());
    return p.vertex_list;
  }
  const std::size_t n = p.dim;
  std::vector<RationalVector> eqs, ineqs;
  for (const auto& h : p.constraints) {
    RationalVector g(n + 1);
    const Rational s = h.rel == Relation::kGreaterEqual ? -1 : 1;
    for (std::size_t i = 0; i < n; ++i) g[i] = h.a.at(i) * s;
    g[n] = -h.b * s;
    (h.rel == Relation::kEqual ? eqs : ineqs).push_back(std::move(g));
  }
  RationalVector t_nonneg(n + 1, Rational(0));
  t_nonneg[n] = -1;
  ineqs.insert(ineqs.begin(), std::move(t_nonneg));
  const auto cone = detail::double_description(n + 1, eqs, ineqs);

  std::vector<RationalVector> out;
  std::optional<RationalVector> recession;
  for (const auto& r : cone.rays) {
    if (sgn(r.z[n]) > 0) {
      RationalVector x(n);
      for (std::size_t i = 0; i < n; ++i) x[i] = r.z[i] / r.z[n];
      out.push_back(std::move(x));
    } else if (!recession) {
      recession = RationalVector(r.z.begin(), r.z.begin() + static_cast<std::ptrdiff_t>(n));
    }
  }
  if (!cone.lineality.empty() && !recession) {
    recession = RationalVector(cone.lineality.front().begin(), cone.lineality.front().begin() + static_cast<std::ptrdiff_t>(n));
  }
  if (!out.empty() && recession) throw UnboundedPolytope(*recession);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

/// Facets a.x <= b of the convex hull of `verts`, assumed full-dimensional.
/// Each facet is scaled to primitive integer coefficients.
inline Polytope to_h(const Polytope& p) {
  if (p.has_h) return p;
  if (!p.ray_list.empty()) throw UnboundedPolytope(p.ray_list.front());
  const std::size_t n = p.dim;
  std::vector<RationalVector> ineqs;
  for (const auto& v : p.vertex_list) {
    RationalVector g(n + 1);
    for (std::size_t i = 0; i < n; ++i) g[i] = v.at(i);
    g[n] = -1;
    ineqs.push_back(std::move(g));
  }
  const auto cone = detail::double_description(n + 1, {}, ineqs);
  if (!cone.lineality.empty()) throw std::invalid_argument("to_h: vertex set is not full-dimensional");
  std::vector<HalfSpace> rows;
  for (const auto& r : cone.rays) {
    if (std::all_of(r.z.begin(), r.z.begin() + static_cast<std::ptrdiff_t>(n), [](const Rational& x) { return sgn(x) == 0; })) {
      continue;
    }
    HalfSpace h;
    h.a.assign(r.z.begin(), r.z.begin() + static_cast<std::ptrdiff_t>(n));
    h.b = r.z[n];
    rows.push_back(std::move(h));
  }
  std::sort(rows.begin(), rows.end(), [](const HalfSpace& x, const HalfSpace& y) {
    return std::tie(x.a, x.b) < std::tie(y.a, y.b);
  });
  return Polytope::from_h(n, std::move(rows));
}

/// Rank of a rational matrix given by rows.
inline std::size_t matrix_rank(std::vector<RationalVector> rows) {
  std::size_t rank = 0;
  const std::size_t cols = rows.empty() ? 0 : rows.front().size();
  for (std::size_t c = 0; c < cols && rank < rows.size(); ++c) {
    std::size_t piv = rank;
    while (piv < rows.size() && sgn(rows[piv][c]) == 0) ++piv;
    if (piv == rows.size()) continue;
    std::swap(rows[piv], rows[rank]);
    for (std::size_t r = rank + 1; r < rows.size(); ++r) {
      if (sgn(rows[r][c]) == 0) continue;
      const Rational f = rows[r][c] / rows[rank][c];
      for (std::size_t k = c; k < cols; ++k) rows[r][k] -= f * rows[rank][k];
    }
    ++rank;
  }
  return rank;
}

/// Counter-clockwise convex hull of planar points (collinear points dropped).
inline std::vector<RationalVector> planar_hull(std::vector<RationalVector> pts) {
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  if (pts.size() <= 2) return pts;
  const auto cross = [](const RationalVector& o, const RationalVector& a, const RationalVector& b) {
    return Rational((a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]));
  };
  std::vector<RationalVector> hull(2 * pts.size());
  std::size_t k = 0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    while (k >= 2 && sgn(cross(hull[k - 2], hull[k - 1], pts[i])) <= 0) --k;
    hull[k++] = pts[i];
  }
  for (std::size_t i = pts.size() - 1, t = k + 1; i-- > 0;) {
    while (k >= t && sgn(cross(hull[k - 2], hull[k - 1], pts[i])) <= 0) --k;
    hull[k++] = pts[i];
  }
  hull.resize(k - 1);
  return hull;
}

/// H-representation as plain text: one "a_1 ... a_n <=|=|>= b" row per line.
inline void write_h_representation(std::ostream& out, const Polytope& p) {
  out << "dim " << p.dim << "\n";
  for (const auto& h : p.constraints) {
    for (const auto& x : h.a) out << to_string(x) << ' ';
    out << (h.rel == Relation::kLessEqual ? "<=" : h.rel == Relation::kEqual ? "=" : ">=") << ' '
        << to_string(h.b) << "\n";
  }
}

}  // namespace semistatic
