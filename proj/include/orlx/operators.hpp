#pragma once

// Maximal functions over grid families, sparse families with exact packing
// arithmetic, a discrete truncated singular integral, pointwise sparse
// domination, and the bilinear fractional operators. Point evaluation is at
// sample-cell centers: a cube "contains" the cells whose centers lie in its
// realized box.

#include <algorithm>
#include <cstdlib>
#include <functional>
#include <map>
#include <set>
#include <variant>

#include "orlx/orlicz.hpp"

namespace orlx {

namespace detail {

// Per-axis sample-cell range whose centers fall in the realized box.
struct CellRange {
  std::array<std::int64_t, 2> lo{{0, 0}}, hi{{0, 0}};  // half-open per axis
  bool empty(int dim) const {
    for (int d = 0; d < dim; ++d)
      if (lo[d] >= hi[d]) return true;
    return false;
  }
};

inline CellRange center_cells(const BoxU& b) {
  CellRange r;
  for (int d = 0; d < b.dim; ++d) {
    auto [clo, chi] = cell_center_range(b.lo[d], b.hi[d]);
    r.lo[d] = clo;
    r.hi[d] = chi;
  }
  return r;
}

template <class Fn>
void for_center_cells(const Domain& dom, const CellRange& r, Fn&& fn) {
  if (r.empty(dom.dim)) return;
  if (dom.dim == 1) {
    for (std::int64_t c = r.lo[0]; c < r.hi[0]; ++c) fn(c);
    return;
  }
  const std::int64_t n = dom.cells_per_side();
  for (std::int64_t c0 = r.lo[0]; c0 < r.hi[0]; ++c0)
    for (std::int64_t c1 = r.lo[1]; c1 < r.hi[1]; ++c1) fn(c0 * n + c1);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Hardy-Littlewood maximal function over a grid family.

inline GridFunction maximal(const GridFunction& f, const std::vector<Grid>& grids) {
  if (grids.empty()) throw std::invalid_argument("maximal: empty grid family");
  const GridFunction af = gf_abs(f);
  std::vector<double> out(f.values.size(), 0.0);
  for (const Grid& g : grids) {
    if (g.domain != f.domain) throw std::invalid_argument("maximal: domain mismatch");
    for (int k = 0; k <= g.domain.depth; ++k) {
      for (const Cube& q : cells(g, k)) {
        const BoxU box = q.realized();
        const auto range = detail::center_cells(box);
        if (range.empty(f.domain.dim)) continue;
        const double val = af.average_over(box);
        detail::for_center_cells(f.domain, range, [&](std::int64_t c) {
          out[std::size_t(c)] = std::max(out[std::size_t(c)], val);
        });
      }
    }
  }
  return GridFunction(f.domain, std::move(out));
}

// ---------------------------------------------------------------------------
// Orlicz maximal function M_Phi f = sup_Q ||f||_{Phi,Q}. Exact power
// variants reduce to powered averages (tested against the generic solver);
// otherwise each cube is solved with a warm start from its parent.

inline GridFunction orlicz_maximal(const GridFunction& f, const YoungFunction& phi,
                                   const std::vector<Grid>& grids) {
  if (grids.empty()) throw std::invalid_argument("orlicz_maximal: empty grid family");
  std::vector<double> out(f.values.size(), 0.0);

  if (auto p = phi.effective_power()) {
    const GridFunction fp = f.map([&](double v) { return std::pow(std::fabs(v), *p); });
    for (const Grid& g : grids) {
      if (g.domain != f.domain)
        throw std::invalid_argument("orlicz_maximal: domain mismatch");
      for (int k = 0; k <= g.domain.depth; ++k) {
        for (const Cube& q : cells(g, k)) {
          const BoxU box = q.realized();
          const auto range = detail::center_cells(box);
          if (range.empty(f.domain.dim)) continue;
          const double val = std::pow(fp.average_over(box), 1.0 / *p);
          detail::for_center_cells(f.domain, range, [&](std::int64_t c) {
            out[std::size_t(c)] = std::max(out[std::size_t(c)], val);
          });
        }
      }
    }
    return GridFunction(f.domain, std::move(out));
  }

  for (const Grid& g : grids) {
    if (g.domain != f.domain)
      throw std::invalid_argument("orlicz_maximal: domain mismatch");
    // prev[c] = norm of the previous-level cube whose box holds cell c
    std::vector<double> prev(f.values.size(), 0.0);
    std::vector<double> cur(f.values.size(), 0.0);
    for (int k = 0; k <= g.domain.depth; ++k) {
      for (const Cube& q : cells(g, k)) {
        const BoxU box = q.realized();
        const auto range = detail::center_cells(box);
        if (range.empty(f.domain.dim)) continue;
        LuxemburgOptions opts;
        if (k > 0) {
          const std::int64_t first =
              f.domain.dim == 1 ? range.lo[0]
                                : range.lo[0] * f.domain.cells_per_side() + range.lo[1];
          opts.warm = prev[std::size_t(first)];
        }
        const double val = orlicz_norm_region(f, box, phi, opts);
        detail::for_center_cells(f.domain, range, [&](std::int64_t c) {
          cur[std::size_t(c)] = val;
          out[std::size_t(c)] = std::max(out[std::size_t(c)], val);
        });
      }
      std::swap(prev, cur);
    }
  }
  return GridFunction(f.domain, std::move(out));
}

// Bisublinear maximal: sup_Q ||f||_{Psi1,Q} ||g||_{Psi2,Q}.
inline GridFunction bisublinear_maximal(const GridFunction& f, const GridFunction& g,
                                        const YoungFunction& psi1,
                                        const YoungFunction& psi2,
                                        const std::vector<Grid>& grids) {
  if (f.domain != g.domain)
    throw std::invalid_argument("bisublinear_maximal: domain mismatch");
  if (grids.empty()) throw std::invalid_argument("bisublinear_maximal: empty family");
  std::vector<double> out(f.values.size(), 0.0);
  const auto pf = psi1.effective_power();
  const auto pg = psi2.effective_power();
  const GridFunction fp =
      pf ? f.map([&](double v) { return std::pow(std::fabs(v), *pf); }) : GridFunction();
  const GridFunction gp =
      pg ? g.map([&](double v) { return std::pow(std::fabs(v), *pg); }) : GridFunction();

  for (const Grid& grid : grids) {
    if (grid.domain != f.domain)
      throw std::invalid_argument("bisublinear_maximal: domain mismatch");
    std::vector<double> prev_f(f.values.size(), 0.0), cur_f(f.values.size(), 0.0);
    std::vector<double> prev_g(f.values.size(), 0.0), cur_g(f.values.size(), 0.0);
    for (int k = 0; k <= grid.domain.depth; ++k) {
      for (const Cube& q : cells(grid, k)) {
        const BoxU box = q.realized();
        const auto range = detail::center_cells(box);
        if (range.empty(f.domain.dim)) continue;
        const std::int64_t first =
            f.domain.dim == 1 ? range.lo[0]
                              : range.lo[0] * f.domain.cells_per_side() + range.lo[1];
        double nf, ng;
        if (pf) {
          nf = std::pow(fp.average_over(box), 1.0 / *pf);
        } else {
          LuxemburgOptions o;
          if (k > 0) o.warm = prev_f[std::size_t(first)];
          nf = orlicz_norm_region(f, box, psi1, o);
        }
        if (pg) {
          ng = std::pow(gp.average_over(box), 1.0 / *pg);
        } else {
          LuxemburgOptions o;
          if (k > 0) o.warm = prev_g[std::size_t(first)];
          ng = orlicz_norm_region(g, box, psi2, o);
        }
        const double val = nf * ng;
        detail::for_center_cells(f.domain, range, [&](std::int64_t c) {
          cur_f[std::size_t(c)] = nf;
          cur_g[std::size_t(c)] = ng;
          out[std::size_t(c)] = std::max(out[std::size_t(c)], val);
        });
      }
      std::swap(prev_f, cur_f);
      std::swap(prev_g, cur_g);
    }
  }
  return GridFunction(f.domain, std::move(out));
}

// Bilinear fractional maximal: sup_Q |Q|^(alpha/n) avg|f| avg|g|.
inline GridFunction frac_maximal_bilinear(const GridFunction& f, const GridFunction& g,
                                          double alpha,
                                          const std::vector<Grid>& grids) {
  if (f.domain != g.domain)
    throw std::invalid_argument("frac_maximal_bilinear: domain mismatch");
  const int n = f.domain.dim;
  if (!(alpha >= 0.0) || alpha >= double(2 * n))
    throw std::invalid_argument("frac_maximal_bilinear: need 0 <= alpha < 2n");
  const GridFunction af = gf_abs(f), ag = gf_abs(g);
  std::vector<double> out(f.values.size(), 0.0);
  for (const Grid& grid : grids) {
    if (grid.domain != f.domain)
      throw std::invalid_argument("frac_maximal_bilinear: domain mismatch");
    for (int k = 0; k <= grid.domain.depth; ++k) {
      for (const Cube& q : cells(grid, k)) {
        const BoxU box = q.realized();
        const auto range = detail::center_cells(box);
        if (range.empty(f.domain.dim)) continue;
        const double meas = q.measure();
        const double val = std::pow(meas, alpha / double(n)) *
                           af.average_over(box) * ag.average_over(box);
        detail::for_center_cells(f.domain, range, [&](std::int64_t c) {
          out[std::size_t(c)] = std::max(out[std::size_t(c)], val);
        });
      }
    }
  }
  return GridFunction(f.domain, std::move(out));
}

// ---------------------------------------------------------------------------
// Sparse families. Membership and packing are integer-exact: the maximal
// strict descendants of a member are its children in the nearest-ancestor
// forest, they are pairwise disjoint, and E_Q = Q minus their union.

struct SparseViolation {
  Cube cube;
  double fraction = 0.0;  // measured |union of strict descendants| / |Q|
};

struct SparseFamily {
  Grid grid;
  std::vector<Cube> cubes;                 // sorted by (level, index)
  std::vector<std::vector<int>> kids;      // forest children per member
  std::vector<std::int64_t> q_units;       // realized measure, units^dim
  std::vector<std::int64_t> desc_units;    // union of strict descendants
  double packing = 0.0;                    // max desc/q over members

  std::int64_t eq_units(int i) const { return q_units[i] - desc_units[i]; }

  // weight of E_Q w.r.t. a grid function, in units^dim
  double eq_weight_units(int i, const GridFunction& w) const {
    double v = w.integral_units(cubes[std::size_t(i)].realized());
    for (int c : kids[std::size_t(i)])
      v -= w.integral_units(cubes[std::size_t(c)].realized());
    return v;
  }
};

inline std::variant<SparseFamily, SparseViolation> sparse_check(
    const Grid& grid, std::vector<Cube> cubes) {
  for (const Cube& q : cubes) {
    if (q.grid != grid)
      throw std::invalid_argument("sparse_check: cube from a different grid");
    if (q.empty())
      throw std::invalid_argument("sparse_check: empty realization");
  }
  std::sort(cubes.begin(), cubes.end(), [](const Cube& a, const Cube& b) {
    if (a.level != b.level) return a.level < b.level;
    if (a.index[0] != b.index[0]) return a.index[0] < b.index[0];
    return a.index[1] < b.index[1];
  });
  cubes.erase(std::unique(cubes.begin(), cubes.end(),
                          [](const Cube& a, const Cube& b) {
                            return a.level == b.level && a.index == b.index;
                          }),
              cubes.end());

  // per-level index maps for ancestor walks
  std::vector<std::map<std::array<std::int64_t, 2>, int>> at_level(
      std::size_t(grid.domain.depth) + 1);
  for (int i = 0; i < int(cubes.size()); ++i)
    at_level[std::size_t(cubes[std::size_t(i)].level)][cubes[std::size_t(i)].index] = i;

  SparseFamily fam;
  fam.grid = grid;
  fam.cubes = cubes;
  fam.kids.assign(cubes.size(), {});
  fam.q_units.resize(cubes.size());
  fam.desc_units.assign(cubes.size(), 0);

  for (int i = 0; i < int(cubes.size()); ++i) {
    const Cube& q = cubes[std::size_t(i)];
    fam.q_units[std::size_t(i)] = q.realized().measure_units();
    for (int j = q.level - 1; j >= 0; --j) {
      const int shiftby = q.level - j;
      const std::array<std::int64_t, 2> up{
          floor_div(q.index[0], std::int64_t(1) << shiftby),
          floor_div(q.index[1], std::int64_t(1) << shiftby)};
      const auto hit = at_level[std::size_t(j)].find(up);
      if (hit != at_level[std::size_t(j)].end()) {
        fam.kids[std::size_t(hit->second)].push_back(i);
        break;
      }
    }
  }

  for (int i = 0; i < int(cubes.size()); ++i) {
    for (int c : fam.kids[std::size_t(i)])
      fam.desc_units[std::size_t(i)] += fam.q_units[std::size_t(c)];
    const double frac = double(fam.desc_units[std::size_t(i)]) /
                        double(fam.q_units[std::size_t(i)]);
    if (2 * fam.desc_units[std::size_t(i)] > fam.q_units[std::size_t(i)])
      return SparseViolation{cubes[std::size_t(i)], frac};
    fam.packing = std::max(fam.packing, frac);
  }
  return fam;
}

// E_Q as explicit sample-cell indices (cells in Q, not in any forest child).
inline std::vector<std::int64_t> eq_cells(const SparseFamily& fam, int i) {
  std::vector<char> blocked(std::size_t(fam.grid.domain.total_cells()), 0);
  for (int c : fam.kids[std::size_t(i)]) {
    const auto r = detail::center_cells(fam.cubes[std::size_t(c)].realized());
    detail::for_center_cells(fam.grid.domain, r,
                             [&](std::int64_t idx) { blocked[std::size_t(idx)] = 1; });
  }
  std::vector<std::int64_t> out;
  const auto r = detail::center_cells(fam.cubes[std::size_t(i)].realized());
  detail::for_center_cells(fam.grid.domain, r, [&](std::int64_t idx) {
    if (!blocked[std::size_t(idx)]) out.push_back(idx);
  });
  return out;
}

inline nlohmann::ordered_json sparse_family_to_json(const SparseFamily& fam,
                                                    bool with_cells = true) {
  nlohmann::ordered_json j;
  j["sigma_thirds"] = std::vector<int>(
      fam.grid.shift_thirds.begin(),
      fam.grid.shift_thirds.begin() + fam.grid.domain.dim);
  j["dim"] = fam.grid.domain.dim;
  j["depth"] = fam.grid.domain.depth;
  j["packing"] = fam.packing;
  j["cubes"] = nlohmann::ordered_json::array();
  for (int i = 0; i < int(fam.cubes.size()); ++i) {
    nlohmann::ordered_json row = cube_to_json(fam.cubes[std::size_t(i)]);
    row["measure_units"] = fam.q_units[std::size_t(i)];
    row["eq_measure_units"] = fam.eq_units(i);
    if (with_cells) row["eq_cells"] = eq_cells(fam, i);
    j["cubes"].push_back(std::move(row));
  }
  return j;
}

// T^S f = sum over members of avg_Q(f) chi_Q.
inline GridFunction sparse_apply(const SparseFamily& fam, const GridFunction& f) {
  if (f.domain != fam.grid.domain)
    throw std::invalid_argument("sparse_apply: domain mismatch");
  std::vector<double> out(f.values.size(), 0.0);
  for (const Cube& q : fam.cubes) {
    const BoxU box = q.realized();
    const double a = f.average_over(box);
    detail::for_center_cells(f.domain, detail::center_cells(box),
                             [&](std::int64_t c) { out[std::size_t(c)] += a; });
  }
  return GridFunction(f.domain, std::move(out));
}

// Bilinear sparse form: sum of avg_Q(f) avg_Q(g) chi_Q.
inline GridFunction sparse_apply2(const SparseFamily& fam, const GridFunction& f,
                                  const GridFunction& g) {
  if (f.domain != g.domain || f.domain != fam.grid.domain)
    throw std::invalid_argument("sparse_apply2: domain mismatch");
  std::vector<double> out(f.values.size(), 0.0);
  for (const Cube& q : fam.cubes) {
    const BoxU box = q.realized();
    const double a = f.average_over(box) * g.average_over(box);
    detail::for_center_cells(f.domain, detail::center_cells(box),
                             [&](std::int64_t c) { out[std::size_t(c)] += a; });
  }
  return GridFunction(f.domain, std::move(out));
}

// Fractional sparse form with dilated averages:
// sum of |Q|^(alpha/n) avg_{3Q}(f) avg_{3Q}(g) chi_Q.
inline GridFunction sparse_apply_frac3(const Grid& grid, const std::vector<Cube>& cubes,
                                       const GridFunction& f, const GridFunction& g,
                                       double alpha) {
  if (f.domain != g.domain || f.domain != grid.domain)
    throw std::invalid_argument("sparse_apply_frac3: domain mismatch");
  const int n = f.domain.dim;
  std::vector<double> out(f.values.size(), 0.0);
  for (const Cube& q : cubes) {
    const BoxU t = dilate3(q);
    const double a = std::pow(q.measure(), alpha / double(n)) *
                     f.average_over(t) * g.average_over(t);
    detail::for_center_cells(f.domain, detail::center_cells(q.realized()),
                             [&](std::int64_t c) { out[std::size_t(c)] += a; });
  }
  return GridFunction(f.domain, std::move(out));
}

inline GridFunction sparse_apply_frac3(const SparseFamily& fam, const GridFunction& f,
                                       const GridFunction& g, double alpha) {
  return sparse_apply_frac3(fam.grid, fam.cubes, f, g, alpha);
}

// ---------------------------------------------------------------------------
// Discrete truncated singular integral (dim 1): odd kernel 1/(x-y) sampled
// at cell centers, self-interaction omitted.

inline GridFunction czo_apply(const GridFunction& f) {
  if (f.domain.dim != 1)
    throw std::invalid_argument("czo_apply: implemented for dim 1");
  const std::int64_t n = f.domain.cells_per_side();
  std::vector<double> out(std::size_t(n), 0.0);
  std::vector<double> inv(std::size_t(2 * n), 0.0);
  for (std::int64_t d = 1; d < 2 * n; ++d) inv[std::size_t(d)] = 1.0 / double(d);
  parallel_for(std::size_t(n), [&](std::size_t i) {
    double acc = 0.0;
    const std::int64_t ii = std::int64_t(i);
    for (std::int64_t j = 0; j < n; ++j) {
      if (j == ii) continue;
      const std::int64_t d = ii - j;
      acc += d > 0 ? f.values[std::size_t(j)] * inv[std::size_t(d)]
                   : -f.values[std::size_t(j)] * inv[std::size_t(-d)];
    }
    out[i] = acc;
  });
  return GridFunction(f.domain, std::move(out));
}

// ---------------------------------------------------------------------------
// Pointwise sparse domination: per-grid average-stopping families on |f|
// (select children whose average jumps by the factor a), then compare the
// operator image against the summed sparse expressions.

struct DominationResult {
  GridFunction tf;            // operator image
  GridFunction sparse_bound;  // sum over grids of T^S |f|
  std::vector<SparseFamily> families;
  double max_ratio = 0.0;
  std::int64_t witness_cell = -1;
  bool bounded = true;  // false if the bound vanished where |tf| did not
  double a = 2.0;
};

inline std::vector<Cube> stopping_cubes_avg(const GridFunction& af, const Grid& g,
                                            double a) {
  std::vector<Cube> selected;
  struct Item {
    Cube q;
    double base;
  };
  std::vector<Item> stack;
  for (const Cube& root : cells(g, 0)) {
    selected.push_back(root);
    stack.push_back({root, average(af, root)});
  }
  while (!stack.empty()) {
    const Item it = stack.back();
    stack.pop_back();
    for (const Cube& c : it.q.children()) {
      const double avg = average(af, c);
      if (avg > a * it.base) {
        selected.push_back(c);
        stack.push_back({c, avg});
      } else {
        stack.push_back({c, it.base});
      }
    }
  }
  return selected;
}

inline DominationResult sparse_dominate(
    const GridFunction& f,
    const std::function<GridFunction(const GridFunction&)>& op, double a = 2.0,
    std::vector<Grid> grids = {}) {
  if (!(a >= 2.0))
    throw std::invalid_argument("sparse_dominate: need a >= 2 for the packing bound");
  if (grids.empty()) grids = shifted_family(f.domain);
  const GridFunction af = gf_abs(f);

  DominationResult res;
  res.a = a;
  res.tf = op(f);
  std::vector<double> bound(f.values.size(), 0.0);
  for (const Grid& g : grids) {
    auto outcome = sparse_check(g, stopping_cubes_avg(af, g, a));
    if (std::holds_alternative<SparseViolation>(outcome))
      throw std::logic_error(
          "sparse_dominate: average-stopping family failed the packing check");
    SparseFamily fam = std::get<SparseFamily>(std::move(outcome));
    const GridFunction part = sparse_apply(fam, af);
    for (std::size_t i = 0; i < bound.size(); ++i) bound[i] += part.values[i];
    res.families.push_back(std::move(fam));
  }
  res.sparse_bound = GridFunction(f.domain, std::move(bound));

  for (std::size_t i = 0; i < f.values.size(); ++i) {
    const double num = std::fabs(res.tf.values[i]);
    const double den = res.sparse_bound.values[i];
    if (den == 0.0) {
      if (num > 0.0) {
        res.bounded = false;
        res.witness_cell = std::int64_t(i);
      }
      continue;
    }
    const double ratio = num / den;
    if (ratio > res.max_ratio) {
      res.max_ratio = ratio;
      res.witness_cell = std::int64_t(i);
    }
  }
  return res;
}

// ---------------------------------------------------------------------------
// Bilinear fractional operators (dim 1 quadratures over cell centers; the
// direct forms also exist for dim 2 at reduced depth).

inline GridFunction bi_fractional_direct(const GridFunction& f, const GridFunction& g,
                                         double alpha) {
  const int n = f.domain.dim;
  if (f.domain != g.domain)
    throw std::invalid_argument("bi_fractional_direct: domain mismatch");
  if (!(alpha > 0.0) || alpha >= double(n))
    throw std::invalid_argument("bi_fractional_direct: need 0 < alpha < n");
  const std::int64_t N = f.domain.cells_per_side();
  const double h = f.domain.cell_width();
  std::vector<double> out(f.values.size(), 0.0);
  if (n == 1) {
    parallel_for(std::size_t(N), [&](std::size_t i) {
      const std::int64_t ii = std::int64_t(i);
      double acc = 0.0;
      for (std::int64_t j = -(N - 1); j < N; ++j) {
        if (j == 0) continue;
        const std::int64_t a = ii - j, b = ii + j;
        if (a < 0 || a >= N || b < 0 || b >= N) continue;
        acc += f.values[std::size_t(a)] * g.values[std::size_t(b)] /
               std::pow(std::fabs(double(j)), 1.0 - alpha);
      }
      out[i] = acc * std::pow(h, alpha);
    });
  } else {
    parallel_for(std::size_t(N * N), [&](std::size_t lin) {
      const std::int64_t i0 = std::int64_t(lin) / N, i1 = std::int64_t(lin) % N;
      double acc = 0.0;
      for (std::int64_t j0 = -(N - 1); j0 < N; ++j0) {
        const std::int64_t a0 = i0 - j0, b0 = i0 + j0;
        if (a0 < 0 || a0 >= N || b0 < 0 || b0 >= N) continue;
        for (std::int64_t j1 = -(N - 1); j1 < N; ++j1) {
          if (j0 == 0 && j1 == 0) continue;
          const std::int64_t a1 = i1 - j1, b1 = i1 + j1;
          if (a1 < 0 || a1 >= N || b1 < 0 || b1 >= N) continue;
          const double r = std::sqrt(double(j0 * j0 + j1 * j1));
          acc += f.values[std::size_t(a0 * N + a1)] *
                 g.values[std::size_t(b0 * N + b1)] / std::pow(r, 2.0 - alpha);
        }
      }
      out[lin] = acc * std::pow(h, alpha);
    });
  }
  return GridFunction(f.domain, std::move(out));
}

// Centered bilinear fractional maximal over dyadic radii r = 2^-m.
inline GridFunction bm_alpha(const GridFunction& f, const GridFunction& g,
                             double alpha) {
  const int n = f.domain.dim;
  if (f.domain != g.domain) throw std::invalid_argument("bm_alpha: domain mismatch");
  if (n != 1) throw std::invalid_argument("bm_alpha: implemented for dim 1");
  if (!(alpha >= 0.0) || alpha >= 2.0)
    throw std::invalid_argument("bm_alpha: need 0 <= alpha < 2n");
  const std::int64_t N = f.domain.cells_per_side();
  const double h = f.domain.cell_width();
  const int L = f.domain.depth;
  std::vector<double> out(f.values.size(), 0.0);
  parallel_for(std::size_t(N), [&](std::size_t i) {
    const std::int64_t ii = std::int64_t(i);
    double best = 0.0;
    double s = std::fabs(f.values[i] * g.values[i]);  // j = 0
    std::int64_t J = 0;
    for (int m = L; m >= 0; --m) {
      const std::int64_t Jm = std::int64_t(1) << (L - m);
      for (std::int64_t j = J + 1; j <= Jm; ++j) {
        const std::int64_t a = ii - j, b = ii + j;
        if (a >= 0 && b < N)
          s += std::fabs(f.values[std::size_t(a)] * g.values[std::size_t(b)]);
        const std::int64_t a2 = ii + j, b2 = ii - j;
        if (b2 >= 0 && a2 < N)
          s += std::fabs(f.values[std::size_t(a2)] * g.values[std::size_t(b2)]);
      }
      J = Jm;
      const double r = 1.0 / double(std::int64_t(1) << m);
      best = std::max(best, std::pow(2.0 * r, alpha - 1.0) * h * s);
    }
    out[i] = best;
  });
  return GridFunction(f.domain, std::move(out));
}

// Bilinear fractional integral restricted to standard dyadic scales:
// sum over standard cubes Q containing x of |Q|^(alpha/n - 1) * the
// symmetric integral at radius l(Q).
inline GridFunction bi_fractional_dyadic(const GridFunction& f, const GridFunction& g,
                                         double alpha) {
  const int n = f.domain.dim;
  if (f.domain != g.domain)
    throw std::invalid_argument("bi_fractional_dyadic: domain mismatch");
  if (n != 1) throw std::invalid_argument("bi_fractional_dyadic: implemented for dim 1");
  if (!(alpha > 0.0) || alpha >= 1.0)
    throw std::invalid_argument("bi_fractional_dyadic: need 0 < alpha < n");
  const std::int64_t N = f.domain.cells_per_side();
  const double h = f.domain.cell_width();
  const int L = f.domain.depth;
  std::vector<double> out(f.values.size(), 0.0);
  parallel_for(std::size_t(N), [&](std::size_t i) {
    const std::int64_t ii = std::int64_t(i);
    double acc = 0.0;
    double s = f.values[i] * g.values[i];  // j = 0 term
    std::int64_t J = 0;
    for (int k = L; k >= 0; --k) {
      const std::int64_t Jk = std::int64_t(1) << (L - k);
      for (std::int64_t j = J + 1; j <= Jk; ++j) {
        const std::int64_t a = ii - j, b = ii + j;
        if (a >= 0 && b < N) s += f.values[std::size_t(a)] * g.values[std::size_t(b)];
        const std::int64_t a2 = ii + j, b2 = ii - j;
        if (b2 >= 0 && a2 < N) s += f.values[std::size_t(a2)] * g.values[std::size_t(b2)];
      }
      J = Jk;
      // |Q|^(alpha-1) with |Q| = 2^-k
      acc += std::pow(2.0, double(k) * (1.0 - alpha)) * h * s;
    }
    out[i] = acc;
  });
  return GridFunction(f.domain, std::move(out));
}

// Bilinear counterpart of the linear fractional integral (dim 1, cost N^2
// per point; guarded to small grids).
inline GridFunction i_alpha(const GridFunction& f, const GridFunction& g,
                            double alpha) {
  if (f.domain != g.domain) throw std::invalid_argument("i_alpha: domain mismatch");
  if (f.domain.dim != 1) throw std::invalid_argument("i_alpha: implemented for dim 1");
  if (!(alpha > 0.0) || alpha >= 2.0)
    throw std::invalid_argument("i_alpha: need 0 < alpha < 2n");
  const std::int64_t N = f.domain.cells_per_side();
  if (N > 512) throw std::invalid_argument("i_alpha: grid too large for the N^3 quadrature");
  const double h = f.domain.cell_width();
  std::vector<double> out(f.values.size(), 0.0);
  parallel_for(std::size_t(N), [&](std::size_t i) {
    const std::int64_t ii = std::int64_t(i);
    double acc = 0.0;
    for (std::int64_t j = 0; j < N; ++j) {
      for (std::int64_t k = 0; k < N; ++k) {
        const std::int64_t d2 = (ii - j) * (ii - j) + (ii - k) * (ii - k);
        if (d2 == 0) continue;
        acc += f.values[std::size_t(j)] * g.values[std::size_t(k)] *
               std::pow(double(d2), 0.5 * (alpha - 2.0));
      }
    }
    out[i] = acc * std::pow(h, alpha);
  });
  return GridFunction(f.domain, std::move(out));
}

// ---------------------------------------------------------------------------
// Stopping-time sparse family from level sets of the dilated product
// average P(Q) = avg_{3Q}|f| avg_{3Q}|g| on the standard grid.

struct StoppingResult {
  std::variant<SparseFamily, SparseViolation> outcome;
  double a = 0.0;
  int k_lo = 0, k_hi = 0;
  bool covering_ok = true;  // every positive-product cube sits under its level-class pick
  bool empty = false;       // product vanished identically
  std::vector<Cube> members;          // merged selection, deduped, (level, index)-sorted
  std::vector<int> class_k;           // thresholds with a nonempty selection
  std::vector<SparseFamily> classes;  // per-threshold antichains, individually checked
  bool classes_ok = true;             // every class re-passed the packing check
};

inline StoppingResult stopping_sparse(const GridFunction& f, const GridFunction& g,
                                      double a, const Grid& grid) {
  if (!(a > 1.0)) throw std::invalid_argument("stopping_sparse: need a > 1");
  if (f.domain != g.domain || f.domain != grid.domain)
    throw std::invalid_argument("stopping_sparse: domain mismatch");
  for (double v : f.values)
    if (v < 0.0) throw std::invalid_argument("stopping_sparse: f must be nonnegative");
  for (double v : g.values)
    if (v < 0.0) throw std::invalid_argument("stopping_sparse: g must be nonnegative");

  StoppingResult res;
  res.a = a;

  // product of dilated averages per cube, cubes level-major
  std::vector<std::vector<Cube>> lev(std::size_t(grid.domain.depth) + 1);
  std::vector<std::vector<double>> pval(std::size_t(grid.domain.depth) + 1);
  double pmax = 0.0, pmin = kInf;
  for (int k = 0; k <= grid.domain.depth; ++k) {
    lev[std::size_t(k)] = cells(grid, k);
    pval[std::size_t(k)].reserve(lev[std::size_t(k)].size());
    for (const Cube& q : lev[std::size_t(k)]) {
      const double p = average3(f, q) * average3(g, q);
      pval[std::size_t(k)].push_back(p);
      if (p > 0.0) {
        pmax = std::max(pmax, p);
        pmin = std::min(pmin, p);
      }
    }
  }
  if (pmax == 0.0) {
    res.empty = true;
    res.outcome = SparseFamily{grid, {}, {}, {}, {}, 0.0};
    return res;
  }
  res.k_lo = int(std::floor(std::log(pmin) / std::log(a))) - 1;
  res.k_hi = int(std::ceil(std::log(pmax) / std::log(a))) + 1;

  // index-of-cube lookup within its level vector, for DFS descent
  const auto value_of = [&](const Cube& q) {
    const auto& v = lev[std::size_t(q.level)];
    const auto it = std::lower_bound(
        v.begin(), v.end(), q, [](const Cube& x, const Cube& y) {
          if (x.index[0] != y.index[0]) return x.index[0] < y.index[0];
          return x.index[1] < y.index[1];
        });
    return pval[std::size_t(q.level)][std::size_t(it - v.begin())];
  };

  std::set<std::array<std::int64_t, 3>> seen;  // (level, idx0, idx1)
  std::vector<Cube> members;
  std::vector<std::set<std::array<std::int64_t, 3>>> per_k;
  std::vector<std::vector<Cube>> per_k_cubes;
  for (int k = res.k_lo; k <= res.k_hi; ++k) {
    const double tau = std::pow(a, double(k));
    std::set<std::array<std::int64_t, 3>> chosen;
    std::vector<Cube> picked;
    std::vector<Cube> stack(lev[0].begin(), lev[0].end());
    while (!stack.empty()) {
      const Cube q = stack.back();
      stack.pop_back();
      if (value_of(q) > tau) {
        chosen.insert({q.level, q.index[0], q.index[1]});
        picked.push_back(q);
        if (seen.insert({q.level, q.index[0], q.index[1]}).second)
          members.push_back(q);
      } else {
        for (const Cube& c : q.children()) stack.push_back(c);
      }
    }
    per_k.push_back(std::move(chosen));
    per_k_cubes.push_back(std::move(picked));
  }

  // covering check: each positive-product cube lies inside a cube selected
  // for its own level class
  for (int k = 0; k <= grid.domain.depth && res.covering_ok; ++k) {
    for (std::size_t idx = 0; idx < lev[std::size_t(k)].size(); ++idx) {
      const double p = pval[std::size_t(k)][idx];
      if (p <= 0.0) continue;
      int kq = int(std::floor(std::log(p) / std::log(a)));
      if (std::pow(a, double(kq)) >= p) --kq;  // strictness at lattice points
      kq = std::clamp(kq, res.k_lo, res.k_hi);
      const auto& chosen = per_k[std::size_t(kq - res.k_lo)];
      const Cube& q = lev[std::size_t(k)][idx];
      bool found = false;
      for (int j = k; j >= 0 && !found; --j) {
        const std::int64_t sh = std::int64_t(1) << (k - j);
        found = chosen.count({j, floor_div(q.index[0], sh), floor_div(q.index[1], sh)}) > 0;
      }
      if (!found) {
        res.covering_ok = false;
        break;
      }
    }
  }

  // per-threshold accounting: each class is an antichain of maximal cubes, so
  // it must carry zero packing on its own even when the merged union does not
  for (std::size_t i = 0; i < per_k_cubes.size(); ++i) {
    if (per_k_cubes[i].empty()) continue;
    auto chk = sparse_check(grid, per_k_cubes[i]);
    if (std::holds_alternative<SparseFamily>(chk)) {
      res.class_k.push_back(res.k_lo + int(i));
      res.classes.push_back(std::get<SparseFamily>(std::move(chk)));
    } else {
      res.classes_ok = false;
    }
  }

  std::sort(members.begin(), members.end(), [](const Cube& x, const Cube& y) {
    if (x.level != y.level) return x.level < y.level;
    if (x.index[0] != y.index[0]) return x.index[0] < y.index[0];
    return x.index[1] < y.index[1];
  });
  res.members = members;
  res.outcome = sparse_check(grid, std::move(members));
  return res;
}

// ---------------------------------------------------------------------------
// Weak-type constant of the product maximal operator on seeded probes, and
// the derived default stopping ratio a = max(4 C_w^2, 4).

inline double measure_weak_type_cw(const Domain& dom, const std::vector<Grid>& grids,
                                   std::uint64_t seed, int pairs = 10) {
  double cw = 0.0;
  const double hn = 1.0 / double(dom.total_cells());
  for (int t = 0; t < pairs; ++t) {
    Rng rng(derive_seed(seed, std::uint64_t(t)));
    std::vector<double> fv(dom.total_cells(), 0.0), gv(dom.total_cells(), 0.0);
    const auto block = [&](std::vector<double>& v, double height) {
      const std::int64_t n = dom.total_cells();
      const std::int64_t len = std::max<std::int64_t>(1, n >> rng.uniform_int(1, 4));
      const std::int64_t start = rng.uniform_int(0, n - len);
      for (std::int64_t i = start; i < start + len; ++i) v[std::size_t(i)] = height;
    };
    switch (t % 5) {
      case 0: {  // spike pair at random cells
        fv[std::size_t(rng.uniform_int(0, dom.total_cells() - 1))] = 1.0;
        gv[std::size_t(rng.uniform_int(0, dom.total_cells() - 1))] = 1.0;
        break;
      }
      case 1: {  // indicator against a rough field
        const std::int64_t half = dom.total_cells() / 2;
        const std::int64_t start = rng.uniform_int(0, half);
        for (std::int64_t i = start; i < start + half / 2 + 1; ++i) fv[std::size_t(i)] = 1.0;
        for (auto& x : gv) x = rng.lognormal(0.0, 1.5);
        break;
      }
      case 2: {  // two flat blocks
        block(fv, std::exp(rng.uniform(0.0, 1.5)));
        block(gv, std::exp(rng.uniform(0.0, 1.5)));
        break;
      }
      case 3: {  // spikes against a flat block
        for (int s = 0; s < 3; ++s)
          fv[std::size_t(rng.uniform_int(0, dom.total_cells() - 1))] =
              std::exp(rng.uniform(0.0, 3.0));
        block(gv, 1.0);
        break;
      }
      default: {  // two rough fields
        for (auto& x : fv) x = rng.lognormal(0.0, 1.0);
        for (auto& x : gv) x = rng.lognormal(0.0, 2.0);
        break;
      }
    }
    const GridFunction f(dom, fv), g(dom, gv);
    const double l1 = lp_norm(f, 1.0) * lp_norm(g, 1.0);
    if (l1 == 0.0) continue;
    const GridFunction m = frac_maximal_bilinear(f, g, 0.0, grids);
    std::vector<double> vals(m.values);
    std::sort(vals.begin(), vals.end(), std::greater<>());
    for (std::size_t r = 0; r + 1 < vals.size(); ++r) {
      if (vals[r + 1] == vals[r]) continue;  // lambda between distinct values
      const double lambda = vals[r + 1];
      if (lambda <= 0.0) break;
      const double meas = double(r + 1) * hn;  // cells strictly above lambda
      cw = std::max(cw, lambda * meas * meas / l1);
    }
  }
  return cw;
}

inline double default_stopping_a(const Domain& dom, const std::vector<Grid>& grids,
                                 std::uint64_t seed) {
  const double cw = measure_weak_type_cw(dom, grids, seed);
  return std::max(4.0 * cw * cw, 4.0);
}

}  // namespace orlx
