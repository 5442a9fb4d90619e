#pragma once

// Weight-class characteristics measured by exhaustive deterministic sweeps
// over cube families, plus generators for structured weights. Essential
// suprema/infima over a cube run over every sample cell meeting its realized
// box with positive measure.

#include "orlx/operators.hpp"

namespace orlx {

struct WeightReport {
  std::string kind;
  double value = 0.0;
  Cube attained;
};

inline nlohmann::ordered_json weight_report_to_json(const WeightReport& r) {
  nlohmann::ordered_json j;
  j["kind"] = r.kind;
  j["value"] = r.value;
  j["cube"] = cube_to_json(r.attained);
  return j;
}

namespace detail {

inline void require_positive(const GridFunction& w, const char* who) {
  for (double v : w.values)
    if (!(v > 0.0)) throw std::invalid_argument(std::string(who) + ": weight must be positive");
}

// Deterministic sweep: grids in the given order, levels ascending, indices
// ascending; strict improvement updates, so the first attaining cube wins.
template <class CubeFn>
WeightReport sweep_max(const std::vector<Grid>& grids, const std::string& kind,
                       CubeFn&& fn) {
  if (grids.empty()) throw std::invalid_argument("weight sweep: empty grid family");
  WeightReport rep;
  rep.kind = kind;
  rep.value = -kInf;
  bool first = true;
  for (const Grid& g : grids) {
    for (int k = 0; k <= g.domain.depth; ++k) {
      for (const Cube& q : cells(g, k)) {
        const double v = fn(q);
        if (first || v > rep.value) {
          rep.value = v;
          rep.attained = q;
          first = false;
        }
      }
    }
  }
  return rep;
}

inline double cell_min_over(const GridFunction& w, const BoxU& box) {
  double m = kInf;
  for_each_cell(w.domain, box, [&](std::int64_t idx, std::int64_t) {
    m = std::min(m, w.values[std::size_t(idx)]);
  });
  return m;
}

inline double cell_max_over(const GridFunction& w, const BoxU& box) {
  double m = -kInf;
  for_each_cell(w.domain, box, [&](std::int64_t idx, std::int64_t) {
    m = std::max(m, w.values[std::size_t(idx)]);
  });
  return m;
}

}  // namespace detail

// [w]_{A_p} = sup_Q avg_Q(w) (avg_Q w^(1-p'))^(p-1), p in (1, inf).
inline WeightReport ap_characteristic(const GridFunction& w, double p,
                                      const std::vector<Grid>& grids) {
  if (!(p > 1.0) || !std::isfinite(p))
    throw std::invalid_argument("ap_characteristic: need 1 < p < inf");
  detail::require_positive(w, "ap_characteristic");
  const double pp = dual_exponent(p);
  const GridFunction sigma = gf_pow(w, 1.0 - pp);
  return detail::sweep_max(grids, "ap", [&](const Cube& q) {
    const BoxU box = q.realized();
    return w.average_over(box) * std::pow(sigma.average_over(box), p - 1.0);
  });
}

// [w]_{A_1} = sup_Q avg_Q(w) esssup_Q(1/w).
inline WeightReport a1_characteristic(const GridFunction& w,
                                      const std::vector<Grid>& grids) {
  detail::require_positive(w, "a1_characteristic");
  return detail::sweep_max(grids, "a1", [&](const Cube& q) {
    const BoxU box = q.realized();
    return w.average_over(box) / detail::cell_min_over(w, box);
  });
}

// [w]_{RH_s} = sup_Q (avg_Q w^s)^(1/s) / avg_Q w, s in (1, inf).
inline WeightReport rhs_characteristic(const GridFunction& w, double s,
                                       const std::vector<Grid>& grids) {
  if (!(s > 1.0) || !std::isfinite(s))
    throw std::invalid_argument("rhs_characteristic: need 1 < s < inf");
  detail::require_positive(w, "rhs_characteristic");
  const GridFunction ws = gf_pow(w, s);
  return detail::sweep_max(grids, "rh_s", [&](const Cube& q) {
    const BoxU box = q.realized();
    return std::pow(ws.average_over(box), 1.0 / s) / w.average_over(box);
  });
}

// [w]_{RH_inf} = sup_Q esssup_Q(w) / avg_Q(w).
inline WeightReport rhinf_characteristic(const GridFunction& w,
                                         const std::vector<Grid>& grids) {
  detail::require_positive(w, "rhinf_characteristic");
  return detail::sweep_max(grids, "rh_inf", [&](const Cube& q) {
    const BoxU box = q.realized();
    return detail::cell_max_over(w, box) / w.average_over(box);
  });
}

// RH_Psi characteristic sup_Q ||w||_{Psi,Q} / avg_Q(w), via the generic
// Luxemburg solver with parent-level warm starts. Power Psi agrees with
// rhs_characteristic (pinned by tests); no closed-form shortcut is taken.
inline WeightReport rhpsi_characteristic(const GridFunction& w, const YoungFunction& psi,
                                         const std::vector<Grid>& grids) {
  detail::require_positive(w, "rhpsi_characteristic");
  if (grids.empty()) throw std::invalid_argument("rhpsi_characteristic: empty grid family");
  WeightReport rep;
  rep.kind = "rh_psi";
  rep.value = -kInf;
  bool first = true;
  for (const Grid& g : grids) {
    std::vector<double> prev(w.values.size(), 0.0), cur(w.values.size(), 0.0);
    for (int k = 0; k <= g.domain.depth; ++k) {
      for (const Cube& q : cells(g, k)) {
        const BoxU box = q.realized();
        const auto range = detail::center_cells(box);
        LuxemburgOptions opts;
        if (k > 0 && !range.empty(w.domain.dim)) {
          const std::int64_t firstc =
              w.domain.dim == 1 ? range.lo[0]
                                : range.lo[0] * w.domain.cells_per_side() + range.lo[1];
          opts.warm = prev[std::size_t(firstc)];
        }
        const double norm = orlicz_norm_region(w, box, psi, opts);
        detail::for_center_cells(w.domain, range,
                                 [&](std::int64_t c) { cur[std::size_t(c)] = norm; });
        const double v = norm / w.average_over(box);
        if (first || v > rep.value) {
          rep.value = v;
          rep.attained = q;
          first = false;
        }
      }
      std::swap(prev, cur);
    }
  }
  return rep;
}

// Fractional-set condition: beta(alpha) = sup_Q max { w(E)/w(Q) : E subset of
// Q, |E| = alpha |Q| }. The inner max is attained by filling cells in
// descending value order (ties by cell index), taking a fraction of the last.
inline WeightReport ainfty_characteristic(const GridFunction& w, double alpha,
                                          const std::vector<Grid>& grids) {
  if (!(alpha > 0.0) || alpha > 1.0)
    throw std::invalid_argument("ainfty_characteristic: need 0 < alpha <= 1");
  detail::require_positive(w, "ainfty_characteristic");
  return detail::sweep_max(grids, "ainfty", [&](const Cube& q) {
    const BoxU box = q.realized();
    struct Piece {
      double val;
      std::int64_t idx, units;
    };
    std::vector<Piece> pieces;
    double total = 0.0;
    for_each_cell(w.domain, box, [&](std::int64_t idx, std::int64_t u) {
      pieces.push_back({w.values[std::size_t(idx)], idx, u});
      total += double(u) * w.values[std::size_t(idx)];
    });
    std::sort(pieces.begin(), pieces.end(), [](const Piece& a, const Piece& b) {
      if (a.val != b.val) return a.val > b.val;
      return a.idx < b.idx;
    });
    double budget = alpha * double(box.measure_units());
    double mass = 0.0;
    for (const Piece& pc : pieces) {
      const double take = std::min(budget, double(pc.units));
      mass += take * pc.val;
      budget -= take;
      if (budget <= 0.0) break;
    }
    return mass / total;
  });
}

// (M f)^r with r in (0,1) is a canonical A_1 weight; floored away from zero.
inline GridFunction gen_a1(const GridFunction& f, double r,
                           const std::vector<Grid>& grids) {
  if (!(r > 0.0) || r >= 1.0) throw std::invalid_argument("gen_a1: need 0 < r < 1");
  return gf_floor(gf_pow(maximal(f, grids), r));
}

// The dual weight w^(1-p'), floored: for w in A_1 it lands in RH_inf
// intersected with A_p.
inline GridFunction gen_rhinf_ap_pair(const GridFunction& w, double p) {
  if (!(p > 1.0) || !std::isfinite(p))
    throw std::invalid_argument("gen_rhinf_ap_pair: need 1 < p < inf");
  detail::require_positive(w, "gen_rhinf_ap_pair");
  return gf_floor(gf_pow(w, 1.0 - dual_exponent(p)));
}

}  // namespace orlx
