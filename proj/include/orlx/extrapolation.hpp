#pragma once

// Exponent calculus, operator-norm estimation on probe sets, the iteration
// R h = sum_k M_Phi^k h / (2 opnorm)^k with measured properties, and the two
// auxiliary majorant constructions used to move an inequality between
// Lebesgue exponents.

#include "orlx/weights.hpp"

namespace orlx {

inline constexpr int kDefaultIterationDepth = 40;
inline constexpr double kSafetyFactor = 2.0;

// ---------------------------------------------------------------------------
// Exponent calculus. r = (q0/p0)'/(q0/p)', 1/s = 1/r - p0/p. At p = q0 the
// dual in the denominator is infinite, so r = 0 and s = 0: the endpoint
// regime. b_rescale = r/s and c_rescale = r p0/p are the outer-rescale
// parameters for B(t) = Psi(t^s) = Psi0(t^(s/r)) and C(t) = Psi(t^(p/p0)).

struct ExponentTriple {
  double p0 = 1.0, q0 = 2.0, p = 1.5;
  double r = 1.0, s = kInf;

  ExponentTriple(double p0_, double q0_, double p_) : p0(p0_), q0(q0_), p(p_) {
    if (!(p0 > 0.0) || !(q0 > p0) || !std::isfinite(q0))
      throw std::invalid_argument("ExponentTriple: need 0 < p0 < q0 < inf");
    if (!(p >= p0) || !(p <= q0))
      throw std::invalid_argument("ExponentTriple: need p0 <= p <= q0");
    // cancelled forms of (q0/p0)'/(q0/p)' and (1/r - p0/p)^-1
    r = (q0 - p) / (q0 - p0);
    s = p == p0 ? kInf : p * (q0 - p) / (q0 * (p - p0));
  }

  bool endpoint() const { return r == 0.0; }

  double b_rescale() const { return 1.0 - r * p0 / p; }  // = r/s, 1 at endpoint
  double c_rescale() const { return r * p0 / p; }

  double pp0_dual() const { return dual_exponent(p / p0); }    // (p/p0)'
  double q0p_dual() const { return dual_exponent(q0 / p); }    // (q0/p)'
  double q0p0_dual() const { return dual_exponent(q0 / p0); }  // (q0/p0)'
};

inline ExponentTriple exponents(double p0, double q0, double p) {
  return ExponentTriple(p0, q0, p);
}

// ---------------------------------------------------------------------------
// Operator-norm estimation for M_Phi on L^q: safety_factor times the largest
// ratio ||M_Phi f||_q / ||f||_q over the probe set. Requires a positive
// integrability certificate for Phi at q.

inline std::vector<GridFunction> default_probe_set(const Domain& dom,
                                                   std::uint64_t seed) {
  std::vector<GridFunction> probes;
  const std::int64_t n = dom.total_cells();
  {  // half-domain indicator
    std::vector<double> v(std::size_t(n), 0.0);
    for (std::int64_t i = 0; i < n / 2; ++i) v[std::size_t(i)] = 1.0;
    probes.emplace_back(dom, std::move(v));
  }
  {  // narrow block at a seeded offset
    Rng rng(derive_seed(seed, 1));
    std::vector<double> v(std::size_t(n), 0.0);
    const std::int64_t len = std::max<std::int64_t>(1, n / 16);
    const std::int64_t at = rng.uniform_int(0, n - len);
    for (std::int64_t i = at; i < at + len; ++i) v[std::size_t(i)] = 1.0;
    probes.emplace_back(dom, std::move(v));
  }
  {  // spike at cell 0 and at a seeded cell
    std::vector<double> v(std::size_t(n), 0.0);
    v[0] = 1.0;
    probes.emplace_back(dom, v);
    Rng rng(derive_seed(seed, 2));
    std::fill(v.begin(), v.end(), 0.0);
    v[std::size_t(rng.uniform_int(0, n - 1))] = 1.0;
    probes.emplace_back(dom, std::move(v));
  }
  for (double sigma : {1.0, 2.0}) {  // rough fields
    Rng rng(derive_seed(seed, sigma == 1.0 ? 3 : 4));
    std::vector<double> v(std::size_t(n), 0.0);
    for (auto& x : v) x = rng.lognormal(0.0, sigma);
    probes.emplace_back(dom, std::move(v));
  }
  return probes;
}

inline double estimate_opnorm(const YoungFunction& phi, double q,
                              const std::vector<GridFunction>& probes,
                              const std::vector<Grid>& grids,
                              double safety_factor = kSafetyFactor) {
  if (!(q > 1.0) || !std::isfinite(q))
    throw std::invalid_argument("estimate_opnorm: need 1 < q < inf");
  if (probes.empty()) throw std::invalid_argument("estimate_opnorm: no probes");
  const BpCertificate cert = bp_test(phi, q);
  if (cert.verdict != BpVerdict::kIn)
    throw std::invalid_argument("estimate_opnorm: no integrability certificate at q (" +
                                cert.detail + ")");
  double worst = 0.0;
  for (const GridFunction& f : probes) {
    const double nf = lp_norm(f, q);
    if (nf == 0.0) continue;
    worst = std::max(worst, lp_norm(orlicz_maximal(f, phi, grids), q) / nf);
  }
  if (worst == 0.0) throw std::invalid_argument("estimate_opnorm: all probes vanish");
  return safety_factor * worst;
}

// ---------------------------------------------------------------------------
// The iteration. Term k is M_Phi applied to term k-1 over 2*opnorm, starting
// from |h|; properties are measured, not assumed:
//   (a) max |h|/Rh           (<= 1, exact by construction)
//   (b) ||Rh||_q / ||h||_q   (expected <= 2 up to truncation slack)
//   (c) max M_Phi(Rh)/Rh     (expected <= 2*opnorm up to truncation slack)
//   (d) sup_Q ||Rh||_{Phi,Q} / avg_Q Rh  (finite; dominated by (c))

struct IterationResult {
  GridFunction rh;
  int depth = 0;
  double q = 0.0;
  double opnorm = 0.0;
  double tail_bound = 0.0;     // 2^-K ||h||_q
  double snapshot_gap = 0.0;   // ||Rh - Rh_(K=20)||_q, 0 when K <= 20
  double prop_a = 0.0;
  double prop_b = 0.0;
  double prop_c = 0.0;
  double prop_c_bound = 0.0;   // 2*opnorm
  double prop_d = 0.0;
  Cube prop_d_cube;
};

inline nlohmann::ordered_json iteration_result_to_json(const IterationResult& r) {
  nlohmann::ordered_json j;
  j["depth"] = r.depth;
  j["q"] = r.q;
  j["opnorm"] = r.opnorm;
  j["tail_bound"] = r.tail_bound;
  j["snapshot_gap"] = r.snapshot_gap;
  j["prop_a"] = r.prop_a;
  j["prop_b"] = r.prop_b;
  j["prop_c"] = r.prop_c;
  j["prop_c_bound"] = r.prop_c_bound;
  j["prop_d"] = r.prop_d;
  j["prop_d_cube"] = cube_to_json(r.prop_d_cube);
  return j;
}

inline IterationResult rubio_iterate(const GridFunction& h, const YoungFunction& phi,
                                     double q, int depth, double opnorm,
                                     const std::vector<Grid>& grids) {
  if (depth < 0) throw std::invalid_argument("rubio_iterate: negative depth");
  if (!(opnorm > 0.0) || !std::isfinite(opnorm))
    throw std::invalid_argument("rubio_iterate: bad operator-norm bound");
  if (!(q > 0.0)) throw std::invalid_argument("rubio_iterate: need q > 0");

  IterationResult res;
  res.depth = depth;
  res.q = q;
  res.opnorm = opnorm;
  res.prop_c_bound = 2.0 * opnorm;

  const GridFunction ah = gf_abs(h);
  std::vector<double> acc = ah.values;
  GridFunction term = ah;
  std::vector<double> at20;
  if (depth <= 20) at20 = acc;
  for (int k = 1; k <= depth; ++k) {
    term = gf_scale(orlicz_maximal(term, phi, grids), 1.0 / (2.0 * opnorm));
    for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += term.values[i];
    if (k == 20) at20 = acc;
  }
  res.rh = GridFunction(h.domain, std::move(acc));

  const double hq = lp_norm(ah, q);
  res.tail_bound = std::ldexp(hq, -depth);
  if (depth > 20) {
    std::vector<double> gap(res.rh.values.size());
    for (std::size_t i = 0; i < gap.size(); ++i) gap[i] = res.rh.values[i] - at20[i];
    res.snapshot_gap = lp_norm(GridFunction(h.domain, std::move(gap)), q);
  }

  double a = 0.0;
  for (std::size_t i = 0; i < ah.values.size(); ++i)
    if (res.rh.values[i] > 0.0) a = std::max(a, ah.values[i] / res.rh.values[i]);
  res.prop_a = a;
  res.prop_b = hq > 0.0 ? lp_norm(res.rh, q) / hq : 0.0;

  const GridFunction mrh = orlicz_maximal(res.rh, phi, grids);
  double c = 0.0;
  for (std::size_t i = 0; i < mrh.values.size(); ++i)
    if (res.rh.values[i] > 0.0) c = std::max(c, mrh.values[i] / res.rh.values[i]);
  res.prop_c = c;

  if (lp_norm(res.rh, 1.0) > 0.0) {
    const auto rep = rhpsi_characteristic(gf_floor(res.rh), phi, grids);
    res.prop_d = rep.value;
    res.prop_d_cube = rep.attained;
  }
  return res;
}

inline IterationResult rubio_iterate(const GridFunction& h, const YoungFunction& phi,
                                     double q, int depth, double opnorm) {
  return rubio_iterate(h, phi, q, depth, opnorm,
                       std::vector<Grid>{standard_grid(h.domain)});
}

// ---------------------------------------------------------------------------
// Majorant for the main exponent range p0 < p < q0: H = R h built from M_B
// on L^((p/p0)'), where B and C are outer rescalings of Psi0 satisfying
// C^{-1} B^{-1} = Psi0^{-1}. The chain
//   ||H w^(p0/p)||_{Psi0,Q} <= 2 kappa ||H||_{B,Q} ||w^(p0/p)||_{C,Q}
// is measured on every cube of the first grid in the family.

struct BuildHResult {
  GridFunction H;
  IterationResult iteration;
  YoungFunction psi, B, C;
  double kappa = 0.0;
  double prop_a = 0.0;    // max h/H
  double prop_b = 0.0;    // ||H||_(p/p0)' / ||h||
  double rh_value = 0.0;  // characteristic of H w^(p0/p) against Psi0
  Cube rh_cube;
  double chain_max = 0.0;  // max over cubes of lhs / (2 kappa rhs)
};

inline BuildHResult build_H(const GridFunction& h, const GridFunction& w,
                            const ExponentTriple& t, const YoungFunction& psi0,
                            const std::vector<Grid>& grids, int depth = kDefaultIterationDepth,
                            std::uint64_t seed = 1) {
  if (!(t.p > t.p0) || !(t.p < t.q0))
    throw std::invalid_argument("build_H: need p0 < p < q0");
  if (h.domain != w.domain) throw std::invalid_argument("build_H: domain mismatch");
  detail::require_positive(w, "build_H");

  BuildHResult res;
  res.psi = rescale_outer(psi0, t.r);
  res.B = rescale_outer(psi0, t.b_rescale());
  res.C = rescale_outer(psi0, t.c_rescale());
  if (!is_a_young(res.B, 1.0))
    throw std::logic_error("build_H: constructed B failed the convexity check");
  res.kappa = gen_holder_kappa(res.B, res.C, psi0);

  const double qd = t.pp0_dual();
  const double opnorm =
      estimate_opnorm(res.B, qd, default_probe_set(h.domain, seed), grids);
  res.iteration = rubio_iterate(h, res.B, qd, depth, opnorm, grids);
  res.H = res.iteration.rh;
  res.prop_a = res.iteration.prop_a;
  res.prop_b = res.iteration.prop_b;

  const GridFunction wp = gf_pow(w, t.p0 / t.p);
  const GridFunction hw = gf_mul(res.H, wp);
  const auto rep = rhpsi_characteristic(gf_floor(hw), psi0, grids);
  res.rh_value = rep.value;
  res.rh_cube = rep.attained;

  double worst = 0.0;
  const Grid& g0 = grids.empty() ? standard_grid(h.domain) : grids.front();
  for (int k = 0; k <= g0.domain.depth; ++k) {
    for (const Cube& qq : cells(g0, k)) {
      const BoxU box = qq.realized();
      const double lhs = orlicz_norm_region(hw, box, psi0);
      const double rhs = 2.0 * res.kappa * orlicz_norm_region(res.H, box, res.B) *
                         orlicz_norm_region(wp, box, res.C);
      if (rhs > 0.0) worst = std::max(worst, lhs / rhs);
    }
  }
  res.chain_max = worst;
  return res;
}

// ---------------------------------------------------------------------------
// Majorant for 0 < p < p0: H = M(|g|^(1/rr))^(p rr/(p0/p)'), whose negative
// power -p0/p has a finite essential-sup reverse Holder characteristic.

struct SmallPResult {
  GridFunction H;
  double exponent = 0.0;    // p rr / (p0/p)'
  double rhinf_neg = 0.0;   // RH_inf characteristic of H^(-p0/p)
  Cube rhinf_cube;
};

inline SmallPResult build_H_small_p(const GridFunction& g, double p, double p0,
                                    double rr, const std::vector<Grid>& grids) {
  if (!(p > 0.0) || !(p < p0))
    throw std::invalid_argument("build_H_small_p: need 0 < p < p0");
  if (!(rr > 1.0 / p))
    throw std::invalid_argument("build_H_small_p: need rr > 1/p");
  SmallPResult res;
  res.exponent = p * rr / dual_exponent(p0 / p);
  const GridFunction base = maximal(gf_pow(gf_abs(g), 1.0 / rr), grids);
  res.H = gf_floor(gf_pow(base, res.exponent));
  const auto rep = rhinf_characteristic(gf_pow(res.H, -p0 / p), grids);
  res.rhinf_neg = rep.value;
  res.rhinf_cube = rep.attained;
  return res;
}

}  // namespace orlx
