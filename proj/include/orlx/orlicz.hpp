#pragma once

// Localized Luxemburg norms over cubes/boxes of the discretized domain, plus
// the Hölder-type pairings they support. The norm solve is a bracketed
// Illinois iteration on the convex dilation functional; closed-form power
// averages are *not* substituted here, so independent checks against L^p
// averages exercise the solver itself.

#include "orlx/grid.hpp"
#include "orlx/young.hpp"

namespace orlx {

struct LuxemburgOptions {
  double tol_rel = kLuxemburgTolRel;
  int max_iter = 200;
  double warm = 0.0;  // previous norm of a related cube, 0 = none
};

namespace detail {

// Mean of Phi(|f| * mu) over the box, exact cell-overlap weights.
struct DilationFunctional {
  const GridFunction& f;
  const BoxU& box;
  const YoungFunction& phi;
  std::int64_t measure;

  double operator()(double mu) const {
    double acc = 0.0;
    for_each_cell(f.domain, box, [&](std::int64_t idx, std::int64_t w) {
      const double v = std::fabs(f.values[std::size_t(idx)]);
      if (v > 0.0) acc += double(w) * phi.eval(v * mu);
    });
    return acc / double(measure);
  }
};

}  // namespace detail

inline double orlicz_norm_region(const GridFunction& f, const BoxU& box,
                                 const YoungFunction& phi,
                                 const LuxemburgOptions& opts = {}) {
  if (box.empty()) throw std::invalid_argument("orlicz_norm: empty region");
  double maxabs = 0.0;
  for_each_cell(f.domain, box, [&](std::int64_t idx, std::int64_t) {
    maxabs = std::max(maxabs, std::fabs(f.values[std::size_t(idx)]));
  });
  if (maxabs == 0.0) return 0.0;

  detail::DilationFunctional A{f, box, phi, box.measure_units()};

  // Global bracket: at mu_lo the largest cell alone caps the mean at 1/2;
  // at mu_hi the largest cell alone (weight >= 1 unit) pushes it past 2.
  const double mu_lo_global = inverse(phi, 0.5) / maxabs;
  const double mu_hi_global = inverse(phi, 2.0 * double(A.measure)) / maxabs;

  double a = mu_lo_global, b = mu_hi_global;
  double fa = A(a) - 1.0, fb = A(b) - 1.0;
  if (!(fa <= 0.0 && fb >= 0.0))
    throw std::logic_error("orlicz_norm: dilation functional is not monotone on the bracket");

  if (opts.warm > 0.0) {
    const double mu0 = 1.0 / opts.warm;
    const double lo = std::clamp(mu0 * 0.7, a, b);
    const double hi = std::clamp(mu0 * 1.4, a, b);
    if (lo < hi) {
      const double flo = A(lo) - 1.0;
      if (flo >= 0.0) {
        b = lo; fb = flo;
      } else {
        const double fhi = A(hi) - 1.0;
        a = lo; fa = flo;
        if (fhi >= 0.0) { b = hi; fb = fhi; }
      }
    }
  }

  if (fa == 0.0) return 1.0 / a;
  if (fb == 0.0) return 1.0 / b;

  int side = 0;
  for (int it = 0; it < opts.max_iter; ++it) {
    if (b - a <= opts.tol_rel * b) break;
    double x = b - fb * (b - a) / (fb - fa);
    if (!(x > a && x < b)) x = 0.5 * (a + b);
    const double fx = A(x) - 1.0;
    if (std::fabs(fx) <= 1e-13) { a = b = x; break; }
    if (fx < 0.0) {
      a = x; fa = fx;
      if (side == -1) fb *= 0.5;  // Illinois damping
      side = -1;
    } else {
      b = x; fb = fx;
      if (side == +1) fa *= 0.5;
      side = +1;
    }
    if (it + 1 == opts.max_iter)
      throw std::runtime_error("orlicz_norm: solve did not converge");
  }
  return 2.0 / (a + b);
}

inline double orlicz_norm(const GridFunction& f, const Cube& q,
                          const YoungFunction& phi,
                          const LuxemburgOptions& opts = {}) {
  if (f.domain != q.grid.domain)
    throw std::invalid_argument("orlicz_norm: domain mismatch");
  return orlicz_norm_region(f, q.realized(), phi, opts);
}

// Norm of an indicator from the inverse of the conjugate: for |E| subset Q,
// ||chi_E||_{Phibar,Q} = 1 / Phibar^{-1}(|Q|/|E|).
inline double indicator_norm_formula(double frac, const YoungFunction& phibar) {
  if (!(frac > 0.0) || frac > 1.0)
    throw std::invalid_argument("indicator_norm_formula: need frac in (0,1]");
  return 1.0 / inverse(phibar, 1.0 / frac);
}

// ---------------------------------------------------------------------------
// Pairings.

struct HolderPair {
  double lhs = 0.0;  // mean of |f g| over the cube
  double rhs = 0.0;  // 2 ||f||_Phi ||g||_Phibar
  double norm_f = 0.0;
  double norm_g = 0.0;
};

inline HolderPair holder_pair(const GridFunction& f, const GridFunction& g,
                              const Cube& q, const YoungFunction& phi,
                              const YoungFunction* phibar = nullptr) {
  if (f.domain != g.domain || f.domain != q.grid.domain)
    throw std::invalid_argument("holder_pair: domain mismatch");
  const BoxU box = q.realized();
  double acc = 0.0;
  for_each_cell(f.domain, box, [&](std::int64_t idx, std::int64_t w) {
    acc += double(w) *
           std::fabs(f.values[std::size_t(idx)] * g.values[std::size_t(idx)]);
  });
  HolderPair out;
  out.lhs = acc / double(box.measure_units());
  const YoungFunction bar = phibar ? *phibar : conjugate(phi);
  out.norm_f = orlicz_norm_region(f, box, phi);
  out.norm_g = orlicz_norm_region(g, box, bar);
  out.rhs = 2.0 * out.norm_f * out.norm_g;
  return out;
}

// kappa = sup_t Phi^{-1}(t) Psi^{-1}(t) / Theta^{-1}(t) over a log grid;
// finite kappa makes ||fg||_Theta <= 2 kappa ||f||_Phi ||g||_Psi usable.
inline double gen_holder_kappa(const YoungFunction& phi, const YoungFunction& psi,
                               const YoungFunction& theta) {
  double kappa = 0.0;
  const int n = 241;
  for (int i = 0; i < n; ++i) {
    const double t = std::exp(std::log(1e-6) +
                              (std::log(1e6) - std::log(1e-6)) * i / double(n - 1));
    kappa = std::max(kappa, inverse(phi, t) * inverse(psi, t) / inverse(theta, t));
  }
  return kappa;
}

struct GenHolder {
  double lhs = 0.0;    // ||f g||_Theta
  double rhs = 0.0;    // 2 kappa ||f||_Phi ||g||_Psi
  double kappa = 0.0;
};

inline GenHolder gen_holder(const GridFunction& f, const GridFunction& g,
                            const Cube& q, const YoungFunction& phi,
                            const YoungFunction& psi, const YoungFunction& theta,
                            double kappa = 0.0) {
  GenHolder out;
  out.kappa = kappa > 0.0 ? kappa : gen_holder_kappa(phi, psi, theta);
  const GridFunction prod = gf_mul(f, g);
  out.lhs = orlicz_norm(prod, q, theta);
  out.rhs = 2.0 * out.kappa * orlicz_norm(f, q, phi) * orlicz_norm(g, q, psi);
  return out;
}

}  // namespace orlx
