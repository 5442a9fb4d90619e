#include <catch2/catch_amalgamated.hpp>

#include "orlx/orlicz.hpp"

using namespace orlx;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

GridFunction random_gf(const Domain& dom, Rng& rng, double sigma = 1.0) {
  std::vector<double> v(dom.total_cells());
  for (auto& x : v) x = rng.lognormal(0.0, sigma);
  return GridFunction(dom, std::move(v));
}

// Oracle: L^p average over the realized cube by direct weighted summation.
double lp_average(const GridFunction& f, const Cube& q, double p) {
  const BoxU box = q.realized();
  double acc = 0.0;
  for_each_cell(f.domain, box, [&](std::int64_t idx, std::int64_t w) {
    acc += double(w) * std::pow(std::fabs(f.values[std::size_t(idx)]), p);
  });
  return std::pow(acc / double(box.measure_units()), 1.0 / p);
}

std::vector<Cube> some_cubes(const Domain& dom, Rng& rng, int count) {
  std::vector<Cube> out;
  const auto grids = shifted_family(dom);
  while (int(out.size()) < count) {
    const Grid& g = grids[std::size_t(rng.uniform_int(0, std::int64_t(grids.size()) - 1))];
    const int k = int(rng.uniform_int(0, dom.depth));
    const auto all = cells(g, k);
    out.push_back(all[std::size_t(rng.uniform_int(0, std::int64_t(all.size()) - 1))]);
  }
  return out;
}

}  // namespace

TEST_CASE("power norms match L^p cube averages through the generic solver", "[orlicz]") {
  Rng rng(42);
  const Domain dom(1, 7);
  const GridFunction f = random_gf(dom, rng);
  for (double p : {1.5, 2.0, 3.0}) {
    const auto phi = YoungFunction::power(p);
    for (const Cube& q : some_cubes(dom, rng, 60)) {
      const double solver = orlicz_norm(f, q, phi);
      const double oracle = lp_average(f, q, p);
      REQUIRE_THAT(solver, WithinRel(oracle, 1e-9));
    }
  }
  // dim 2 spot check
  const Domain dom2(2, 4);
  const GridFunction f2 = random_gf(dom2, rng);
  for (const Cube& q : some_cubes(dom2, rng, 20))
    REQUIRE_THAT(orlicz_norm(f2, q, YoungFunction::power(2.0)),
                 WithinRel(lp_average(f2, q, 2.0), 1e-9));
}

TEST_CASE("norm of a constant and of zero", "[orlicz]") {
  const Domain dom(1, 5);
  const Grid g = standard_grid(dom);
  const GridFunction c = GridFunction::constant(dom, 4.0);
  // normalized Phi: ||c||_{Phi,Q} = c for every cube
  const auto phi = YoungFunction::log_bump(2.0, 1.0).normalize();
  for (int k = 0; k <= dom.depth; ++k)
    for (const Cube& q : cells(g, k))
      REQUIRE_THAT(orlicz_norm(c, q, phi), WithinRel(4.0, 1e-9));
  // un-normalized: constant / Phi^{-1}(1)
  const auto raw = YoungFunction::log_bump(2.0, 1.0);
  const double expect = 4.0 / inverse(raw, 1.0);
  REQUIRE_THAT(orlicz_norm(c, Cube(g, 0, {0, 0}), raw), WithinRel(expect, 1e-9));

  const GridFunction z = GridFunction::constant(dom, 0.0);
  REQUIRE(orlicz_norm(z, Cube(g, 0, {0, 0}), phi) == 0.0);
}

TEST_CASE("homogeneity and monotonicity of the Luxemburg norm", "[orlicz]") {
  Rng rng(7);
  const Domain dom(1, 6);
  const GridFunction f = random_gf(dom, rng);
  const auto phi = YoungFunction::log_bump(2.0, 0.5);
  const Cube q(standard_grid(dom), 1, {1, 0});
  const double base = orlicz_norm(f, q, phi);
  REQUIRE_THAT(orlicz_norm(gf_scale(f, 3.0), q, phi), WithinRel(3.0 * base, 1e-8));

  // |f| <= |g| pointwise implies the norms are ordered
  const GridFunction g = f.map([](double v) { return v + 0.5; });
  REQUIRE(orlicz_norm(g, q, phi) >= base * (1.0 - 1e-10));

  // growth comparison: Phi <= Psi pointwise on the value range pushes the
  // Psi-norm up (larger Young function, larger norm)
  const auto p15 = YoungFunction::power(1.5);
  const auto p3 = YoungFunction::power(3.0);
  const GridFunction big = f.map([](double v) { return 1.0 + v; });  // values >= 1
  REQUIRE(orlicz_norm(big, q, p3) >= orlicz_norm(big, q, p15) * (1.0 - 1e-9));
}

TEST_CASE("indicator norms match the closed formula", "[orlicz]") {
  const Domain dom(1, 6);
  const Grid g = standard_grid(dom);
  const Cube box(g, 0, {0, 0});
  for (const auto& phibar : {conjugate(YoungFunction::log_bump(2.0, 1.0)),
                             YoungFunction::power(2.0),
                             conjugate(YoungFunction::oscillatory(3.0, 1.0))}) {
    for (int j = 0; j <= dom.depth; ++j) {
      const double frac = 1.0 / double(std::int64_t(1) << j);
      std::vector<double> v(dom.total_cells(), 0.0);
      for (std::int64_t i = 0; i < std::int64_t(double(dom.total_cells()) * frac + 0.5); ++i)
        v[i] = 1.0;
      const GridFunction chi(dom, v);
      const double direct = orlicz_norm(chi, box, phibar);
      const double formula = indicator_norm_formula(frac, phibar);
      REQUIRE_THAT(direct, WithinRel(formula, 1e-8));
    }
  }
  // the power case in closed form: ||chi_E||_{L^p,Q} = frac^(1/p)
  REQUIRE_THAT(indicator_norm_formula(0.25, YoungFunction::power(2.0)),
               WithinRel(0.5, 1e-12));
  REQUIRE_THROWS_AS(indicator_norm_formula(0.0, YoungFunction::power(2.0)),
                    std::invalid_argument);
}

TEST_CASE("Holder pairing: trivial and degenerate cases", "[orlicz]") {
  const Domain dom(1, 5);
  const Grid g = standard_grid(dom);
  const Cube box(g, 0, {0, 0});
  const GridFunction one = GridFunction::constant(dom, 1.0);
  const auto phi = YoungFunction::power(2.0);

  // f = g = 1: lhs 1, norms 1, rhs exactly 2
  const auto hp = holder_pair(one, one, box, phi);
  REQUIRE_THAT(hp.lhs, WithinRel(1.0, 1e-12));
  REQUIRE_THAT(hp.rhs, WithinRel(2.0, 1e-9));

  // g = 0: both sides vanish
  const GridFunction zero = GridFunction::constant(dom, 0.0);
  const auto hz = holder_pair(one, zero, box, phi);
  REQUIRE(hz.lhs == 0.0);
  REQUIRE(hz.rhs == 0.0);
}

TEST_CASE("Holder inequality holds with constant 2 across seeded trials", "[orlicz]") {
  Rng rng(2024);
  const Domain dom(1, 7);
  const auto phis = {YoungFunction::power(2.0), YoungFunction::power(1.5),
                     YoungFunction::log_bump(2.0, 1.0),
                     YoungFunction::oscillatory(3.0, 1.0)};
  for (const auto& phi : phis) {
    const auto bar = conjugate(phi);
    for (int t = 0; t < 40; ++t) {
      Rng local(derive_seed(99, std::uint64_t(t)));
      const GridFunction f = random_gf(dom, local);
      const GridFunction g = random_gf(dom, local);
      for (const Cube& q : some_cubes(dom, local, 5)) {
        const auto hp = holder_pair(f, g, q, phi, &bar);
        REQUIRE(hp.lhs <= hp.rhs * (1.0 + 1e-9));
      }
    }
  }
}

TEST_CASE("generalized Holder: exact power split has kappa 1", "[orlicz]") {
  // Phi = t^2, Psi = t^2, Theta = t: inverses t^(1/2) t^(1/2) / t = 1
  const double kappa = gen_holder_kappa(YoungFunction::power(2.0),
                                        YoungFunction::power(2.0),
                                        YoungFunction::power(1.0 + 1e-12));
  REQUIRE_THAT(kappa, WithinRel(1.0, 1e-6));

  // p-split: 1/p = 1/a + 1/b with powers stays bounded by 1
  const double kappa2 = gen_holder_kappa(YoungFunction::power(3.0),
                                         YoungFunction::power(1.5),
                                         YoungFunction::power(1.0 + 1e-12));
  REQUIRE(kappa2 <= 1.0 + 1e-6);
}

TEST_CASE("generalized Holder inequality on seeded data", "[orlicz]") {
  Rng rng(5150);
  const Domain dom(1, 6);
  const auto phi = YoungFunction::power(4.0);
  const auto psi = YoungFunction::power(4.0);
  const auto theta = YoungFunction::power(2.0);
  const double kappa = gen_holder_kappa(phi, psi, theta);
  for (int t = 0; t < 25; ++t) {
    Rng local(derive_seed(31, std::uint64_t(t)));
    const GridFunction f = random_gf(dom, local);
    const GridFunction g = random_gf(dom, local);
    for (const Cube& q : some_cubes(dom, local, 4)) {
      const auto gh = gen_holder(f, g, q, phi, psi, theta, kappa);
      REQUIRE(gh.lhs <= gh.rhs * (1.0 + 1e-9));
    }
  }
  // a mixed Orlicz triple: Theta(t)=t^2 against two log-bumped squares
  const auto phi2 = YoungFunction::log_bump(4.0, 1.0);
  const auto kappa2 = gen_holder_kappa(phi2, phi2, theta);
  REQUIRE(std::isfinite(kappa2));
  for (int t = 0; t < 10; ++t) {
    Rng local(derive_seed(77, std::uint64_t(t)));
    const GridFunction f = random_gf(dom, local);
    const GridFunction g = random_gf(dom, local);
    const Cube q(standard_grid(dom), 1, {0, 0});
    const auto gh = gen_holder(f, g, q, phi2, phi2, theta, kappa2);
    REQUIRE(gh.lhs <= gh.rhs * (1.0 + 1e-9));
  }
}

TEST_CASE("warm starts do not change the solved norm beyond tolerance", "[orlicz]") {
  Rng rng(808);
  const Domain dom(1, 7);
  const GridFunction f = random_gf(dom, rng);
  const auto phi = YoungFunction::log_bump(2.0, 1.0);
  for (const Cube& q : some_cubes(dom, rng, 30)) {
    const double cold = orlicz_norm(f, q, phi);
    LuxemburgOptions warm;
    warm.warm = cold * 1.07;  // plausible neighbour value
    const double warmed = orlicz_norm(f, q, phi, warm);
    REQUIRE_THAT(warmed, WithinRel(cold, 5e-9));
  }
}
