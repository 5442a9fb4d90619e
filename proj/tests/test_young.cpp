#include <catch2/catch_amalgamated.hpp>

#include "orlx/young.hpp"

using namespace orlx;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

std::vector<double> log_grid(double lo, double hi, int n) {
  std::vector<double> out(n);
  for (int i = 0; i < n; ++i)
    out[i] = std::exp(std::log(lo) + (std::log(hi) - std::log(lo)) * i / double(n - 1));
  return out;
}

std::vector<YoungFunction> catalog() {
  return {
      YoungFunction::power(1.5),
      YoungFunction::power(2.0),
      YoungFunction::power(3.0),
      YoungFunction::log_bump(1.5, 1.0),
      YoungFunction::log_bump(2.0, 1.0),
      YoungFunction::log_bump(2.0, 0.5),
      YoungFunction::log_bump(3.0, 0.7),
      YoungFunction::oscillatory(3.0, 1.0),
      YoungFunction::oscillatory(2.0, 0.5),
      YoungFunction::oscillatory(2.5, 1.2),
      YoungFunction::oscillatory(4.0, 2.9),
      YoungFunction::outer_rescale_any(YoungFunction::log_bump(2.0, 1.0), 0.8),
  };
}

}  // namespace

TEST_CASE("dual exponents", "[young]") {
  REQUIRE(dual_exponent(2.0) == 2.0);
  REQUIRE_THAT(dual_exponent(4.0), WithinRel(4.0 / 3.0, 1e-15));
  REQUIRE(std::isinf(dual_exponent(1.0)));
  REQUIRE(dual_exponent(kInf) == 1.0);
  REQUIRE_THROWS_AS(dual_exponent(0.5), std::invalid_argument);
}

TEST_CASE("evaluation basics and input contracts", "[young]") {
  REQUIRE(YoungFunction::power(2.0).eval(3.0) == 9.0);
  REQUIRE_THAT(YoungFunction::power(1.5).eval(4.0), WithinRel(8.0, 1e-15));

  const auto lb = YoungFunction::log_bump(2.0, 1.0);
  REQUIRE(lb.eval(0.0) == 0.0);
  REQUIRE_THAT(lb.eval(1.0), WithinRel(std::pow(std::log(std::exp(1.0) + 1.0), 2.0), 1e-14));

  const auto osc = YoungFunction::oscillatory(3.0, 1.0);
  REQUIRE(osc.eval(0.0) == 0.0);
  REQUIRE(osc.eval(1.0) == 1.0);  // 1^anything

  REQUIRE_THROWS_AS(lb.eval(-1.0), std::invalid_argument);
  REQUIRE_THROWS_AS(YoungFunction::power(6.0).eval(1e60), std::range_error);

  // parameter domains
  REQUIRE_THROWS_AS(YoungFunction::power(1.0), std::invalid_argument);
  REQUIRE_THROWS_AS(YoungFunction::log_bump(2.0, 0.0), std::invalid_argument);
  REQUIRE_THROWS_AS(YoungFunction::oscillatory(2.0, 1.0), std::invalid_argument);
}

TEST_CASE("normalization pins the value at 1", "[young]") {
  const auto lb = YoungFunction::log_bump(2.0, 1.0).normalize();
  REQUIRE_THAT(lb.eval(1.0), WithinRel(1.0, 1e-15));
  // scaling by a constant preserves monotone/convex structure
  REQUIRE(check_young_invariants(lb).ok);
  // inverse still round-trips through the scaled evaluation
  for (double y : log_grid(1e-3, 1e6, 40))
    REQUIRE_THAT(lb.eval(inverse(lb, y)), WithinRel(y, 1e-8));
}

TEST_CASE("catalog satisfies the Young invariants", "[young]") {
  for (const auto& phi : catalog()) {
    const auto chk = check_young_invariants(phi);
    INFO(phi.describe() << ": " << chk.detail);
    REQUIRE(chk.ok);
  }
}

TEST_CASE("outer rescale algebra", "[young]") {
  // rescaling a power collapses to a power with the lifted exponent
  const auto p8 = YoungFunction::outer_rescale_any(YoungFunction::power(4.0), 0.5);
  REQUIRE(p8.kind() == YoungFunction::Kind::kPower);
  REQUIRE_THAT(p8.param_a(), WithinRel(8.0, 1e-15));
  REQUIRE_THAT(p8.eval(2.0), WithinRel(256.0, 1e-13));

  // nested rescales compose multiplicatively
  const auto lb = YoungFunction::log_bump(2.0, 1.0);
  const auto nested = YoungFunction::outer_rescale_any(
      YoungFunction::outer_rescale_any(lb, 0.5), 0.5);
  REQUIRE(nested.kind() == YoungFunction::Kind::kOuterRescale);
  REQUIRE_THAT(nested.param_a(), WithinRel(0.25, 1e-15));
  for (double t : log_grid(1e-2, 1e2, 21))
    REQUIRE_THAT(nested.eval(t), WithinRel(lb.eval(std::pow(t, 4.0)), 1e-12));

  // public API domain
  REQUIRE_THROWS_AS(rescale_outer(lb, 1.5), std::invalid_argument);
  REQUIRE_THROWS_AS(rescale_outer(lb, 0.0), std::invalid_argument);
  REQUIRE_NOTHROW(rescale_outer(lb, 1.0));
}

TEST_CASE("power conjugates use the dual exponent; conjugation is involutive", "[young]") {
  const auto c3 = conjugate(YoungFunction::power(3.0));
  REQUIRE(c3.kind() == YoungFunction::Kind::kPower);
  REQUIRE_THAT(c3.param_a(), WithinRel(1.5, 1e-15));

  const auto lb = YoungFunction::log_bump(2.0, 1.0);
  const auto back = conjugate(conjugate(lb));
  REQUIRE(back.kind() == YoungFunction::Kind::kLogBump);
  REQUIRE(back.param_a() == lb.param_a());
  REQUIRE(back.param_b() == lb.param_b());
}

TEST_CASE("numeric conjugate matches a brute-force transform", "[young]") {
  const auto lb = YoungFunction::log_bump(2.0, 1.0);
  const auto conj = conjugate(lb);
  const auto ts = log_grid(1e-9, 1e9, 4000);
  for (double s : {1e-4, 1e-2, 0.5, 3.0, 50.0, 1e3, 1e5}) {
    double best = 0.0;
    for (double t : ts) {
      double v;
      try {
        v = s * t - lb.eval(t);
      } catch (const std::range_error&) {
        break;
      }
      best = std::max(best, v);
    }
    REQUIRE_THAT(conj.eval(s), WithinRel(best, 2e-4));
  }
}

TEST_CASE("log-bump conjugate has the dual polynomial order with a negative log correction",
          "[young]") {
  // conj(t^p log^(p-1+delta)) ~ t^p' / log^(1+(p'-1)delta) up to constants:
  // the compensated ratio stays inside a fixed window over four decades.
  const double p = 2.0, delta = 1.0;
  const double pd = dual_exponent(p);
  const auto conj = conjugate(YoungFunction::log_bump(p, delta));
  for (double t : log_grid(10.0, 1e6, 200)) {
    const double comp = conj.eval(t) *
                        std::pow(std::log(std::exp(1.0) + t), 1.0 + (pd - 1.0) * delta) /
                        std::pow(t, pd);
    REQUIRE(comp > 0.3);
    REQUIRE(comp < 1.5);
  }
}

TEST_CASE("Young's inequality with numeric conjugates", "[young]") {
  for (const auto& phi : {YoungFunction::log_bump(2.0, 1.0),
                          YoungFunction::oscillatory(3.0, 1.0)}) {
    const auto bar = conjugate(phi);
    const auto ss = log_grid(1e-3, 1e3, 100);
    for (double s : ss) {
      for (double t : ss) {
        const double lhs = s * t;
        const double rhs = phi.eval(s) + bar.eval(t);
        REQUIRE(lhs <= rhs * (1.0 + 1e-6) + 1e-12);
      }
    }
  }
}

TEST_CASE("inverse duality window", "[young]") {
  // t <= Phi^{-1}(t) Phibar^{-1}(t) <= 2t, with interpolation slack on the
  // upper end for tabulated conjugates.
  for (const auto& phi : {YoungFunction::log_bump(2.0, 1.0),
                          YoungFunction::oscillatory(3.0, 1.0),
                          YoungFunction::oscillatory(2.0, 0.5)}) {
    const auto bar = conjugate(phi);
    for (double t : log_grid(1e-4, 1e4, 300)) {
      const double prod = inverse(phi, t) * inverse(bar, t);
      INFO(phi.describe() << " t=" << t << " prod/t=" << prod / t);
      REQUIRE(prod >= t * (1.0 - 1e-9));
      REQUIRE(prod <= 2.05 * t);
    }
  }
  // exact split for powers: product identically t
  const auto p = YoungFunction::power(3.0);
  const auto pb = conjugate(p);
  for (double t : log_grid(1e-4, 1e4, 50))
    REQUIRE_THAT(inverse(p, t) * inverse(pb, t), WithinRel(t, 1e-12));
}

TEST_CASE("inverse round-trips across variants", "[young]") {
  for (const auto& phi : catalog()) {
    for (double y : log_grid(1e-5, 1e8, 60)) {
      const double t = inverse(phi, y);
      REQUIRE_THAT(phi.eval(t), WithinRel(y, 1e-8));
    }
    REQUIRE(inverse(phi, 0.0) == 0.0);
  }
  const auto conj = conjugate(YoungFunction::log_bump(2.0, 0.5));
  for (double y : log_grid(1e-4, 1e6, 40))
    REQUIRE_THAT(conj.eval(inverse(conj, y)), WithinRel(y, 1e-8));
}

TEST_CASE("growth-condition verdicts: closed forms and comparisons", "[young]") {
  // powers
  REQUIRE(bp_test(YoungFunction::power(1.5), 2.0).verdict == BpVerdict::kIn);
  REQUIRE(bp_test(YoungFunction::power(2.0), 2.0).verdict == BpVerdict::kNotIn);
  REQUIRE(bp_test(YoungFunction::power(2.5), 2.0).verdict == BpVerdict::kNotIn);
  REQUIRE(bp_test(YoungFunction::power(1.5), 2.0).method == "closed-form");

  // log bumps: below, boundary (log exponent can never rescue p == q), above
  REQUIRE(bp_test(YoungFunction::log_bump(1.5, 1.0), 2.0).verdict == BpVerdict::kIn);
  REQUIRE(bp_test(YoungFunction::log_bump(2.0, 0.5), 2.0).verdict == BpVerdict::kNotIn);
  REQUIRE(bp_test(YoungFunction::log_bump(3.0, 0.7), 2.0).verdict == BpVerdict::kNotIn);

  // oscillatory comparisons
  REQUIRE(bp_test(YoungFunction::oscillatory(2.0, 0.5), 3.0).verdict == BpVerdict::kIn);
  REQUIRE(bp_test(YoungFunction::oscillatory(2.0, 0.5), 1.4).verdict == BpVerdict::kNotIn);

  // rescale: change of variables to order q*r
  const auto resc = YoungFunction::outer_rescale_any(YoungFunction::log_bump(2.0, 1.0), 0.8);
  REQUIRE(bp_test(resc, 3.0).verdict == BpVerdict::kIn);      // 2 < 2.4
  REQUIRE(bp_test(resc, 2.5).verdict == BpVerdict::kNotIn);   // 2 = q*r boundary fails
  REQUIRE(bp_test(YoungFunction::outer_rescale_any(YoungFunction::log_bump(2.0, 1.0), 0.2), 4.0)
              .verdict == BpVerdict::kNotIn);  // q*r <= 1

  // conjugate of a log bump: decided by p', boundary rescued by delta > 0
  const auto clb = conjugate(YoungFunction::log_bump(2.0, 1.0));
  REQUIRE(bp_test(clb, 2.0).verdict == BpVerdict::kIn);
  REQUIRE(bp_test(clb, 1.9).verdict == BpVerdict::kNotIn);
  REQUIRE(bp_test(clb, 3.0).verdict == BpVerdict::kIn);

  // conjugate of oscillatory: phase-power comparisons
  const auto cosc = conjugate(YoungFunction::oscillatory(3.0, 1.0));
  REQUIRE(bp_test(cosc, 2.5).verdict == BpVerdict::kIn);   // above (s-a)' = 2
  REQUIRE(bp_test(cosc, 4.0 / 3.0).verdict == BpVerdict::kNotIn);  // at (s+a)'
}

TEST_CASE("numeric growth fallback produces a coherent certificate", "[young]") {
  // in the oscillatory in-between band only the truncated quadrature runs;
  // the verdict must match the fitted exponent against the 0.05 band.
  const auto phi = YoungFunction::oscillatory(2.0, 0.5);
  const auto cert = bp_test(phi, 2.2);
  REQUIRE(cert.method == "numeric");
  REQUIRE(cert.partial_integral > 0.0);
  if (cert.verdict == BpVerdict::kIn) {
    REQUIRE(cert.tail_exponent <= 2.2 - 0.05);
    REQUIRE(cert.tail_bound > 0.0);
  } else if (cert.verdict == BpVerdict::kNotIn) {
    REQUIRE(cert.tail_exponent >= 2.2 + 0.05);
  } else {
    REQUIRE(std::fabs(cert.tail_exponent - 2.2) <= 0.05 + 1e-12);
  }
}

TEST_CASE("a-Young classification", "[young]") {
  REQUIRE(is_a_young(YoungFunction::power(6.0), 2.0));       // t^3
  REQUIRE_FALSE(is_a_young(YoungFunction::power(1.5), 2.0)); // t^0.75 concave
  REQUIRE(is_a_young(YoungFunction::log_bump(3.0, 1.0), 2.0));
  REQUIRE(is_a_young(YoungFunction::oscillatory(3.0, 1.0), 1.0));
  REQUIRE_THROWS_AS(is_a_young(YoungFunction::power(2.0), 0.5), std::invalid_argument);
}

TEST_CASE("JSON descriptors round-trip", "[young]") {
  std::vector<YoungFunction> all = catalog();
  all.push_back(conjugate(YoungFunction::log_bump(2.0, 1.0)));
  all.push_back(YoungFunction::log_bump(2.0, 1.0).normalize());
  for (const auto& phi : all) {
    const auto j = young_to_json(phi);
    const auto back = young_from_json(j);
    REQUIRE(back.describe() == phi.describe());
    for (double t : log_grid(1e-2, 1e2, 9))
      REQUIRE_THAT(back.eval(t), WithinRel(phi.eval(t), 1e-12));
  }
  REQUIRE_THROWS_AS(young_from_json(nlohmann::json{{"variant", "nope"}}),
                    std::invalid_argument);
}
