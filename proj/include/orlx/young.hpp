#pragma once

// Young functions: convex increasing Phi with Phi(0)=0 and Phi(t)/t -> inf,
// closed under outer rescaling and Legendre conjugation. Conjugates of
// non-power variants are tabulated once (log-spaced nodes, monotone cubic
// interpolation in log-log coordinates) and behave like any other variant.

#include <cmath>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "orlx/common.hpp"

namespace orlx {

namespace detail {
inline constexpr double kEE = 15.154262241479262;  // e^e
inline constexpr int kConjNodes = 512;
inline constexpr double kConjSLo = 1e-6;
inline constexpr double kConjSHi = 1e6;

// Monotone cubic (Fritsch-Carlson) data on uniformly spaced x.
struct Pchip {
  std::vector<double> x, y, d;

  void build() {
    const std::size_t m = x.size();
    d.assign(m, 0.0);
    if (m < 2) return;
    std::vector<double> delta(m - 1);
    for (std::size_t i = 0; i + 1 < m; ++i)
      delta[i] = (y[i + 1] - y[i]) / (x[i + 1] - x[i]);
    d[0] = delta[0];
    d[m - 1] = delta[m - 2];
    for (std::size_t i = 1; i + 1 < m; ++i) {
      if (delta[i - 1] * delta[i] <= 0.0)
        d[i] = 0.0;
      else
        d[i] = 2.0 * delta[i - 1] * delta[i] / (delta[i - 1] + delta[i]);
    }
  }

  double eval(double xx) const {
    const std::size_t m = x.size();
    if (xx <= x.front()) return y.front() + d.front() * (xx - x.front());
    if (xx >= x.back()) return y.back() + d.back() * (xx - x.back());
    // uniform spacing: direct segment lookup
    const double step = (x.back() - x.front()) / double(m - 1);
    std::size_t i = std::min<std::size_t>(m - 2, std::size_t((xx - x.front()) / step));
    while (i > 0 && xx < x[i]) --i;
    while (i + 2 < m && xx >= x[i + 1]) ++i;
    const double h = x[i + 1] - x[i];
    const double t = (xx - x[i]) / h;
    const double t2 = t * t, t3 = t2 * t;
    return y[i] * (2 * t3 - 3 * t2 + 1) + h * d[i] * (t3 - 2 * t2 + t) +
           y[i + 1] * (-2 * t3 + 3 * t2) + h * d[i + 1] * (t3 - t2);
  }
};
}  // namespace detail

class YoungFunction;
YoungFunction conjugate(const YoungFunction& phi);
double inverse(const YoungFunction& phi, double y);

class YoungFunction {
 public:
  enum class Kind { kPower, kLogBump, kOscillatory, kOuterRescale, kNumericConjugate };

  Kind kind() const { return kind_; }
  double param_a() const { return a_; }
  double param_b() const { return b_; }
  bool normalized() const { return normalized_; }
  const YoungFunction* base() const { return base_.get(); }

  // --- factories -----------------------------------------------------------

  static YoungFunction power(double p) {
    if (!(p > 1.0) || !std::isfinite(p))
      throw std::invalid_argument("power: need p > 1");
    YoungFunction f;
    f.kind_ = Kind::kPower;
    f.a_ = p;
    return f;
  }

  static YoungFunction log_bump(double p, double delta) {
    if (!(p > 1.0) || !(delta > 0.0))
      throw std::invalid_argument("log_bump: need p > 1 and delta > 0");
    YoungFunction f;
    f.kind_ = Kind::kLogBump;
    f.a_ = p;
    f.b_ = delta;
    return f;
  }

  static YoungFunction oscillatory(double s, double a) {
    if (!(a > 0.0) || !(s - a > 1.0))
      throw std::invalid_argument("oscillatory: need a > 0 and s - a > 1");
    YoungFunction f;
    f.kind_ = Kind::kOscillatory;
    f.a_ = s;
    f.b_ = a;
    return f;
  }

  // t -> base(t^(1/r)), any r > 0 (public API restricts to (0,1]).
  static YoungFunction outer_rescale_any(const YoungFunction& base, double r) {
    if (!(r > 0.0) || !std::isfinite(r))
      throw std::invalid_argument("outer_rescale: need r > 0");
    if (base.kind_ == Kind::kPower)
      return power(base.a_ / r);
    if (base.kind_ == Kind::kOuterRescale)
      return outer_rescale_any(*base.base_, base.a_ * r);
    YoungFunction f;
    f.kind_ = Kind::kOuterRescale;
    f.a_ = r;
    f.base_ = std::make_shared<YoungFunction>(base);
    return f;
  }

  // Luxemburg normalization: divide by the raw value at 1 so eval(1) == 1.
  YoungFunction normalize() const {
    YoungFunction f = *this;
    f.normalized_ = true;
    f.scale_ = raw_eval(1.0);
    if (!(f.scale_ > 0.0) || !std::isfinite(f.scale_))
      throw std::runtime_error("normalize: degenerate value at 1");
    return f;
  }

  // --- evaluation ----------------------------------------------------------

  double eval(double t) const {
    if (!(t >= 0.0) || !std::isfinite(t))
      throw std::invalid_argument("YoungFunction::eval: need finite t >= 0");
    const double v = raw_eval(t) / scale_;
    if (!std::isfinite(v))
      throw std::range_error("YoungFunction::eval: overflow, t out of range");
    return v;
  }

  // Exact power exponent if this function is identically t^q.
  std::optional<double> effective_power() const {
    if (kind_ == Kind::kPower) return a_;
    return std::nullopt;  // rescale factories collapse power bases already
  }

  std::string describe() const {
    std::ostringstream s;
    switch (kind_) {
      case Kind::kPower: s << "power(p=" << a_ << ")"; break;
      case Kind::kLogBump: s << "log_bump(p=" << a_ << ",delta=" << b_ << ")"; break;
      case Kind::kOscillatory: s << "oscillatory(s=" << a_ << ",a=" << b_ << ")"; break;
      case Kind::kOuterRescale:
        s << "outer_rescale(r=" << a_ << "," << base_->describe() << ")";
        break;
      case Kind::kNumericConjugate:
        s << "conjugate(" << base_->describe() << ")";
        break;
    }
    if (normalized_) s << "[normalized]";
    return s.str();
  }

 private:
  friend YoungFunction conjugate(const YoungFunction&);
  friend double inverse(const YoungFunction&, double);

  Kind kind_ = Kind::kPower;
  double a_ = 2.0;  // power p | log-bump p | oscillatory s | rescale r
  double b_ = 0.0;  // log-bump delta | oscillatory a
  std::shared_ptr<const YoungFunction> base_;
  std::shared_ptr<const detail::Pchip> table_;  // numeric conjugate only
  bool normalized_ = false;
  double scale_ = 1.0;

  double raw_eval(double t) const {
    switch (kind_) {
      case Kind::kPower:
        return std::pow(t, a_);
      case Kind::kLogBump:
        return t == 0.0 ? 0.0
                        : std::pow(t, a_) *
                              std::pow(std::log(std::exp(1.0) + t), a_ - 1.0 + b_);
      case Kind::kOscillatory: {
        if (t == 0.0) return 0.0;
        const double e = a_ + b_ * std::sin(std::log(std::log(detail::kEE + t)));
        return std::pow(t, e);
      }
      case Kind::kOuterRescale:
        return base_->eval(std::pow(t, 1.0 / a_));
      case Kind::kNumericConjugate: {
        if (t == 0.0) return 0.0;
        return std::exp(table_->eval(std::log(t)));
      }
    }
    return 0.0;
  }
};

// Public rescale: r restricted to (0,1] (exponent lift t -> base(t^(1/r))).
inline YoungFunction rescale_outer(const YoungFunction& base, double r) {
  if (!(r > 0.0) || r > 1.0)
    throw std::invalid_argument("rescale_outer: need r in (0,1]");
  return YoungFunction::outer_rescale_any(base, r);
}

// ---------------------------------------------------------------------------
// Legendre conjugate. Power conjugates stay in closed form with the dual
// exponent; conjugating a numeric conjugate returns the stored base
// (biconjugation is the identity for closed convex functions); everything
// else gets a tabulated transform.

namespace detail {

// Forward-difference chord slope; increasing in t for convex Phi.
inline double chord_slope(const YoungFunction& phi, double t) {
  const double h = 1e-7;
  return (phi.eval(t * (1.0 + h)) - phi.eval(t)) / (t * h);
}

inline double legendre_value(const YoungFunction& phi, double s, double& t_hint) {
  double lo = std::max(t_hint, 1e-12);
  // grow until the chord slope passes s
  double hi = lo;
  int guard = 0;
  while (chord_slope(phi, hi) < s) {
    lo = hi;
    hi *= 4.0;
    if (++guard > 220 || hi > 1e60)
      throw std::runtime_error("conjugate: maximizer bracket overflow");
  }
  // shrink if we started beyond the crossing
  guard = 0;
  while (chord_slope(phi, lo) >= s && lo > 1e-280) {
    hi = lo;
    lo /= 4.0;
    if (++guard > 300) break;
  }
  for (int it = 0; it < 90; ++it) {
    const double mid = std::sqrt(lo * hi);
    if (chord_slope(phi, mid) < s)
      lo = mid;
    else
      hi = mid;
  }
  const double t = std::sqrt(lo * hi);
  t_hint = t;
  const double v = s * t - phi.eval(t);
  return v;
}

}  // namespace detail

inline YoungFunction conjugate(const YoungFunction& phi) {
  using Kind = YoungFunction::Kind;
  if (auto q = phi.effective_power())
    return YoungFunction::power(dual_exponent(*q));
  if (phi.kind() == Kind::kNumericConjugate) return *phi.base();

  auto table = std::make_shared<detail::Pchip>();
  table->x.resize(detail::kConjNodes);
  table->y.resize(detail::kConjNodes);
  const double xlo = std::log(detail::kConjSLo), xhi = std::log(detail::kConjSHi);
  double t_hint = 1e-12;
  std::vector<double> linear(detail::kConjNodes);
  for (int i = 0; i < detail::kConjNodes; ++i) {
    const double x = xlo + (xhi - xlo) * double(i) / double(detail::kConjNodes - 1);
    const double s = std::exp(x);
    const double v = detail::legendre_value(phi, s, t_hint);
    if (!(v > 0.0) || !std::isfinite(v))
      throw std::runtime_error(
          "conjugate: degenerate transform value; input not usable as a Young function");
    table->x[i] = x;
    table->y[i] = std::log(v);
    linear[i] = v;
  }
  // The transform of any function is convex; reject visible violations,
  // which indicate a non-convex or mis-scaled input.
  for (int i = 1; i + 1 < detail::kConjNodes; ++i) {
    const double s0 = std::exp(table->x[i - 1]), s1 = std::exp(table->x[i]),
                 s2 = std::exp(table->x[i + 1]);
    const double left = (linear[i] - linear[i - 1]) / (s1 - s0);
    const double right = (linear[i + 1] - linear[i]) / (s2 - s1);
    if (right < left * (1.0 - 1e-6))
      throw std::runtime_error("conjugate: non-convex table; input rejected");
  }
  table->build();

  YoungFunction f;
  f.kind_ = Kind::kNumericConjugate;
  f.base_ = std::make_shared<YoungFunction>(phi);
  f.table_ = table;
  return f;
}

// ---------------------------------------------------------------------------
// Generalized inverse: smallest t with Phi(t) >= y. Closed form for powers
// and rescales, monotone bisection otherwise.

inline double inverse(const YoungFunction& phi, double y) {
  using Kind = YoungFunction::Kind;
  if (!(y >= 0.0) || !std::isfinite(y))
    throw std::invalid_argument("inverse: need finite y >= 0");
  if (y == 0.0) return 0.0;
  if (auto q = phi.effective_power()) return std::pow(y, 1.0 / *q);
  if (phi.kind() == Kind::kOuterRescale) {
    // Phi(t) = base(t^(1/r)) / scale
    const double target = y * (phi.normalized() ? phi.scale_ : 1.0);
    return std::pow(inverse(*phi.base(), target), phi.param_a());
  }

  double lo = 0.0, hi = 1.0;
  int guard = 0;
  while (phi.eval(hi) < y) {
    lo = hi;
    hi *= 2.0;
    if (++guard > 1100 || hi > 1e280)
      throw std::range_error("inverse: y beyond representable range");
  }
  if (lo == 0.0) {
    // shrink toward zero so the bracket is tight in relative terms
    double probe = hi / 2.0;
    while (probe > 1e-280 && phi.eval(probe) >= y) {
      hi = probe;
      probe /= 2.0;
    }
    lo = probe;
  }
  for (int it = 0; it < 200 && (hi - lo) > kInverseTolRel * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (phi.eval(mid) < y)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

// ---------------------------------------------------------------------------
// Growth-condition test: does the tail integral of Phi(t) t^(-q) dt/t
// converge? Closed forms and comparison bounds where the variant allows,
// truncated quadrature with a fitted tail exponent otherwise.

enum class BpVerdict { kIn, kNotIn, kInconclusive };

struct BpCertificate {
  BpVerdict verdict = BpVerdict::kInconclusive;
  std::string method;          // "closed-form" | "comparison" | "numeric"
  double partial_integral = 0; // truncated integral (numeric path)
  double tail_exponent = 0;    // fitted local growth exponent of Phi
  double tail_bound = 0;       // bound on the remainder when convergent
  std::string detail;
};

namespace detail {

inline BpCertificate bp_numeric(const YoungFunction& phi, double q) {
  BpCertificate c;
  c.method = "numeric";
  const double truncation = 1e8;
  const double ulo = 0.0, uhi = std::log(truncation);
  const int n = 2400;
  const double du = (uhi - ulo) / n;
  double integral = 0.0;
  std::vector<double> us, logs;
  for (int i = 0; i <= n; ++i) {
    const double u = ulo + du * i;
    const double integrand = phi.eval(std::exp(u)) * std::exp(-q * u);
    integral += integrand * ((i == 0 || i == n) ? 0.5 : 1.0) * du;
    if (i >= n - n / 8) {  // last stretch feeds the tail fit
      us.push_back(u);
      logs.push_back(std::log(std::max(integrand, 1e-300)));
    }
  }
  // least-squares slope of log integrand vs u
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < us.size(); ++i) { mx += us[i]; my += logs[i]; }
  mx /= double(us.size());
  my /= double(us.size());
  double num = 0, den = 0;
  for (std::size_t i = 0; i < us.size(); ++i) {
    num += (us[i] - mx) * (logs[i] - my);
    den += (us[i] - mx) * (us[i] - mx);
  }
  const double sigma = num / den;  // integrand ~ e^(sigma u)
  const double gamma = sigma + q;  // Phi ~ t^gamma locally
  c.partial_integral = integral;
  c.tail_exponent = gamma;
  if (gamma <= q - 0.05) {
    c.verdict = BpVerdict::kIn;
    const double tail_integrand = phi.eval(truncation) * std::pow(truncation, -q);
    c.tail_bound = tail_integrand / (q - gamma);
    c.detail = "fitted tail exponent below q";
  } else if (gamma >= q + 0.05) {
    c.verdict = BpVerdict::kNotIn;
    c.detail = "fitted tail exponent above q";
  } else {
    c.verdict = BpVerdict::kInconclusive;
    c.detail = "fitted tail exponent within the 0.05 band around q";
  }
  return c;
}

}  // namespace detail

inline BpCertificate bp_test(const YoungFunction& phi, double q) {
  using Kind = YoungFunction::Kind;
  if (!(q > 1.0)) throw std::invalid_argument("bp_test: need q > 1");
  BpCertificate c;
  switch (phi.kind()) {
    case Kind::kPower: {
      c.method = "closed-form";
      const double p = phi.param_a();
      if (p < q) {
        c.verdict = BpVerdict::kIn;
        c.tail_bound = 0.0;
        c.detail = "power exponent below q; integral = 1/(q-p) from 1";
        c.partial_integral = 1.0 / (q - p);
      } else {
        c.verdict = BpVerdict::kNotIn;
        c.detail = "power exponent at or above q";
      }
      c.tail_exponent = p;
      return c;
    }
    case Kind::kLogBump: {
      c.method = "closed-form";
      const double p = phi.param_a(), delta = phi.param_b();
      c.tail_exponent = p;
      if (p < q) {
        c.verdict = BpVerdict::kIn;
        c.detail = "polynomial order below q; log factor immaterial";
      } else if (p == q) {
        // integrand ~ log(e+t)^(p-1+delta) / t: converges iff exponent < -1
        const bool conv = (p - 1.0 + delta) < -1.0;
        c.verdict = conv ? BpVerdict::kIn : BpVerdict::kNotIn;
        c.detail = "boundary case decided by the log exponent";
      } else {
        c.verdict = BpVerdict::kNotIn;
        c.detail = "polynomial order above q";
      }
      return c;
    }
    case Kind::kOscillatory: {
      const double s = phi.param_a(), a = phi.param_b();
      if (s + a < q) {
        c.method = "comparison";
        c.verdict = BpVerdict::kIn;
        c.tail_exponent = s + a;
        c.tail_bound = 1.0 / (q - (s + a));
        c.detail = "dominated by the worst-phase power s+a";
        return c;
      }
      if (s - a >= q) {
        c.method = "comparison";
        c.verdict = BpVerdict::kNotIn;
        c.tail_exponent = s - a;
        c.detail = "minorized by the best-phase power s-a";
        return c;
      }
      return detail::bp_numeric(phi, q);
    }
    case Kind::kOuterRescale: {
      // integral of base(t^(1/r)) t^(-q) dt/t = r * integral base(u) u^(-qr) du/u
      const double r = phi.param_a();
      if (q * r <= 1.0) {
        c.method = "closed-form";
        c.verdict = BpVerdict::kNotIn;
        c.detail = "rescaled order q*r at or below 1; tail cannot converge";
        return c;
      }
      BpCertificate inner = bp_test(*phi.base(), q * r);
      inner.detail = "via change of variables to order q*r: " + inner.detail;
      inner.partial_integral *= r;
      inner.tail_bound *= r;
      return inner;
    }
    case Kind::kNumericConjugate: {
      const YoungFunction& b = *phi.base();
      if (b.kind() == Kind::kLogBump) {
        // conjugate ~ t^(p') / log(e+t)^((p'-1)(1+delta)... ) : decided by p'
        const double pd = dual_exponent(b.param_a());
        c.method = "closed-form";
        c.tail_exponent = pd;
        if (q > pd) {
          c.verdict = BpVerdict::kIn;
          c.detail = "conjugate order p' below q";
        } else if (q == pd) {
          // log correction exponent 1 + (p'-1) delta > 1 makes it converge
          c.verdict = (b.param_b() > 0.0) ? BpVerdict::kIn : BpVerdict::kNotIn;
          c.detail = "boundary case decided by the conjugate log correction";
        } else {
          c.verdict = BpVerdict::kNotIn;
          c.detail = "conjugate order p' above q";
        }
        return c;
      }
      if (b.kind() == Kind::kOscillatory) {
        const double s = b.param_a(), a = b.param_b();
        const double hi = dual_exponent(s - a);  // worst-phase conjugate order
        const double lo = dual_exponent(s + a);
        if (q > hi) {
          c.method = "comparison";
          c.verdict = BpVerdict::kIn;
          c.tail_exponent = hi;
          c.detail = "above the worst-phase conjugate order";
          return c;
        }
        if (q <= lo) {
          c.method = "comparison";
          c.verdict = BpVerdict::kNotIn;
          c.tail_exponent = lo;
          c.detail = "at or below the best-phase conjugate order";
          return c;
        }
      }
      return detail::bp_numeric(phi, q);
    }
  }
  return detail::bp_numeric(phi, q);
}

// ---------------------------------------------------------------------------
// a-Young test: is t -> Phi(t^(1/a)) still convex and increasing? Sampled
// on a log grid with the shared convexity slack.

inline bool is_a_young(const YoungFunction& phi, double a) {
  if (!(a >= 1.0)) throw std::invalid_argument("is_a_young: need a >= 1");
  const int n = 400;
  const double xlo = std::log(1e-3), xhi = std::log(1e4);
  std::vector<double> t(n), y(n);
  for (int i = 0; i < n; ++i) {
    t[i] = std::exp(xlo + (xhi - xlo) * i / double(n - 1));
    y[i] = phi.eval(std::pow(t[i], 1.0 / a));
  }
  double prev_slope = -kInf;
  for (int i = 0; i + 1 < n; ++i) {
    if (y[i + 1] < y[i] * (1.0 - 1e-12)) return false;
    const double slope = (y[i + 1] - y[i]) / (t[i + 1] - t[i]);
    const double slack = kEpsConvex * std::max({std::fabs(slope), std::fabs(prev_slope), 1e-300});
    if (slope < prev_slope - slack) return false;
    prev_slope = slope;
  }
  return true;
}

// Full invariant check used by tests and catalog construction.
struct YoungCheck {
  bool ok = true;
  std::string detail;
};

inline YoungCheck check_young_invariants(const YoungFunction& phi) {
  YoungCheck r;
  if (phi.eval(0.0) != 0.0) return {false, "value at 0 is not 0"};
  if (!is_a_young(phi, 1.0)) return {false, "not convex increasing on the sample grid"};
  const double r1 = phi.eval(1e3) / 1e3, r2 = phi.eval(1e6) / 1e6;
  if (!(r2 > 1.5 * r1)) return {false, "no visible superlinear growth"};
  return r;
}

// ---------------------------------------------------------------------------
// JSON descriptors.

inline nlohmann::ordered_json young_to_json(const YoungFunction& phi) {
  using Kind = YoungFunction::Kind;
  nlohmann::ordered_json j;
  switch (phi.kind()) {
    case Kind::kPower:
      j["variant"] = "power";
      j["params"] = {{"p", phi.param_a()}};
      break;
    case Kind::kLogBump:
      j["variant"] = "log_bump";
      j["params"] = {{"p", phi.param_a()}, {"delta", phi.param_b()}};
      break;
    case Kind::kOscillatory:
      j["variant"] = "oscillatory";
      j["params"] = {{"s", phi.param_a()}, {"a", phi.param_b()}};
      break;
    case Kind::kOuterRescale:
      j["variant"] = "outer_rescale";
      j["params"] = {{"r", phi.param_a()}};
      j["base"] = young_to_json(*phi.base());
      break;
    case Kind::kNumericConjugate:
      j["variant"] = "numeric_conjugate";
      j["params"] = nlohmann::json::object();
      j["base"] = young_to_json(*phi.base());
      break;
  }
  if (phi.normalized()) j["normalized"] = true;
  return j;
}

inline YoungFunction young_from_json(const nlohmann::json& j) {
  const std::string variant = j.at("variant").get<std::string>();
  YoungFunction f = [&]() {
    if (variant == "power")
      return YoungFunction::power(j.at("params").at("p").get<double>());
    if (variant == "log_bump")
      return YoungFunction::log_bump(j.at("params").at("p").get<double>(),
                                     j.at("params").at("delta").get<double>());
    if (variant == "oscillatory")
      return YoungFunction::oscillatory(j.at("params").at("s").get<double>(),
                                        j.at("params").at("a").get<double>());
    if (variant == "outer_rescale")
      return YoungFunction::outer_rescale_any(young_from_json(j.at("base")),
                                              j.at("params").at("r").get<double>());
    if (variant == "numeric_conjugate")
      return conjugate(young_from_json(j.at("base")));
    throw std::invalid_argument("young_from_json: unknown variant " + variant);
  }();
  if (j.value("normalized", false)) f = f.normalize();
  return f;
}

}  // namespace orlx
