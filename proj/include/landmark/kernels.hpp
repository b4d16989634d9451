#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

namespace landmark::kernels {

enum class Variant {
  laplacian,     // K(r) = exp(-r)
  c1_bessel,     // K(r) = 2 (1 + r) exp(-r)
  gaussian,      // K(r) = exp(-r^2)
  log_modified,  // K(r) = 1 - r^2 (1 - log r)^c on [0, 1/2], c in (1, 2]
  power_gap,     // K(r) = 1 - D r^gamma while K >= 1/2
  tabulated,     // monotone cubic interpolant of (r, value) samples
  custom,        // caller-supplied eval/deriv (used by tests and tools)
};

struct KernelSpec {
  Variant variant = Variant::laplacian;
  double c = 1.5;      // log_modified
  double D = 1.0;      // power_gap
  double gamma = 2.0;  // power_gap
  std::vector<std::pair<double, double>> samples;  // tabulated (r, value)
};

struct ValidationIssue {
  std::string kind;  // "positivity" | "monotonicity" | "derivative" | "grid"
  double r = 0.0;
  double detail = 0.0;  // offending value or mismatch
};

struct ValidationReport {
  std::vector<ValidationIssue> violations;
  double max_deriv_mismatch = 0.0;  // max relative FD mismatch seen
  bool pass() const { return violations.empty(); }
};

namespace detail {

struct Pchip {
  std::vector<double> r, v, m;  // knots, values, knot slopes

  // Fritsch-Carlson slopes: monotone data yields a monotone interpolant.
  void build() {
    const std::size_t n = r.size();
    m.assign(n, 0.0);
    if (n < 2) return;
    std::vector<double> d(n - 1);
    for (std::size_t i = 0; i + 1 < n; ++i)
      d[i] = (v[i + 1] - v[i]) / (r[i + 1] - r[i]);
    m[0] = d[0];
    m[n - 1] = d[n - 2];
    for (std::size_t i = 1; i + 1 < n; ++i) {
      if (d[i - 1] * d[i] <= 0.0) {
        m[i] = 0.0;
      } else {
        const double w1 = 2.0 * (r[i + 1] - r[i]) + (r[i] - r[i - 1]);
        const double w2 = (r[i + 1] - r[i]) + 2.0 * (r[i] - r[i - 1]);
        m[i] = (w1 + w2) / (w1 / d[i - 1] + w2 / d[i]);
      }
    }
  }

  std::size_t cell(double x) const {
    auto it = std::upper_bound(r.begin(), r.end(), x);
    std::size_t j = static_cast<std::size_t>(it - r.begin());
    if (j == 0) j = 1;
    if (j >= r.size()) j = r.size() - 1;
    return j - 1;
  }

  double eval(double x) const {
    const std::size_t j = cell(x);
    const double h = r[j + 1] - r[j];
    const double t = (x - r[j]) / h;
    const double t2 = t * t, t3 = t2 * t;
    return v[j] * (2 * t3 - 3 * t2 + 1) + h * m[j] * (t3 - 2 * t2 + t) +
           v[j + 1] * (-2 * t3 + 3 * t2) + h * m[j + 1] * (t3 - t2);
  }

  double deriv(double x) const {
    const std::size_t j = cell(x);
    const double h = r[j + 1] - r[j];
    const double t = (x - r[j]) / h;
    const double t2 = t * t;
    return (v[j] * (6 * t2 - 6 * t) + h * m[j] * (3 * t2 - 4 * t + 1) +
            v[j + 1] * (-6 * t2 + 6 * t) + h * m[j + 1] * (3 * t2 - 2 * t)) /
           h;
  }
};

}  // namespace detail

// Radial cometric profile K: [0, inf) -> (0, inf), positive and strictly
// decreasing. deriv() is defined for r > 0; at r = 0 it returns 0 for
// profiles whose induced kernel is C^1 and throws otherwise. gap() computes
// K(0) - K(r) without cancellation near r = 0; its decay rate at zero is
// what the completeness and hitting classifications consume.
class Kernel {
 public:
  double k0() const { return k0_; }
  const std::string& name() const { return name_; }
  const std::string& smoothness_note() const { return note_; }

  // Radii where the profile is less regular than C^2 (piece junctions).
  // Finite-difference validation stays clear of these.
  const std::vector<double>& breakpoints() const { return breakpoints_; }

  double eval(double r) const {
    if (r < 0.0) throw std::domain_error("kernel eval: r < 0");
    switch (variant_) {
      case Variant::laplacian:
        return std::exp(-r);
      case Variant::c1_bessel:
        return 2.0 * (1.0 + r) * std::exp(-r);
      case Variant::gaussian:
        return std::exp(-r * r);
      case Variant::log_modified:
        if (r == 0.0) return 1.0;
        if (r <= 0.5) {
          const double u = 1.0 - std::log(r);
          return 1.0 - r * r * std::pow(u, c_);
        }
        return tail_a_ * std::exp(-tail_b_ * r);
      case Variant::power_gap:
        if (r <= junction_) return 1.0 - D_ * std::pow(r, gamma_);
        return tail_a_ * std::exp(-tail_b_ * r);
      case Variant::tabulated:
        if (r < pchip_.r.front())
          return k0_ - tab_D_ * std::pow(r, tab_gamma_);
        if (r > pchip_.r.back()) return tail_a_ * std::exp(-tail_b_ * r);
        return pchip_.eval(r);
      case Variant::custom:
        return custom_eval_(r);
    }
    return 0.0;
  }

  double deriv(double r) const {
    if (r < 0.0) throw std::domain_error("kernel deriv: r < 0");
    if (r == 0.0) {
      if (!c1_at_zero_)
        throw std::domain_error("kernel deriv undefined at r = 0 for " +
                                name_);
      return 0.0;
    }
    switch (variant_) {
      case Variant::laplacian:
        return -std::exp(-r);
      case Variant::c1_bessel:
        return -2.0 * r * std::exp(-r);
      case Variant::gaussian:
        return -2.0 * r * std::exp(-r * r);
      case Variant::log_modified:
        if (r <= 0.5) {
          const double u = 1.0 - std::log(r);
          return r * std::pow(u, c_ - 1.0) * (c_ - 2.0 * u);
        }
        return -tail_a_ * tail_b_ * std::exp(-tail_b_ * r);
      case Variant::power_gap:
        if (r <= junction_) return -D_ * gamma_ * std::pow(r, gamma_ - 1.0);
        return -tail_a_ * tail_b_ * std::exp(-tail_b_ * r);
      case Variant::tabulated:
        if (r < pchip_.r.front())
          return -tab_D_ * tab_gamma_ * std::pow(r, tab_gamma_ - 1.0);
        if (r > pchip_.r.back())
          return -tail_a_ * tail_b_ * std::exp(-tail_b_ * r);
        return pchip_.deriv(r);
      case Variant::custom:
        return custom_deriv_(r);
    }
    return 0.0;
  }

  // K(0) - K(r), computed in a cancellation-free form per variant.
  double gap(double r) const {
    if (r < 0.0) throw std::domain_error("kernel gap: r < 0");
    if (r == 0.0) return 0.0;
    switch (variant_) {
      case Variant::laplacian:
        return -std::expm1(-r);
      case Variant::gaussian:
        return -std::expm1(-r * r);
      case Variant::c1_bessel: {
        if (r < 0.25) {
          // 2 (1 - (1+r) e^{-r}) = 2 sum_{k>=2} (-1)^k (k-1)/k! r^k
          double term = 0.5 * r * r;  // k = 2
          double sum = term;
          for (int k = 2; k < 40; ++k) {
            term *= -r * k / ((k + 1.0) * (k - 1.0));
            sum += term;
            if (std::abs(term) < 1e-18 * std::abs(sum)) break;
          }
          return 2.0 * sum;
        }
        return 2.0 - eval(r);
      }
      case Variant::log_modified:
        if (r <= 0.5) return r * r * std::pow(1.0 - std::log(r), c_);
        return 1.0 - eval(r);
      case Variant::power_gap:
        if (r <= junction_) return D_ * std::pow(r, gamma_);
        return 1.0 - eval(r);
      case Variant::tabulated:
        if (r < pchip_.r.front()) return tab_D_ * std::pow(r, tab_gamma_);
        return k0_ - eval(r);
      case Variant::custom:
        return custom_gap_ ? custom_gap_(r) : k0_ - custom_eval_(r);
    }
    return 0.0;
  }

  Variant variant() const { return variant_; }

  // Escape hatch for tests and tools: a kernel defined directly by its
  // component maps, bypassing make_kernel validation.
  static Kernel custom_kernel(std::string name, double k0,
                              std::function<double(double)> eval,
                              std::function<double(double)> deriv,
                              std::string note = "custom",
                              std::function<double(double)> gap = nullptr) {
    Kernel k;
    k.variant_ = Variant::custom;
    k.name_ = std::move(name);
    k.k0_ = k0;
    k.custom_eval_ = std::move(eval);
    k.custom_deriv_ = std::move(deriv);
    k.custom_gap_ = std::move(gap);
    k.note_ = std::move(note);
    k.c1_at_zero_ = false;
    return k;
  }

 private:
  friend Kernel make_kernel(const KernelSpec&);

  Variant variant_ = Variant::laplacian;
  std::string name_ = "laplacian";
  std::string note_;
  double k0_ = 1.0;
  bool c1_at_zero_ = false;
  std::vector<double> breakpoints_;

  double c_ = 1.5;                       // log_modified
  double D_ = 1.0, gamma_ = 2.0;         // power_gap
  double junction_ = 0.0;                // piece boundary (power_gap)
  double tail_a_ = 0.0, tail_b_ = 0.0;   // C^1-matched a exp(-b r) tail
  detail::Pchip pchip_;                  // tabulated
  double tab_D_ = 0.0, tab_gamma_ = 0.0; // tabulated gap extrapolation

  std::function<double(double)> custom_eval_, custom_deriv_, custom_gap_;
};

inline double gap(const Kernel& k, double r) { return k.gap(r); }

// Default grid for construction-time validation: r = 0 plus log-spaced
// points on [1e-3, 20]. The cap keeps exp(-r^2) above double underflow.
inline std::vector<double> default_validation_grid() {
  std::vector<double> g;
  g.push_back(0.0);
  const int n = 60;
  const double lo = std::log(1e-3), hi = std::log(20.0);
  for (int i = 0; i <= n; ++i)
    g.push_back(std::exp(lo + (hi - lo) * i / n));
  return g;
}

inline ValidationReport validate(const Kernel& kernel,
                                 const std::vector<double>& grid) {
  if (grid.size() < 3)
    throw std::invalid_argument("validate: grid needs at least 3 points");
  if (!std::is_sorted(grid.begin(), grid.end()) || grid.front() < 0.0)
    throw std::invalid_argument("validate: grid must be sorted, nonnegative");

  ValidationReport rep;
  double prev = std::numeric_limits<double>::infinity();
  for (double r : grid) {
    const double v = kernel.eval(r);
    if (!(v > 0.0)) rep.violations.push_back({"positivity", r, v});
    if (!(v < prev)) rep.violations.push_back({"monotonicity", r, v});
    prev = v;
  }
  if (std::abs(kernel.eval(0.0) - kernel.k0()) != 0.0)
    rep.violations.push_back({"positivity", 0.0, kernel.eval(0.0)});

  for (double r : grid) {
    if (r <= 0.0) continue;
    double d;
    try {
      d = kernel.deriv(r);
    } catch (const std::domain_error&) {
      continue;
    }
    if (!(d < 0.0)) rep.violations.push_back({"derivative", r, d});
    if (r < 1e-2) continue;  // FD check only on the well-scaled range
    const double h = 1e-6 * std::max(r, 1.0);
    bool near_break = false;
    for (double b : kernel.breakpoints())
      if (std::abs(r - b) < 10.0 * h) near_break = true;
    if (near_break) continue;
    const double fd = (kernel.eval(r + h) - kernel.eval(r - h)) / (2.0 * h);
    if (std::abs(d) < 1e-250 && std::abs(fd) < 1e-250) continue;  // underflow
    const double mismatch = std::abs(fd - d) / std::max(std::abs(d), 1e-300);
    rep.max_deriv_mismatch = std::max(rep.max_deriv_mismatch, mismatch);
    if (mismatch > 1e-6) rep.violations.push_back({"derivative", r, mismatch});
  }
  return rep;
}

inline ValidationReport validate(const Kernel& kernel) {
  return validate(kernel, default_validation_grid());
}

namespace detail {

// Fit a exp(-b r) matching value and first derivative at r = rj.
inline std::pair<double, double> exp_tail(double value, double slope,
                                          double rj) {
  if (!(value > 0.0) || !(slope < 0.0))
    throw std::invalid_argument("kernel tail: need value > 0, slope < 0");
  const double b = -slope / value;
  const double a = value * std::exp(b * rj);
  return {a, b};
}

}  // namespace detail

inline Kernel make_kernel(const KernelSpec& spec) {
  Kernel k;
  k.variant_ = spec.variant;
  switch (spec.variant) {
    case Variant::laplacian:
      k.name_ = "laplacian";
      k.k0_ = 1.0;
      k.c1_at_zero_ = false;
      k.note_ = "C0 at collision; smooth on (0, inf)";
      break;
    case Variant::c1_bessel:
      k.name_ = "c1_bessel";
      k.k0_ = 2.0;
      k.c1_at_zero_ = true;
      k.note_ = "C1 at collision; smooth on (0, inf)";
      break;
    case Variant::gaussian:
      k.name_ = "gaussian";
      k.k0_ = 1.0;
      k.c1_at_zero_ = true;
      k.note_ = "smooth everywhere";
      break;
    case Variant::log_modified: {
      if (!(spec.c > 1.0 && spec.c <= 2.0))
        throw std::invalid_argument("log_modified: need c in (1, 2]");
      k.name_ = "log_modified(c=" + std::to_string(spec.c) + ")";
      k.k0_ = 1.0;
      k.c_ = spec.c;
      k.c1_at_zero_ = true;
      const double u = 1.0 - std::log(0.5);
      const double vj = 1.0 - 0.25 * std::pow(u, spec.c);
      const double sj = 0.5 * std::pow(u, spec.c - 1.0) * (spec.c - 2.0 * u);
      std::tie(k.tail_a_, k.tail_b_) = detail::exp_tail(vj, sj, 0.5);
      k.breakpoints_ = {0.5};
      k.note_ = "C1 at collision; exp tail matched C1 at r = 1/2";
      break;
    }
    case Variant::power_gap: {
      if (!(spec.D > 0.0) || !(spec.gamma > 0.0))
        throw std::invalid_argument("power_gap: need D > 0 and gamma > 0");
      k.name_ = "power_gap(D=" + std::to_string(spec.D) +
                ",gamma=" + std::to_string(spec.gamma) + ")";
      k.k0_ = 1.0;
      k.D_ = spec.D;
      k.gamma_ = spec.gamma;
      k.c1_at_zero_ = spec.gamma > 1.0;
      // switch to the exponential tail where K has dropped to 1/2
      k.junction_ = std::pow(0.5 / spec.D, 1.0 / spec.gamma);
      const double sj =
          -spec.D * spec.gamma * std::pow(k.junction_, spec.gamma - 1.0);
      std::tie(k.tail_a_, k.tail_b_) = detail::exp_tail(0.5, sj, k.junction_);
      k.breakpoints_ = {k.junction_};
      k.note_ = spec.gamma > 1.0 ? "C1 at collision" : "C0 at collision";
      break;
    }
    case Variant::tabulated: {
      const auto& s = spec.samples;
      if (s.size() < 3)
        throw std::invalid_argument("tabulated: need at least 3 samples");
      if (s.front().first != 0.0)
        throw std::invalid_argument("tabulated: eval(0) sample missing");
      for (std::size_t i = 1; i < s.size(); ++i) {
        if (!(s[i].first > s[i - 1].first))
          throw std::invalid_argument("tabulated: radii must increase");
        if (!(s[i].second < s[i - 1].second))
          throw std::invalid_argument(
              "tabulated: values must strictly decrease");
      }
      for (const auto& [r, v] : s)
        if (!(v > 0.0))
          throw std::invalid_argument("tabulated: values must be positive");
      k.name_ = "tabulated";
      k.k0_ = s.front().second;
      k.c1_at_zero_ = false;
      // interpolate the positive-radius samples; power-law gap below the
      // smallest positive sample, exp tail above the largest
      for (std::size_t i = 1; i < s.size(); ++i) {
        k.pchip_.r.push_back(s[i].first);
        k.pchip_.v.push_back(s[i].second);
      }
      if (k.pchip_.r.size() < 2)
        throw std::invalid_argument("tabulated: need >= 2 positive radii");
      k.pchip_.build();
      const double g1 = k.k0_ - s[1].second;
      const double g2 = k.k0_ - s[2].second;
      k.tab_gamma_ =
          std::log(g2 / g1) / std::log(s[2].first / s[1].first);
      k.tab_D_ = g1 / std::pow(s[1].first, k.tab_gamma_);
      std::tie(k.tail_a_, k.tail_b_) = detail::exp_tail(
          k.pchip_.v.back(), k.pchip_.deriv(k.pchip_.r.back()),
          k.pchip_.r.back());
      k.breakpoints_ = k.pchip_.r;
      k.note_ = "tabulated; monotone cubic interpolant (heuristic near 0)";
      break;
    }
    case Variant::custom:
      throw std::invalid_argument(
          "make_kernel: custom kernels are built via Kernel::custom_kernel");
  }

  auto rep = validate(k);
  if (!rep.pass())
    throw std::invalid_argument("make_kernel: kernel fails validation (" +
                                rep.violations.front().kind + " at r=" +
                                std::to_string(rep.violations.front().r) +
                                ")");
  return k;
}

// Convenience constructors for the builtin family.
inline Kernel laplacian() { return make_kernel({Variant::laplacian}); }
inline Kernel c1_bessel() { return make_kernel({Variant::c1_bessel}); }
inline Kernel gaussian() { return make_kernel({Variant::gaussian}); }
inline Kernel log_modified(double c) {
  KernelSpec s;
  s.variant = Variant::log_modified;
  s.c = c;
  return make_kernel(s);
}
inline Kernel power_gap(double D, double gamma) {
  KernelSpec s;
  s.variant = Variant::power_gap;
  s.D = D;
  s.gamma = gamma;
  return make_kernel(s);
}

}  // namespace landmark::kernels
