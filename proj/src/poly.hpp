#pragma once

#include <cmath>
#include <functional>
#include <vector>

namespace cellfree::poly {

/// Dense polynomial, coefficients in ascending powers.
using Coeffs = std::vector<double>;

inline double eval(const Coeffs& c, double x) {
  double v = 0.0;
  for (auto it = c.rbegin(); it != c.rend(); ++it) v = v * x + *it;
  return v;
}

inline Coeffs add(const Coeffs& a, const Coeffs& b) {
  Coeffs r(std::max(a.size(), b.size()), 0.0);
  for (size_t i = 0; i < a.size(); ++i) r[i] += a[i];
  for (size_t i = 0; i < b.size(); ++i) r[i] += b[i];
  return r;
}

inline Coeffs sub(const Coeffs& a, const Coeffs& b) {
  Coeffs r(std::max(a.size(), b.size()), 0.0);
  for (size_t i = 0; i < a.size(); ++i) r[i] += a[i];
  for (size_t i = 0; i < b.size(); ++i) r[i] -= b[i];
  return r;
}

inline Coeffs mul(const Coeffs& a, const Coeffs& b) {
  if (a.empty() || b.empty()) return {};
  Coeffs r(a.size() + b.size() - 1, 0.0);
  for (size_t i = 0; i < a.size(); ++i)
    for (size_t j = 0; j < b.size(); ++j) r[i + j] += a[i] * b[j];
  return r;
}

inline Coeffs scale(const Coeffs& a, double s) {
  Coeffs r = a;
  for (double& v : r) v *= s;
  return r;
}

inline Coeffs derivative(const Coeffs& a) {
  if (a.size() <= 1) return {0.0};
  Coeffs r(a.size() - 1);
  for (size_t i = 1; i < a.size(); ++i) r[i - 1] = a[i] * static_cast<double>(i);
  return r;
}

/// Rational function num/den over one variable.
struct Rational {
  Coeffs num{0.0};
  Coeffs den{1.0};

  double operator()(double x) const { return eval(num, x) / eval(den, x); }
};

inline Rational rat_const(double v) { return {{v}, {1.0}}; }
inline Rational rat_poly(Coeffs c) { return {std::move(c), {1.0}}; }

inline Rational operator+(const Rational& a, const Rational& b) {
  return {add(mul(a.num, b.den), mul(b.num, a.den)), mul(a.den, b.den)};
}
inline Rational operator-(const Rational& a, const Rational& b) {
  return {sub(mul(a.num, b.den), mul(b.num, a.den)), mul(a.den, b.den)};
}
inline Rational operator*(const Rational& a, const Rational& b) {
  return {mul(a.num, b.num), mul(a.den, b.den)};
}
inline Rational operator/(const Rational& a, const Rational& b) {
  return {mul(a.num, b.den), mul(a.den, b.num)};
}
inline Rational reciprocal(const Rational& a) { return {a.den, a.num}; }

/// Numerator polynomial of d/dx (num/den); roots of this polynomial are the
/// stationary points of the rational function.
inline Coeffs stationary_numerator(const Rational& r) {
  return sub(mul(derivative(r.num), r.den), mul(r.num, derivative(r.den)));
}

/// Sign-change bracketing on a uniform scan followed by bisection.
/// Tolerance is absolute, per bracket.
inline std::vector<double> find_roots_bracketed(
    const std::function<double(double)>& f, double lo, double hi,
    int scan_points = 20000, double tol = 1e-10) {
  std::vector<double> roots;
  if (!(hi > lo) || scan_points < 2) return roots;
  const double step = (hi - lo) / scan_points;
  double x0 = lo, f0 = f(x0);
  if (f0 == 0.0) roots.push_back(x0);
  for (int i = 1; i <= scan_points; ++i) {
    const double x1 = lo + i * step;
    const double f1 = f(x1);
    if (std::isfinite(f0) && std::isfinite(f1)) {
      if (f1 == 0.0) {
        roots.push_back(x1);
      } else if (f0 != 0.0 && (f0 < 0.0) != (f1 < 0.0)) {
        double a = x0, b = x1, fa = f0;
        while (b - a > tol) {
          const double m = 0.5 * (a + b);
          const double fm = f(m);
          if (fm == 0.0) {
            a = b = m;
            break;
          }
          if ((fm < 0.0) == (fa < 0.0)) {
            a = m;
            fa = fm;
          } else {
            b = m;
          }
        }
        roots.push_back(0.5 * (a + b));
      }
    }
    x0 = x1;
    f0 = f1;
  }
  return roots;
}

inline std::vector<double> find_roots_bracketed(const Coeffs& c, double lo,
                                                double hi,
                                                int scan_points = 20000,
                                                double tol = 1e-10) {
  return find_roots_bracketed([&c](double x) { return eval(c, x); }, lo, hi,
                              scan_points, tol);
}

/// Golden-section maximization of a unimodal function on [lo, hi].
inline double golden_section_max(const std::function<double(double)>& f,
                                 double lo, double hi, double tol = 1e-9) {
  constexpr double invphi = 0.6180339887498949;
  double a = lo, b = hi;
  double c = b - invphi * (b - a);
  double d = a + invphi * (b - a);
  double fc = f(c), fd = f(d);
  while (b - a > tol * (1.0 + std::abs(a) + std::abs(b))) {
    if (fc > fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - invphi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + invphi * (b - a);
      fd = f(d);
    }
  }
  return 0.5 * (a + b);
}

}  // namespace cellfree::poly
