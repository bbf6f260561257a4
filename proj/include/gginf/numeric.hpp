#pragma once

#include <cmath>
#include <functional>
#include <string>

#include "gginf/error.hpp"

namespace gginf {

// Neumaier's variant of compensated summation. Also correct when a term is
// larger in magnitude than the running sum.
class KahanSum {
 public:
  KahanSum& operator+=(double x) noexcept {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x))
      comp_ += (sum_ - t) + x;
    else
      comp_ += (x - t) + sum_;
    sum_ = t;
    return *this;
  }
  KahanSum& operator-=(double x) noexcept { return *this += -x; }
  double value() const noexcept { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

namespace detail {

template <class F>
double simpson_step(const F& f, double a, double fa, double b, double fb, double m, double fm,
                    double whole, double tol, int depth, int& evals) {
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  evals += 2;
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (std::abs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
  if (depth <= 0)
    throw RuntimeError("adaptive Simpson did not reach tolerance on [" + std::to_string(a) + ", " +
                       std::to_string(b) + "]");
  return simpson_step(f, a, fa, m, fm, lm, flm, left, 0.5 * tol, depth - 1, evals) +
         simpson_step(f, m, fm, b, fb, rm, frm, right, 0.5 * tol, depth - 1, evals);
}

}  // namespace detail

// Adaptive Simpson quadrature of f over [a, b] to absolute tolerance `tol`.
// Throws RuntimeError when the recursion depth runs out before the local
// error estimate drops below tolerance.
template <class F>
double adaptive_simpson(const F& f, double a, double b, double tol, int max_depth = 60) {
  if (b <= a) return 0.0;
  const double fa = f(a), fb = f(b), m = 0.5 * (a + b), fm = f(m);
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  int evals = 3;
  return detail::simpson_step(f, a, fa, b, fb, m, fm, whole, tol, max_depth, evals);
}

}  // namespace gginf
