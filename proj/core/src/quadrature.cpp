#include "dynhaz/quadrature.hpp"

#include <cmath>

namespace dynhaz {

namespace {

// Gauss-Kronrod 7-15 nodes/weights on [-1, 1] (positive half; symmetric).
constexpr double kXgk[8] = {
    0.991455371120813, 0.949107912342759, 0.864864423359769, 0.741531185599394,
    0.586087235467691, 0.405845151377397, 0.207784955007898, 0.000000000000000};
constexpr double kWgk[8] = {
    0.022935322010529, 0.063092092629979, 0.104790010322250, 0.140653259715525,
    0.169004726639267, 0.190350578064785, 0.204432940075298, 0.209482141084728};
constexpr double kWg[4] = {
    0.129484966168870, 0.279705391489277, 0.381830050505119, 0.417959183673469};

}  // namespace

double gauss_kronrod_15(const std::function<double(double)>& f, double a, double b,
                        double* err_est) {
  const double c = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  double resk = 0.0, resg = 0.0;
  const double fc = f(c);
  resk += kWgk[7] * fc;
  resg += kWg[3] * fc;
  for (int j = 0; j < 7; ++j) {
    const double x = half * kXgk[j];
    const double fsum = f(c - x) + f(c + x);
    resk += kWgk[j] * fsum;
    if (j % 2 == 1) resg += kWg[j / 2] * fsum;
  }
  resk *= half;
  resg *= half;
  if (err_est) *err_est = std::abs(resk - resg);
  return resk;
}

namespace {

double adaptive_rec(const std::function<double(double)>& f, double a, double b,
                    double abs_tol, int depth) {
  double err = 0.0;
  const double whole = gauss_kronrod_15(f, a, b, &err);
  if (err <= abs_tol || depth <= 0 || (b - a) < 1e-15 * (1.0 + std::abs(a)))
    return whole;
  const double m = 0.5 * (a + b);
  return adaptive_rec(f, a, m, abs_tol * 0.5, depth - 1) +
         adaptive_rec(f, m, b, abs_tol * 0.5, depth - 1);
}

}  // namespace

double adaptive_quad(const std::function<double(double)>& f, double a, double b,
                     double abs_tol, int max_depth) {
  if (!(b > a)) return 0.0;
  return adaptive_rec(f, a, b, abs_tol, max_depth);
}

}  // namespace dynhaz
