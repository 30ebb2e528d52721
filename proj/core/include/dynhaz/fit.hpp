#pragma once

#include <functional>
#include <string>
#include <vector>

#include "dynhaz/hazard_family.hpp"
#include "dynhaz/kernel.hpp"
#include "dynhaz/linalg.hpp"
#include "dynhaz/survival_data.hpp"

namespace dynhaz {

struct FitResult {
  std::vector<double> theta;
  bool converged = false;
  int iterations = 0;
  // max-norm of the estimating equation divided by (1 + weighted event
  // count); convergence demands <= FitOptions::tol
  double score_residual = 0;
  std::string weight_descr;
  std::string warning;  // domain clamps, boundary solutions
};

struct FitOptions {
  std::vector<double> init;  // empty = auto (level from occurrence/exposure, shape default)
  int max_iter = 80;
  double tol = 1e-8;
  enum class Method { automatic, profile, newton } method = Method::automatic;
};

// Maximizes int_a^b w(t) {log alpha(t,theta) dN(t) - Y(t) alpha(t,theta) dt}.
// The event term is an exact sum over failures in (a, b]; the compensator
// is integrated exactly between order statistics. Product families with a
// scalar shape go through the concave profile in the shape parameter;
// anything else gets damped Newton on the score.
FitResult fit_weighted_mle(const SurvivalSample& sample, const HazardFamily& family,
                           const std::function<double(double)>& weight, double a,
                           double b, const FitOptions& opts = {});

// Uniform weight on [a, b]; compensator sums use the closed-form
// antiderivative of the family shape, no quadrature.
FitResult fit_interval_mle(const SurvivalSample& sample, const HazardFamily& family,
                           double a, double b, const FitOptions& opts = {});

// Kernel weight K((t - s)/h) on the window (s - h/2, s + h/2] clipped to
// [0, horizon].
FitResult fit_kernel_window(const SurvivalSample& sample, const HazardFamily& family,
                            const Kernel& kernel, double s, double h,
                            const FitOptions& opts = {});

// Empirical sandwich pieces at theta_hat. True-hazard increments are
// replaced by dN/Y and the limiting at-risk proportion by Y/n; the
// residual path e_path accumulates psi-weighted martingale residuals and
// vanishes at both interval ends when the fit converged.
struct SandwichMatrices {
  Matrix j_hat;
  Matrix m_hat;
  Matrix covariance;                                   // J^-1 M J^-1 / n
  std::function<std::vector<double>(double)> e_path;
};

SandwichMatrices sandwich(const SurvivalSample& sample, const HazardFamily& family,
                          const std::function<double(double)>& weight, double a,
                          double b, const std::vector<double>& theta_hat);

// JSON record of a fit: estimate, convergence diagnostics and (when given)
// the sandwich covariance.
std::string fit_report_json(const std::string& family, const FitResult& fit,
                            const SandwichMatrices* sw = nullptr);

}  // namespace dynhaz
