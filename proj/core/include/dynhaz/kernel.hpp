#pragma once

#include <string>
#include <vector>

namespace dynhaz {

// Moment constants of a kernel: beta_k = int u^2 K(u) du,
// gamma_k = int K(u)^2 du, delta_k = int u^2 K(u)^2 du.
struct KernelConstants {
  double beta_k = 0;
  double gamma_k = 0;
  double delta_k = 0;
};

// Symmetric probability kernel supported on [-1/2, 1/2], represented as a
// polynomial in u. All smoothing in this library uses this half-unit
// support convention; kernels quoted for [-1, 1] elsewhere must be
// rescaled before use (K_half(u) = 2 K_unit(2u)).
class Kernel {
 public:
  static Kernel uniform();
  static Kernel epanechnikov();  // (3/2)(1 - 4u^2)
  static Kernel biweight();      // (15/8)(1 - 4u^2)^2, twice differentiable at the edges

  // Polynomial coefficients c0 + c1 u + c2 u^2 + ... on [-1/2, 1/2].
  // Validates symmetry, nonnegativity and unit mass; throws Error if the
  // checks fail. Constants are computed by adaptive quadrature (1e-12).
  static Kernel custom(std::vector<double> coeffs, std::string name = "custom");

  static Kernel from_name(const std::string& name);

  double operator()(double u) const;          // 0 outside the support
  double derivative(double u, int order) const;
  // Exact integral of K over [u0, u1] (clipped to the support).
  double integral(double u0, double u1) const;

  const KernelConstants& constants() const { return consts_; }
  const std::string& name() const { return name_; }
  bool vanishes_at_edges() const;
  static constexpr double support_half_width = 0.5;

 private:
  Kernel(std::vector<double> coeffs, std::string name, bool builtin);

  std::vector<double> coeffs_;
  std::vector<double> anti_;  // antiderivative coefficients, constant term 0
  std::string name_;
  KernelConstants consts_;
};

}  // namespace dynhaz
