#pragma once

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "dynhaz/linalg.hpp"

namespace dynhaz {

// Tags naming the parametric recipe; used to select closed-form bias
// factors and improvement criteria.
enum class FamilyTag { constant, gompertz, weibull, frailty, generic };

FamilyTag family_tag_from_name(const std::string& name);
std::string to_string(FamilyTag tag);

// Parametric hazard alpha(t, theta) > 0 with analytic score
// psi = d log alpha / d theta and log-Hessian psi* = d^2 log alpha.
//
// Every built-in family has the product structure
//   alpha(t) = theta * gamma(t, beta),   gamma(anchor) = 1,
// with theta the level parameter (theta = alpha at the anchor point) and
// beta a scalar shape. The product accessors expose closed forms for
// int gamma dt and its beta-derivative, which the interval fitters and
// goodness-of-fit compensators use to avoid quadrature entirely.
class HazardFamily {
 public:
  virtual ~HazardFamily() = default;

  virtual std::string name() const = 0;
  virtual FamilyTag tag() const { return FamilyTag::generic; }
  virtual int dim() const = 0;

  virtual double hazard(double t, std::span<const double> theta) const = 0;
  virtual void score(double t, std::span<const double> theta,
                     std::span<double> out) const = 0;
  virtual void log_hessian(double t, std::span<const double> theta,
                           Matrix& out) const = 0;
  // int_0^t alpha(u, theta) du
  virtual double cumulative(double t, std::span<const double> theta) const = 0;

  virtual bool in_domain(std::span<const double> theta) const;
  // Project onto the closure of the domain; returns true if clamping moved
  // the point.
  virtual bool clamp_to_domain(std::span<double> theta) const;
  // true when a parameter sits on a domain boundary (KKT case)
  virtual bool on_boundary(std::span<const double> theta) const { return false; }

  // --- product structure, dim() == 1 + beta count ------------------------
  virtual bool is_product() const { return false; }
  virtual double anchor() const { return 0.0; }
  virtual double gamma(double t, double beta) const;
  virtual double log_gamma(double t, double beta) const;
  // int_anchor^t gamma(u, beta) du and its beta-derivative, closed form
  virtual double gamma_antideriv(double t, double beta) const;
  virtual double gamma_antideriv_dbeta(double t, double beta) const;
  // phi = d log gamma / d beta and its beta-derivative
  virtual double phi(double t, double beta) const;
  virtual double phi_dbeta(double t, double beta) const;
  virtual double beta_min() const { return -1e300; }
  virtual double beta_max() const { return 1e300; }
};

// Global forms: constant (theta), gompertz (a e^{b t}), weibull
// (a b t^{b-1}), frailty (a / (1 + b t)).
std::unique_ptr<HazardFamily> make_family(const std::string& name);

// Window-local reparametrizations anchored at s: the level parameter is
// the hazard value at s itself.
//   gompertz:  theta e^{beta (t - s)}
//   weibull:   theta (t / s)^beta
//   frailty:   theta (1 + beta s) / (1 + beta t), beta >= 0
//   constant:  theta
std::unique_ptr<HazardFamily> make_local_family(const std::string& name, double s);

bool family_known(const std::string& name);
int family_dim(const std::string& name);

}  // namespace dynhaz
