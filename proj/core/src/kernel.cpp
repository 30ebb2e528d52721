#include "dynhaz/kernel.hpp"

#include <cmath>
#include <utility>

#include "dynhaz/error.hpp"
#include "dynhaz/quadrature.hpp"

namespace dynhaz {

namespace {

double horner(const std::vector<double>& c, double u) {
  double v = 0.0;
  for (std::size_t i = c.size(); i-- > 0;) v = v * u + c[i];
  return v;
}

std::vector<double> antiderivative(const std::vector<double>& c) {
  std::vector<double> a(c.size() + 1, 0.0);
  for (std::size_t i = 0; i < c.size(); ++i) a[i + 1] = c[i] / static_cast<double>(i + 1);
  return a;
}

std::vector<double> derivative_coeffs(const std::vector<double>& c) {
  if (c.size() <= 1) return {0.0};
  std::vector<double> d(c.size() - 1);
  for (std::size_t i = 1; i < c.size(); ++i) d[i - 1] = c[i] * static_cast<double>(i);
  return d;
}

// int u^k * p(u) du over [-1/2, 1/2], exact
double moment(const std::vector<double>& c, int k) {
  double s = 0.0;
  for (std::size_t i = 0; i < c.size(); ++i) {
    const std::size_t m = i + static_cast<std::size_t>(k);
    if (m % 2 == 1) continue;  // odd powers vanish on a symmetric interval
    s += c[i] * 2.0 * std::pow(0.5, static_cast<double>(m + 1)) / static_cast<double>(m + 1);
  }
  return s;
}

std::vector<double> poly_square(const std::vector<double>& c) {
  std::vector<double> q(2 * c.size() - 1, 0.0);
  for (std::size_t i = 0; i < c.size(); ++i)
    for (std::size_t j = 0; j < c.size(); ++j) q[i + j] += c[i] * c[j];
  return q;
}

}  // namespace

Kernel::Kernel(std::vector<double> coeffs, std::string name, bool builtin)
    : coeffs_(std::move(coeffs)), anti_(antiderivative(coeffs_)), name_(std::move(name)) {
  if (builtin) {
    const auto sq = poly_square(coeffs_);
    consts_.beta_k = moment(coeffs_, 2);
    consts_.gamma_k = moment(sq, 0);
    consts_.delta_k = moment(sq, 2);
    return;
  }
  // custom kernel: validate, then integrate numerically per the contract
  auto f = [this](double u) { return horner(coeffs_, u); };
  const double mass = adaptive_quad(f, -0.5, 0.5, 1e-13);
  if (std::abs(mass - 1.0) > 1e-10)
    throw Error("invalid kernel: integral is " + std::to_string(mass) + ", expected 1");
  for (int i = 0; i <= 1000; ++i) {
    const double u = -0.5 + i / 1000.0;
    const double v = f(u);
    if (v < -1e-12) throw Error("invalid kernel: negative value at u=" + std::to_string(u));
    if (std::abs(v - f(-u)) > 1e-10) throw Error("invalid kernel: not symmetric");
  }
  consts_.beta_k = adaptive_quad([&](double u) { return u * u * f(u); }, -0.5, 0.5, 1e-12);
  consts_.gamma_k = adaptive_quad([&](double u) { return f(u) * f(u); }, -0.5, 0.5, 1e-12);
  consts_.delta_k = adaptive_quad([&](double u) { return u * u * f(u) * f(u); }, -0.5, 0.5, 1e-12);
}

Kernel Kernel::uniform() { return Kernel({1.0}, "uniform", true); }

Kernel Kernel::epanechnikov() { return Kernel({1.5, 0.0, -6.0}, "epanechnikov", true); }

Kernel Kernel::biweight() {
  // (15/8)(1 - 4u^2)^2 = 15/8 - 15 u^2 + 30 u^4
  return Kernel({15.0 / 8.0, 0.0, -15.0, 0.0, 30.0}, "biweight", true);
}

Kernel Kernel::custom(std::vector<double> coeffs, std::string name) {
  return Kernel(std::move(coeffs), std::move(name), false);
}

Kernel Kernel::from_name(const std::string& name) {
  if (name == "uniform") return uniform();
  if (name == "epanechnikov") return epanechnikov();
  if (name == "biweight") return biweight();
  throw Error("unknown kernel: " + name);
}

double Kernel::operator()(double u) const {
  if (u < -0.5 || u > 0.5) return 0.0;
  return horner(coeffs_, u);
}

double Kernel::derivative(double u, int order) const {
  if (u < -0.5 || u > 0.5) return 0.0;
  std::vector<double> c = coeffs_;
  for (int k = 0; k < order; ++k) c = derivative_coeffs(c);
  return horner(c, u);
}

double Kernel::integral(double u0, double u1) const {
  const double lo = std::max(u0, -0.5);
  const double hi = std::min(u1, 0.5);
  if (hi <= lo) return 0.0;
  return horner(anti_, hi) - horner(anti_, lo);
}

bool Kernel::vanishes_at_edges() const { return std::abs(horner(coeffs_, 0.5)) < 1e-14; }

}  // namespace dynhaz
