#include "dynhaz/hazard_family.hpp"

#include <cmath>

#include "dynhaz/error.hpp"

namespace dynhaz {

namespace {

// (exp(b d) - 1) / b, stable near b = 0
double expm1_over(double b, double d) {
  const double z = b * d;
  if (std::abs(z) < 1e-8) return d * (1.0 + 0.5 * z + z * z / 6.0);
  return std::expm1(z) / b;
}

}  // namespace

FamilyTag family_tag_from_name(const std::string& name) {
  if (name == "constant") return FamilyTag::constant;
  if (name == "gompertz") return FamilyTag::gompertz;
  if (name == "weibull") return FamilyTag::weibull;
  if (name == "frailty") return FamilyTag::frailty;
  return FamilyTag::generic;
}

std::string to_string(FamilyTag tag) {
  switch (tag) {
    case FamilyTag::constant: return "constant";
    case FamilyTag::gompertz: return "gompertz";
    case FamilyTag::weibull: return "weibull";
    case FamilyTag::frailty: return "frailty";
    case FamilyTag::generic: return "generic";
  }
  return "generic";
}

bool HazardFamily::in_domain(std::span<const double> theta) const {
  if (!(theta[0] > 0)) return false;
  if (dim() > 1) {
    if (theta[1] < beta_min() || theta[1] > beta_max()) return false;
  }
  return true;
}

bool HazardFamily::clamp_to_domain(std::span<double> theta) const {
  bool moved = false;
  if (!(theta[0] > 1e-12)) {
    theta[0] = 1e-12;
    moved = true;
  }
  if (dim() > 1) {
    if (theta[1] < beta_min()) {
      theta[1] = beta_min();
      moved = true;
    } else if (theta[1] > beta_max()) {
      theta[1] = beta_max();
      moved = true;
    }
  }
  return moved;
}

double HazardFamily::gamma(double, double) const {
  throw Error("family has no product structure");
}
double HazardFamily::log_gamma(double t, double beta) const {
  return std::log(gamma(t, beta));
}
double HazardFamily::gamma_antideriv(double, double) const {
  throw Error("family has no product structure");
}
double HazardFamily::gamma_antideriv_dbeta(double, double) const {
  throw Error("family has no product structure");
}
double HazardFamily::phi(double, double) const {
  throw Error("family has no product structure");
}
double HazardFamily::phi_dbeta(double, double) const {
  throw Error("family has no product structure");
}

namespace {

class ConstantFamily final : public HazardFamily {
 public:
  std::string name() const override { return "constant"; }
  FamilyTag tag() const override { return FamilyTag::constant; }
  int dim() const override { return 1; }

  double hazard(double, std::span<const double> th) const override { return th[0]; }
  void score(double, std::span<const double> th, std::span<double> out) const override {
    out[0] = 1.0 / th[0];
  }
  void log_hessian(double, std::span<const double> th, Matrix& out) const override {
    out = Matrix(1, 1);
    out(0, 0) = -1.0 / (th[0] * th[0]);
  }
  double cumulative(double t, std::span<const double> th) const override {
    return th[0] * t;
  }

  bool is_product() const override { return true; }
  double gamma(double, double) const override { return 1.0; }
  double log_gamma(double, double) const override { return 0.0; }
  double gamma_antideriv(double t, double) const override { return t; }
  double gamma_antideriv_dbeta(double, double) const override { return 0.0; }
  double phi(double, double) const override { return 0.0; }
  double phi_dbeta(double, double) const override { return 0.0; }
};

// theta * exp(beta (t - s)); the global form a e^{beta t} is the anchor
// s = 0 case with theta = a.
class GompertzFamily final : public HazardFamily {
 public:
  explicit GompertzFamily(double s) : s_(s) {}

  std::string name() const override { return "gompertz"; }
  FamilyTag tag() const override { return FamilyTag::gompertz; }
  int dim() const override { return 2; }
  double anchor() const override { return s_; }

  double hazard(double t, std::span<const double> th) const override {
    return th[0] * std::exp(th[1] * (t - s_));
  }
  void score(double t, std::span<const double> th, std::span<double> out) const override {
    out[0] = 1.0 / th[0];
    out[1] = t - s_;
  }
  void log_hessian(double, std::span<const double> th, Matrix& out) const override {
    out = Matrix(2, 2);
    out(0, 0) = -1.0 / (th[0] * th[0]);
  }
  double cumulative(double t, std::span<const double> th) const override {
    return th[0] * (gamma_antideriv(t, th[1]) - gamma_antideriv(0.0, th[1]));
  }

  bool is_product() const override { return true; }
  double gamma(double t, double b) const override { return std::exp(b * (t - s_)); }
  double log_gamma(double t, double b) const override { return b * (t - s_); }
  double gamma_antideriv(double t, double b) const override {
    return expm1_over(b, t - s_);
  }
  double gamma_antideriv_dbeta(double t, double b) const override {
    const double d = t - s_;
    const double z = b * d;
    if (std::abs(z) < 1e-5)
      return d * d * (0.5 + z / 3.0 + z * z / 8.0 + z * z * z / 30.0);
    return (d * std::exp(z)) / b - std::expm1(z) / (b * b);
  }
  double phi(double t, double) const override { return t - s_; }
  double phi_dbeta(double, double) const override { return 0.0; }

 private:
  double s_;
};

// Local form theta (t/s)^beta around anchor s > 0.
class LocalWeibullFamily final : public HazardFamily {
 public:
  explicit LocalWeibullFamily(double s) : s_(s) {
    if (!(s > 0)) throw Error("weibull local form requires s > 0");
  }

  std::string name() const override { return "weibull"; }
  FamilyTag tag() const override { return FamilyTag::weibull; }
  int dim() const override { return 2; }
  double anchor() const override { return s_; }
  double beta_min() const override { return -1.0 + 1e-6; }

  double hazard(double t, std::span<const double> th) const override {
    return th[0] * gamma(t, th[1]);
  }
  void score(double t, std::span<const double> th, std::span<double> out) const override {
    out[0] = 1.0 / th[0];
    out[1] = phi(t, th[1]);
  }
  void log_hessian(double, std::span<const double> th, Matrix& out) const override {
    out = Matrix(2, 2);
    out(0, 0) = -1.0 / (th[0] * th[0]);
  }
  double cumulative(double t, std::span<const double> th) const override {
    return th[0] * (gamma_antideriv(t, th[1]) - gamma_antideriv(0.0, th[1]));
  }

  bool is_product() const override { return true; }
  double gamma(double t, double b) const override {
    if (t <= 0) return b > 0 ? 0.0 : (b == 0 ? 1.0 : 1e300);
    return std::pow(t / s_, b);
  }
  double gamma_antideriv(double t, double b) const override {
    const double r = std::max(t, 0.0) / s_;
    return s_ * (std::pow(r, b + 1.0) - 1.0) / (b + 1.0);
  }
  double gamma_antideriv_dbeta(double t, double b) const override {
    const double r = std::max(t, 0.0) / s_;
    const double bp = b + 1.0;
    const double rp = std::pow(r, bp);
    const double lr = r > 0 ? std::log(r) : 0.0;
    return s_ * (bp * rp * lr - (rp - 1.0)) / (bp * bp);
  }
  double phi(double t, double) const override {
    return std::log(std::max(t, 1e-300) / s_);
  }
  double phi_dbeta(double, double) const override { return 0.0; }

 private:
  double s_;
};

// Global Weibull a b t^{b-1}, parameters (a, b), b > 0.
class GlobalWeibullFamily final : public HazardFamily {
 public:
  std::string name() const override { return "weibull"; }
  FamilyTag tag() const override { return FamilyTag::weibull; }
  int dim() const override { return 2; }
  double beta_min() const override { return 1e-8; }

  double hazard(double t, std::span<const double> th) const override {
    return th[0] * gamma(t, th[1]);
  }
  void score(double t, std::span<const double> th, std::span<double> out) const override {
    out[0] = 1.0 / th[0];
    out[1] = phi(t, th[1]);
  }
  void log_hessian(double, std::span<const double> th, Matrix& out) const override {
    out = Matrix(2, 2);
    out(0, 0) = -1.0 / (th[0] * th[0]);
    out(1, 1) = -1.0 / (th[1] * th[1]);
  }
  double cumulative(double t, std::span<const double> th) const override {
    return th[0] * gamma_antideriv(t, th[1]);
  }

  bool is_product() const override { return true; }
  double gamma(double t, double b) const override {
    return b * std::pow(std::max(t, 0.0), b - 1.0);
  }
  double gamma_antideriv(double t, double b) const override {
    return std::pow(std::max(t, 0.0), b);
  }
  double gamma_antideriv_dbeta(double t, double b) const override {
    if (t <= 0) return 0.0;
    return std::pow(t, b) * std::log(t);
  }
  double phi(double t, double b) const override {
    return 1.0 / b + std::log(std::max(t, 1e-300));
  }
  double phi_dbeta(double, double b) const override { return -1.0 / (b * b); }
};

// theta (1 + beta s) / (1 + beta t) with beta >= 0; global form
// a / (1 + beta t) is the anchor 0 case.
class FrailtyFamily final : public HazardFamily {
 public:
  explicit FrailtyFamily(double s) : s_(s) {}

  std::string name() const override { return "frailty"; }
  FamilyTag tag() const override { return FamilyTag::frailty; }
  int dim() const override { return 2; }
  double anchor() const override { return s_; }
  double beta_min() const override { return 0.0; }
  bool on_boundary(std::span<const double> th) const override { return th[1] <= 0.0; }

  double hazard(double t, std::span<const double> th) const override {
    return th[0] * gamma(t, th[1]);
  }
  void score(double t, std::span<const double> th, std::span<double> out) const override {
    out[0] = 1.0 / th[0];
    out[1] = phi(t, th[1]);
  }
  void log_hessian(double t, std::span<const double> th, Matrix& out) const override {
    out = Matrix(2, 2);
    out(0, 0) = -1.0 / (th[0] * th[0]);
    out(1, 1) = phi_dbeta(t, th[1]);
  }
  double cumulative(double t, std::span<const double> th) const override {
    const double b = th[1];
    if (b < 1e-12) return th[0] * t;
    return th[0] * (1.0 + b * s_) * std::log1p(b * t) / b;
  }

  bool is_product() const override { return true; }
  double gamma(double t, double b) const override {
    return (1.0 + b * s_) / (1.0 + b * t);
  }
  double gamma_antideriv(double t, double b) const override {
    if (std::abs(b) * std::max(std::abs(t), s_) < 1e-5) {
      const double t2 = t * t - s_ * s_, t3 = t * t * t - s_ * s_ * s_;
      return (t - s_) + b * (s_ * (t - s_) - 0.5 * t2) +
             b * b * (t3 / 3.0 - 0.5 * s_ * t2);
    }
    return (1.0 + b * s_) * (std::log1p(b * t) - std::log1p(b * s_)) / b;
  }
  double gamma_antideriv_dbeta(double t, double b) const override {
    if (std::abs(b) * std::max(std::abs(t), s_) < 1e-5) {
      const double t2 = t * t - s_ * s_, t3 = t * t * t - s_ * s_ * s_;
      const double t4 = t * t * t * t - s_ * s_ * s_ * s_;
      return (s_ * (t - s_) - 0.5 * t2) + 2.0 * b * (t3 / 3.0 - 0.5 * s_ * t2) +
             3.0 * b * b * (s_ * t3 / 3.0 - 0.25 * t4);
    }
    const double sl = std::log1p(b * t) - std::log1p(b * s_);
    return -sl / (b * b) +
           (1.0 + b * s_) / b * (t / (1.0 + b * t) - s_ / (1.0 + b * s_));
  }
  double phi(double t, double b) const override {
    return s_ / (1.0 + b * s_) - t / (1.0 + b * t);
  }
  double phi_dbeta(double t, double b) const override {
    const double qs = 1.0 + b * s_, qt = 1.0 + b * t;
    return -s_ * s_ / (qs * qs) + t * t / (qt * qt);
  }

 private:
  double s_;
};

}  // namespace

std::unique_ptr<HazardFamily> make_family(const std::string& name) {
  if (name == "constant") return std::make_unique<ConstantFamily>();
  if (name == "gompertz") return std::make_unique<GompertzFamily>(0.0);
  if (name == "weibull") return std::make_unique<GlobalWeibullFamily>();
  if (name == "frailty") return std::make_unique<FrailtyFamily>(0.0);
  throw Error("unknown family: " + name);
}

std::unique_ptr<HazardFamily> make_local_family(const std::string& name, double s) {
  if (name == "constant") return std::make_unique<ConstantFamily>();
  if (name == "gompertz") return std::make_unique<GompertzFamily>(s);
  if (name == "weibull") return std::make_unique<LocalWeibullFamily>(s);
  if (name == "frailty") return std::make_unique<FrailtyFamily>(s);
  throw Error("unknown family: " + name);
}

bool family_known(const std::string& name) {
  return name == "constant" || name == "gompertz" || name == "weibull" ||
         name == "frailty";
}

int family_dim(const std::string& name) {
  if (!family_known(name)) throw Error("unknown family: " + name);
  return name == "constant" ? 1 : 2;
}

}  // namespace dynhaz
