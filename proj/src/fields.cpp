#include "semicl/fields.hpp"

#include <cmath>

#include "semicl/errors.hpp"

namespace semicl {

Jet Quadratic::evaluate(const Vec& u) const {
  const int d = static_cast<int>(u.size());
  Jet jet(d);
  jet.value = c0;
  if (linear.size() == d) {
    jet.value += linear.dot(u);
    jet.gradient += linear;
  }
  if (quadratic.rows() == d) {
    const Mat sym = 0.5 * (quadratic + quadratic.transpose());
    jet.value += 0.5 * u.dot(sym * u);
    jet.gradient += sym * u;
    jet.hessian += sym;
  }
  return jet;
}

double Quadratic::bound(double radius) const {
  double b = std::abs(c0);
  if (linear.size() > 0) b += linear.norm() * radius;
  if (quadratic.rows() > 0) {
    const Mat sym = 0.5 * (quadratic + quadratic.transpose());
    b += 0.5 * sym.norm() * radius * radius;
  }
  return b;
}

SmoothStep smooth_step(double t) {
  if (t <= 0.0) return {0.0, 0.0, 0.0};
  if (t >= 1.0) return {1.0, 0.0, 0.0};
  auto f = [](double x) { return std::exp(-1.0 / x); };
  auto f1 = [](double x) { return std::exp(-1.0 / x) / (x * x); };
  auto f2 = [](double x) {
    const double x2 = x * x;
    return std::exp(-1.0 / x) * (1.0 / (x2 * x2) - 2.0 / (x2 * x));
  };
  const double s = 1.0 - t;
  const double fa = f(t), ga = f(s);
  const double fa1 = f1(t), ga1 = -f1(s);
  const double fa2 = f2(t), ga2 = f2(s);
  const double den = fa + ga;
  const double num = fa1 * ga - fa * ga1;
  const double num1 = fa2 * ga - fa * ga2;
  const double den1 = fa1 + ga1;
  return {fa / den, num / (den * den), num1 / (den * den) - 2.0 * num * den1 / (den * den * den)};
}

SmoothStep plateau_window(double u, double halfwidth, double ramp) {
  const double a = std::abs(u);
  if (a <= halfwidth) return {1.0, 0.0, 0.0};
  if (a >= halfwidth + ramp) return {0.0, 0.0, 0.0};
  const SmoothStep s = smooth_step((halfwidth + ramp - a) / ramp);
  const double sign = u < 0.0 ? -1.0 : 1.0;
  return {s.value, -sign * s.d1 / ramp, s.d2 / (ramp * ramp)};
}

namespace {

Jet constant_jet(const ConstantTerm& t, int d) {
  Jet jet(d);
  jet.value = t.value;
  return jet;
}

Jet trig_jet(const TrigTerm& t, const Vec& r) {
  const int d = static_cast<int>(r.size());
  Jet jet(d);
  const double arg = t.wavevector.dot(r) + t.phase;
  const double c = std::cos(arg), s = std::sin(arg);
  jet.value = t.amplitude * c;
  jet.gradient = -t.amplitude * s * t.wavevector;
  jet.hessian = -t.amplitude * c * (t.wavevector * t.wavevector.transpose());
  return jet;
}

Jet gaussian_jet(const GaussianPolyTerm& t, const Vec& r) {
  const Vec u = r - t.center;
  const int d = static_cast<int>(u.size());
  const double s2 = t.width * t.width;
  const double g = std::exp(-0.5 * u.squaredNorm() / s2);
  const Vec dg = -u / s2 * g;
  const Mat hg = (u * u.transpose() / (s2 * s2) - Mat::Identity(d, d) / s2) * g;
  const Jet p = t.poly.evaluate(u);
  Jet jet(d);
  jet.value = p.value * g;
  jet.gradient = p.gradient * g + p.value * dg;
  jet.hessian = p.hessian * g + p.gradient * dg.transpose() + dg * p.gradient.transpose() + p.value * hg;
  return jet;
}

Jet plateau_jet(const PlateauPolyTerm& t, const Vec& r) {
  const Vec u = r - t.center;
  const int d = static_cast<int>(u.size());
  std::array<SmoothStep, kMaxDim> w{};
  double prod = 1.0;
  for (int i = 0; i < d; ++i) {
    w[static_cast<std::size_t>(i)] = plateau_window(u[i], t.halfwidth[i], t.ramp[i]);
    prod *= w[static_cast<std::size_t>(i)].value;
  }
  Jet jet(d);
  bool any_slope = false;
  for (int i = 0; i < d; ++i) any_slope = any_slope || w[static_cast<std::size_t>(i)].d1 != 0.0;
  if (prod == 0.0 && !any_slope) return jet;

  Vec dw(d);
  Mat hw(d, d);
  for (int i = 0; i < d; ++i) {
    double others = 1.0;
    for (int j = 0; j < d; ++j) {
      if (j != i) others *= w[static_cast<std::size_t>(j)].value;
    }
    dw[i] = w[static_cast<std::size_t>(i)].d1 * others;
    for (int j = 0; j < d; ++j) {
      if (i == j) {
        hw(i, j) = w[static_cast<std::size_t>(i)].d2 * others;
      } else {
        double rest = 1.0;
        for (int m = 0; m < d; ++m) {
          if (m != i && m != j) rest *= w[static_cast<std::size_t>(m)].value;
        }
        hw(i, j) = w[static_cast<std::size_t>(i)].d1 * w[static_cast<std::size_t>(j)].d1 * rest;
      }
    }
  }
  const Jet p = t.poly.evaluate(u);
  jet.value = p.value * prod;
  jet.gradient = p.gradient * prod + p.value * dw;
  jet.hessian = p.hessian * prod + p.gradient * dw.transpose() + dw * p.gradient.transpose() + p.value * hw;
  return jet;
}

double term_bound(const FieldTerm& term) {
  return std::visit(
      [](const auto& t) -> double {
        using T = std::decay_t<decltype(t)>;
        if constexpr (std::is_same_v<T, ConstantTerm>) {
          return std::abs(t.value);
        } else if constexpr (std::is_same_v<T, TrigTerm>) {
          return std::abs(t.amplitude);
        } else if constexpr (std::is_same_v<T, GaussianPolyTerm>) {
          // sup |u|^j exp(-|u|²/2s²) = (j s²)^{j/2} e^{-j/2}.
          const double s = t.width;
          double b = std::abs(t.poly.c0);
          if (t.poly.linear.size() > 0) b += t.poly.linear.norm() * s * std::exp(-0.5);
          if (t.poly.quadratic.rows() > 0) {
            b += 0.5 * (0.5 * (t.poly.quadratic + t.poly.quadratic.transpose())).norm() * 2.0 * s * s *
                 std::exp(-1.0);
          }
          return b;
        } else {
          return t.poly.bound((t.halfwidth + t.ramp).norm());
        }
      },
      term);
}

void check_term(const FieldTerm& term, int d) {
  std::visit(
      [d](const auto& t) {
        using T = std::decay_t<decltype(t)>;
        if constexpr (std::is_same_v<T, TrigTerm>) {
          if (t.wavevector.size() != d) throw Error(ErrorKind::Config, "trig term wavevector has wrong rank");
        } else if constexpr (std::is_same_v<T, GaussianPolyTerm>) {
          if (t.center.size() != d) throw Error(ErrorKind::Config, "gaussian term centre has wrong rank");
          if (!(t.width > 0.0)) throw Error(ErrorKind::Config, "gaussian term width must be positive");
        } else if constexpr (std::is_same_v<T, PlateauPolyTerm>) {
          if (t.center.size() != d || t.halfwidth.size() != d || t.ramp.size() != d) {
            throw Error(ErrorKind::Config, "plateau term vectors have wrong rank");
          }
          for (int i = 0; i < d; ++i) {
            if (!(t.ramp[i] > 0.0) || t.halfwidth[i] < 0.0) {
              throw Error(ErrorKind::Config, "plateau term needs halfwidth >= 0 and ramp > 0");
            }
          }
        }
      },
      term);
}

}  // namespace

ScalarField::ScalarField(int dim, std::vector<FieldTerm> terms) : dim_(dim) {
  for (auto& t : terms) add(std::move(t));
}

void ScalarField::add(FieldTerm term) {
  check_term(term, dim_);
  terms_.push_back(std::move(term));
}

Jet ScalarField::jet(const Vec& r) const {
  Jet total(dim_);
  for (const FieldTerm& term : terms_) {
    const Jet j = std::visit(
        [&r, this](const auto& t) -> Jet {
          using T = std::decay_t<decltype(t)>;
          if constexpr (std::is_same_v<T, ConstantTerm>) {
            return constant_jet(t, dim_);
          } else if constexpr (std::is_same_v<T, TrigTerm>) {
            return trig_jet(t, r);
          } else if constexpr (std::is_same_v<T, GaussianPolyTerm>) {
            return gaussian_jet(t, r);
          } else {
            return plateau_jet(t, r);
          }
        },
        term);
    total.value += j.value;
    total.gradient += j.gradient;
    total.hessian += j.hessian;
  }
  return total;
}

double ScalarField::value(const Vec& r) const { return terms_.empty() ? 0.0 : jet(r).value; }

Vec ScalarField::gradient(const Vec& r) const {
  return terms_.empty() ? Vec(Vec::Zero(dim_)) : jet(r).gradient;
}

double ScalarField::bound() const {
  double b = 0.0;
  for (const FieldTerm& t : terms_) b += term_bound(t);
  return b;
}

// ---------------------------------------------------------------------------

ExternalFields::ExternalFields(ScalarField phi, std::vector<ScalarField> vector_potential)
    : dim_(phi.dim()), phi_(std::move(phi)), a_(std::move(vector_potential)) {
  if (!a_.empty() && static_cast<int>(a_.size()) != dim_) {
    throw Error(ErrorKind::Config, "vector potential needs one component per dimension");
  }
  for (const ScalarField& c : a_) {
    if (c.dim() != dim_) throw Error(ErrorKind::Config, "vector potential component has wrong rank");
  }
}

bool ExternalFields::has_vector_potential() const {
  for (const ScalarField& c : a_) {
    if (!c.empty()) return true;
  }
  return false;
}

Vec ExternalFields::vector_potential(const Vec& r) const {
  Vec a = Vec::Zero(dim_);
  for (std::size_t j = 0; j < a_.size(); ++j) a[static_cast<int>(j)] = a_[j].value(r);
  return a;
}

Mat ExternalFields::magnetic_field(const Vec& r) const {
  Mat b = Mat::Zero(dim_, dim_);
  if (!has_vector_potential()) return b;
  // J(j, i) = ∂_i A_j
  Mat jac(dim_, dim_);
  for (int j = 0; j < dim_; ++j) jac.row(j) = a_[static_cast<std::size_t>(j)].gradient(r).transpose();
  for (int i = 0; i < dim_; ++i) {
    for (int j = 0; j < dim_; ++j) b(i, j) = jac(j, i) - jac(i, j);
  }
  return b;
}

std::vector<Mat> ExternalFields::magnetic_field_gradient(const Vec& r) const {
  std::vector<Mat> out(static_cast<std::size_t>(dim_), Mat::Zero(dim_, dim_));
  if (!has_vector_potential()) return out;
  std::vector<Mat> hess;
  for (int j = 0; j < dim_; ++j) hess.push_back(a_[static_cast<std::size_t>(j)].jet(r).hessian);
  // ∂_m B_ij = ∂_m ∂_i A_j - ∂_m ∂_j A_i
  for (int m = 0; m < dim_; ++m) {
    for (int i = 0; i < dim_; ++i) {
      for (int j = 0; j < dim_; ++j) {
        out[static_cast<std::size_t>(m)](i, j) =
            hess[static_cast<std::size_t>(j)](m, i) - hess[static_cast<std::size_t>(i)](m, j);
      }
    }
  }
  return out;
}

}  // namespace semicl
