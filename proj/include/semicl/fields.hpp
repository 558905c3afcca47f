#pragma once

#include <string>
#include <variant>
#include <vector>

#include "semicl/types.hpp"

namespace semicl {

/// Value, gradient and Hessian of a smooth scalar function at one point.
struct Jet {
  double value = 0.0;
  Vec gradient;
  Mat hessian;

  explicit Jet(int dim = 1) : gradient(Vec::Zero(dim)), hessian(Mat::Zero(dim, dim)) {}
};

/// c
struct ConstantTerm {
  double value = 0.0;
};

/// amplitude · cos(w·r + phase)
struct TrigTerm {
  double amplitude = 0.0;
  Vec wavevector;
  double phase = 0.0;
};

/// Quadratic polynomial in u = r - center: c0 + b·u + ½ uᵀ Q u.
struct Quadratic {
  double c0 = 0.0;
  Vec linear;
  Mat quadratic;

  Jet evaluate(const Vec& u) const;
  /// Sup of |p(u)| over |u| <= radius.
  double bound(double radius) const;
};

/// p(r - c) exp(-|r - c|² / 2s²).
struct GaussianPolyTerm {
  Vec center;
  double width = 1.0;
  Quadratic poly;
};

/// p(r - c) Π_i W_i(r_i - c_i) where W_i is exactly 1 on |u| <= halfwidth_i and
/// falls to 0 through a C∞ ramp of length ramp_i. The product is exactly the
/// polynomial on the plateau, which is how linear and quadratic model fields
/// are made globally bounded.
struct PlateauPolyTerm {
  Vec center;
  Vec halfwidth;
  Vec ramp;
  Quadratic poly;
};

using FieldTerm = std::variant<ConstantTerm, TrigTerm, GaussianPolyTerm, PlateauPolyTerm>;

/// C∞ step S(t): 0 for t <= 0, 1 for t >= 1, built from exp(-1/t).
struct SmoothStep {
  double value;
  double d1;
  double d2;
};
SmoothStep smooth_step(double t);

/// Plateau window W(u) with derivatives.
SmoothStep plateau_window(double u, double halfwidth, double ramp);

/// Finite sum of bounded smooth primitives with exact derivatives.
class ScalarField {
 public:
  ScalarField() = default;
  explicit ScalarField(int dim) : dim_(dim) {}
  ScalarField(int dim, std::vector<FieldTerm> terms);

  int dim() const { return dim_; }
  bool empty() const { return terms_.empty(); }
  const std::vector<FieldTerm>& terms() const { return terms_; }
  void add(FieldTerm term);

  Jet jet(const Vec& r) const;
  double value(const Vec& r) const;
  Vec gradient(const Vec& r) const;
  /// Explicit global bound on |value|, the C∞_b certificate of each primitive.
  double bound() const;

 private:
  int dim_ = 1;
  std::vector<FieldTerm> terms_;
};

/// External potentials φ and A with exact derivatives; B_ij = ∂_i A_j - ∂_j A_i.
class ExternalFields {
 public:
  ExternalFields() = default;
  explicit ExternalFields(int dim) : dim_(dim), phi_(dim) {}
  ExternalFields(ScalarField phi, std::vector<ScalarField> vector_potential);

  int dim() const { return dim_; }
  const ScalarField& phi() const { return phi_; }
  const std::vector<ScalarField>& vector_potential_components() const { return a_; }
  bool has_vector_potential() const;

  double scalar_potential(const Vec& r) const { return phi_.value(r); }
  Vec grad_scalar_potential(const Vec& r) const { return phi_.gradient(r); }
  Vec vector_potential(const Vec& r) const;
  /// Antisymmetric d×d magnetic 2-form.
  Mat magnetic_field(const Vec& r) const;
  /// ∂_m B at r, one antisymmetric matrix per direction m.
  std::vector<Mat> magnetic_field_gradient(const Vec& r) const;

 private:
  int dim_ = 1;
  ScalarField phi_;
  std::vector<ScalarField> a_;
};

}  // namespace semicl
