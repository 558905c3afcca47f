#include "semicl/flow.hpp"

#include <cmath>
#include <ostream>
#include <sstream>

namespace semicl {

BandPoint::BandPoint(int dim)
    : gradient(Vec::Zero(dim)),
      curvature(Mat::Zero(dim, dim)),
      moment(Mat::Zero(dim, dim)),
      moment_gradient{Mat::Zero(dim, dim), Mat::Zero(dim, dim)} {}

BandPoint FreeBand::evaluate(const Vec& kappa) const {
  BandPoint p(dim_);
  p.energy = 0.5 * kappa.squaredNorm();
  p.gradient = kappa;
  return p;
}

CosineBand::CosineBand(Lattice lattice, double e0, std::vector<double> hopping)
    : lattice_(std::move(lattice)), e0_(e0), hopping_(std::move(hopping)) {
  if (static_cast<int>(hopping_.size()) != lattice_.dim()) {
    throw Error(ErrorKind::Config, "cosine band needs one hopping per lattice direction");
  }
}

BandPoint CosineBand::evaluate(const Vec& kappa) const {
  const int d = lattice_.dim();
  BandPoint p(d);
  p.energy = e0_;
  for (int j = 0; j < d; ++j) {
    const Vec g = lattice_.basis().col(j);
    const double t = hopping_[static_cast<std::size_t>(j)];
    const double arg = kappa.dot(g);
    p.energy -= 2.0 * t * std::cos(arg);
    p.gradient += 2.0 * t * std::sin(arg) * g;
  }
  return p;
}

// ---------------------------------------------------------------------------

InterpolatedBand::InterpolatedBand(const GeometryGrid& grid)
    : lattice_(grid.lattice), to_frac_(grid.lattice.dual_basis().inverse()) {
  const int d = lattice_.dim();
  energy_ = PeriodicSpline(grid.n, grid.energy);
  for (int a = 0; a < d; ++a) {
    std::vector<double> comp(grid.size());
    for (std::size_t s = 0; s < grid.size(); ++s) comp[s] = grid.grad_energy[s][a];
    grad_.emplace_back(grid.n, comp);
  }
  if (d == 2) {
    std::vector<double> om(grid.size()), mm(grid.size());
    for (std::size_t s = 0; s < grid.size(); ++s) {
      om[s] = grid.curvature[s](0, 1);
      mm[s] = grid.moment[s](0, 1);
    }
    curvature_ = PeriodicSpline(grid.n, om);
    moment_ = PeriodicSpline(grid.n, mm);
  }
}

BandPoint InterpolatedBand::evaluate(const Vec& kappa) const {
  const int d = dim();
  const Vec f = to_frac_ * kappa;
  const Mat jac = to_frac_.transpose();  // ∇_κ = (B*)^{-T} ∇_f
  BandPoint p(d);
  const PeriodicSpline::Sample e = energy_.evaluate(f);
  p.energy = e.value;
  p.gradient = jac * e.gradient;
  if (d == 2) {
    const double om = curvature_.value(f);
    const PeriodicSpline::Sample m = moment_.evaluate(f);
    p.curvature(0, 1) = om;
    p.curvature(1, 0) = -om;
    p.moment(0, 1) = m.value;
    p.moment(1, 0) = -m.value;
    const Vec dm = jac * m.gradient;
    for (int a = 0; a < d; ++a) {
      p.moment_gradient[static_cast<std::size_t>(a)](0, 1) = dm[a];
      p.moment_gradient[static_cast<std::size_t>(a)](1, 0) = -dm[a];
    }
  }
  return p;
}

Vec InterpolatedBand::interpolated_gradient(const Vec& kappa) const {
  const Vec f = to_frac_ * kappa;
  Vec g(dim());
  for (int a = 0; a < dim(); ++a) g[a] = grad_[static_cast<std::size_t>(a)].value(f);
  return g;
}

double InterpolatedBand::gradient_consistency(int oversample) const {
  const std::vector<int>& n = energy_.shape();
  std::vector<int> fine;
  for (int v : n) fine.push_back(v * oversample);
  double worst = 0.0;
  for (const Vec& k : brillouin_grid(lattice_, fine)) {
    worst = std::max(worst, (evaluate(k).gradient - interpolated_gradient(k)).cwiseAbs().maxCoeff());
  }
  return worst;
}

// ---------------------------------------------------------------------------

PhasePoint to_kinetic(const CanonicalPoint& p, const ExternalFields& fields) {
  if (!fields.has_vector_potential()) return {p.r, p.k};
  return {p.r, p.k - fields.vector_potential(p.r)};
}

CanonicalPoint to_canonical(const PhasePoint& z, const ExternalFields& fields) {
  if (!fields.has_vector_potential()) return {z.r, z.kappa};
  return {z.r, z.kappa + fields.vector_potential(z.r)};
}

namespace {

void check_spec(const FlowSpec& spec, const PhasePoint& z) {
  if (!spec.band) throw Error(ErrorKind::Config, "flow spec has no band model");
  const int d = spec.band->dim();
  if (z.r.size() != d || z.kappa.size() != d || spec.fields.dim() != d) {
    throw Error(ErrorKind::Config, "phase point, band and fields disagree on the dimension");
  }
}

double contract(const Mat& a, const Mat& b) { return a.cwiseProduct(b).sum(); }

}  // namespace

double hsc_energy(const PhasePoint& z, const FlowSpec& spec) {
  check_spec(spec, z);
  const BandPoint band = spec.band->evaluate(z.kappa);
  double h = band.energy + spec.fields.scalar_potential(z.r);
  const double eps = spec.active_epsilon();
  if (eps != 0.0 && spec.fields.has_vector_potential()) {
    h -= eps * contract(band.moment, spec.fields.magnetic_field(z.r));
  }
  return h;
}

namespace {

struct Evaluated {
  Vec dr;    // ∇_r H_sc
  Vec dk;    // ∇_κ H_sc
  Mat b;     // B(r)
  Mat omega; // εΩ(κ)
};

Evaluated evaluate_structure(const PhasePoint& z, const FlowSpec& spec) {
  check_spec(spec, z);
  const int d = spec.band->dim();
  const double eps = spec.active_epsilon();
  const BandPoint band = spec.band->evaluate(z.kappa);
  const bool magnetic = spec.fields.has_vector_potential();

  Evaluated out;
  out.b = magnetic ? spec.fields.magnetic_field(z.r) : Mat(Mat::Zero(d, d));
  out.dr = spec.fields.grad_scalar_potential(z.r);
  out.dk = band.gradient;
  if (eps != 0.0 && magnetic) {
    const std::vector<Mat> db = spec.fields.magnetic_field_gradient(z.r);
    for (int m = 0; m < d; ++m) {
      out.dr[m] -= eps * contract(band.moment, db[static_cast<std::size_t>(m)]);
      out.dk[m] -= eps * contract(band.moment_gradient[static_cast<std::size_t>(m)], out.b);
    }
  }
  out.omega = eps * band.curvature;
  return out;
}

}  // namespace

PhaseVec hsc_differential(const PhasePoint& z, const FlowSpec& spec) {
  const Evaluated s = evaluate_structure(z, spec);
  const int d = static_cast<int>(s.dr.size());
  PhaseVec dh(2 * d);
  dh.head(d) = s.dr;
  dh.tail(d) = s.dk;
  return dh;
}

PhaseMat symplectic_matrix(const PhasePoint& z, const FlowSpec& spec) {
  const Evaluated s = evaluate_structure(z, spec);
  const int d = static_cast<int>(s.dr.size());
  PhaseMat theta = PhaseMat::Zero(2 * d, 2 * d);
  theta.topLeftCorner(d, d) = s.b;
  theta.topRightCorner(d, d) = -Mat::Identity(d, d);
  theta.bottomLeftCorner(d, d) = Mat::Identity(d, d);
  theta.bottomRightCorner(d, d) = s.omega;
  return theta;
}

PhaseVec flow_vector_field(const PhasePoint& z, const FlowSpec& spec) {
  const Evaluated s = evaluate_structure(z, spec);
  const int d = static_cast<int>(s.dr.size());
  const Mat m = Mat::Identity(d, d) + s.omega * s.b;
  const Vec rhs = s.dk + s.omega * s.dr;
  const double det = d == 1 ? m(0, 0) : m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0);
  if (!(std::abs(det) >= kSymplecticDetThreshold)) {
    std::ostringstream msg;
    msg << "|det Θ| = " << std::abs(det) << " at r = (" << z.r.transpose() << "), kappa = ("
        << z.kappa.transpose() << "); epsilon " << spec.epsilon << " is too large";
    throw Error(ErrorKind::SymplecticDegeneracy, msg.str());
  }
  Vec rdot(d);
  if (d == 1) {
    rdot[0] = rhs[0] / det;
  } else {
    rdot[0] = (m(1, 1) * rhs[0] - m(0, 1) * rhs[1]) / det;
    rdot[1] = (m(0, 0) * rhs[1] - m(1, 0) * rhs[0]) / det;
  }
  PhaseVec out(2 * d);
  out.head(d) = rdot;
  out.tail(d) = s.b * rdot - s.dr;
  return out;
}

PhaseVec pack(const PhasePoint& z) {
  const int d = static_cast<int>(z.r.size());
  PhaseVec v(2 * d);
  v.head(d) = z.r;
  v.tail(d) = z.kappa;
  return v;
}

PhasePoint unpack(const PhaseVec& v, int dim) { return {v.head(dim), v.tail(dim)}; }

namespace {

PhaseVec rk4_step(const PhaseVec& y, double h, const FlowSpec& spec, int d) {
  const PhaseVec k1 = flow_vector_field(unpack(y, d), spec);
  const PhaseVec k2 = flow_vector_field(unpack(y + 0.5 * h * k1, d), spec);
  const PhaseVec k3 = flow_vector_field(unpack(y + 0.5 * h * k2, d), spec);
  const PhaseVec k4 = flow_vector_field(unpack(y + h * k3, d), spec);
  return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

PhaseVec midpoint_step(const PhaseVec& y, double h, const FlowSpec& spec, int d) {
  PhaseVec next = y + h * flow_vector_field(unpack(y, d), spec);
  for (int it = 0; it < 100; ++it) {
    const PhaseVec updated = y + h * flow_vector_field(unpack(0.5 * (y + next), d), spec);
    const double change = (updated - next).cwiseAbs().maxCoeff();
    next = updated;
    if (change <= 1e-15 * (1.0 + next.cwiseAbs().maxCoeff())) return next;
  }
  throw Error(ErrorKind::Instability, "implicit midpoint iteration did not converge; reduce dt");
}

}  // namespace

Trajectory integrate_flow(const PhasePoint& z0, double t_final, const FlowSpec& spec, int record_every) {
  check_spec(spec, z0);
  if (!(spec.dt > 0.0)) throw Error(ErrorKind::Config, "flow time step must be positive");
  const int d = spec.band->dim();
  const long steps = std::max(1L, static_cast<long>(std::ceil(std::abs(t_final) / spec.dt - 1e-9)));
  const double h = t_final / static_cast<double>(steps);
  record_every = std::max(1, record_every);

  Trajectory traj;
  PhaseVec y = pack(z0);
  auto record = [&](double t) {
    traj.t.push_back(t);
    traj.points.push_back(unpack(y, d));
    traj.energy.push_back(hsc_energy(traj.points.back(), spec));
  };
  record(0.0);
  if (t_final == 0.0) return traj;
  for (long s = 1; s <= steps; ++s) {
    try {
      y = spec.integrator == Integrator::RK4 ? rk4_step(y, h, spec, d) : midpoint_step(y, h, spec, d);
      if (!y.allFinite()) throw Error(ErrorKind::Instability, "non-finite phase point");
    } catch (const Error& e) {
      std::ostringstream msg;
      msg << "trajectory stopped at t = " << (s - 1) * h << ": " << e.what();
      throw TruncatedTrajectory(msg.str(), std::move(traj));
    }
    if (s % record_every == 0 || s == steps) record(s == steps ? t_final : s * h);
  }
  return traj;
}

PhasePoint flow_map(const PhasePoint& z0, double t, const FlowSpec& spec) {
  check_spec(spec, z0);
  if (t == 0.0) return z0;
  if (!(spec.dt > 0.0)) throw Error(ErrorKind::Config, "flow time step must be positive");
  const int d = spec.band->dim();
  const long steps = std::max(1L, static_cast<long>(std::ceil(std::abs(t) / spec.dt - 1e-9)));
  const double h = t / static_cast<double>(steps);
  PhaseVec y = pack(z0);
  for (long s = 0; s < steps; ++s) {
    y = spec.integrator == Integrator::RK4 ? rk4_step(y, h, spec, d) : midpoint_step(y, h, spec, d);
  }
  return unpack(y, d);
}

CanonicalPoint canonical_flow(const CanonicalPoint& p, double t, const FlowSpec& spec) {
  return to_canonical(flow_map(to_kinetic(p, spec.fields), t, spec), spec.fields);
}

void write_trajectory_csv(std::ostream& out, const Trajectory& trajectory, const FlowSpec& spec) {
  const int d = spec.band ? spec.band->dim() : 1;
  const char* axes = "xy";
  out << "# epsilon " << spec.epsilon << ", order " << spec.order << ", dt " << spec.dt << ", integrator "
      << (spec.integrator == Integrator::RK4 ? "rk4" : "midpoint") << '\n';
  out << 't';
  for (int i = 0; i < d; ++i) out << ",r_" << axes[i];
  for (int i = 0; i < d; ++i) out << ",kappa_" << axes[i];
  for (int i = 0; i < d; ++i) out << ",k_" << axes[i];
  out << ",H_sc\n";
  out.precision(17);
  for (std::size_t s = 0; s < trajectory.size(); ++s) {
    const PhasePoint& z = trajectory.points[s];
    const CanonicalPoint c = to_canonical(z, spec.fields);
    out << trajectory.t[s];
    for (int i = 0; i < d; ++i) out << ',' << z.r[i];
    for (int i = 0; i < d; ++i) out << ',' << z.kappa[i];
    for (int i = 0; i < d; ++i) out << ',' << c.k[i];
    out << ',' << trajectory.energy[s] << '\n';
  }
}

}  // namespace semicl
