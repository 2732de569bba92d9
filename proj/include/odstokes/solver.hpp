#pragma once

#include <cmath>
#include <functional>
#include <memory>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/SparseLU>

#include "odstokes/errors.hpp"
#include "odstokes/fem.hpp"
#include "odstokes/outlets.hpp"

namespace odstokes {

/// Data and discretization parameters of one unsteady run.
struct RunConfig {
  double nu = 1.0;
  double theta = 1.0;
  double dt = 0.01;
  double T = 1.0;
  std::vector<OutletSpec> outlets;
  VectorField forcing;  // empty means f = 0
  VectorField initial;  // empty means v0 = 0
  double divergence_tolerance = 1e-10;

  int num_steps() const { return static_cast<int>(std::llround(T / dt)); }

  void validate(int num_outlets) const {
    if (!(nu > 0.0)) throw InvalidParameter("nu must be > 0");
    if (!(theta >= 0.5 && theta <= 1.0)) throw InvalidParameter("theta must lie in [1/2, 1]");
    if (!(dt > 0.0)) throw InvalidParameter("dt must be > 0");
    if (!(T > 0.0)) throw InvalidParameter("T must be > 0");
    if (std::abs(num_steps() * dt - T) > 1e-9 * T) throw InvalidParameter("T must be a whole number of steps dt");
    if (static_cast<int>(outlets.size()) != num_outlets)
      throw InvalidParameter("expected " + std::to_string(num_outlets) + " outlet specs, got " +
                             std::to_string(outlets.size()));
    for (std::size_t i = 0; i < outlets.size(); ++i) {
      if (outlets[i].k != static_cast<int>(i) + 1) throw InvalidParameter("outlet specs must be ordered k = 1..K");
      outlets[i].validate();
    }
  }
};

struct SystemState {
  double t = 0.0;
  Vector v;  // free velocity dofs
  Vector p;  // pressure dofs
};

/// Direct sparse LU of the symmetric saddle-point block [[A, -B^T], [-B, 0]], reused across solves.
class SaddleFactorization {
 public:
  SaddleFactorization(const SparseMatrix& a, const SparseMatrix& b, bool pin_pressure)
      : nu_(static_cast<int>(a.rows())), np_(static_cast<int>(b.rows())), pinned_(pin_pressure) {
    std::vector<Triplet> triplets;
    triplets.reserve(static_cast<std::size_t>(a.nonZeros() + 2 * b.nonZeros() + 1));
    for (int col = 0; col < a.outerSize(); ++col)
      for (SparseMatrix::InnerIterator it(a, col); it; ++it) triplets.emplace_back(it.row(), it.col(), it.value());
    for (int col = 0; col < b.outerSize(); ++col)
      for (SparseMatrix::InnerIterator it(b, col); it; ++it) {
        if (pinned_ && it.row() == 0) continue;
        triplets.emplace_back(nu_ + it.row(), it.col(), -it.value());
        triplets.emplace_back(it.col(), nu_ + it.row(), -it.value());
      }
    if (pinned_) triplets.emplace_back(nu_, nu_, 1.0);
    matrix_ = detail::from_triplets(nu_ + np_, nu_ + np_, triplets);

    if (!pinned_) check_constant_pressure_mode();
    lu_.analyzePattern(matrix_);
    lu_.factorize(matrix_);
    if (lu_.info() != Eigen::Success)
      throw SingularSystem("saddle-point factorization failed: " + lu_.lastErrorMessage());
    check_residual();
  }

  int num_velocity() const { return nu_; }
  int num_pressure() const { return np_; }
  const SparseMatrix& matrix() const { return matrix_; }

  Vector solve(const Vector& rhs) const {
    Vector r = rhs;
    if (pinned_) r[nu_] = 0.0;
    Vector x = lu_.solve(r);
    if (lu_.info() != Eigen::Success) throw SingularSystem("saddle-point solve failed");
    return x;
  }

  /// Velocity block rhs, zero divergence rhs.
  std::pair<Vector, Vector> solve_velocity_rhs(const Vector& rhs_v) const {
    Vector rhs = Vector::Zero(nu_ + np_);
    rhs.head(nu_) = rhs_v;
    const Vector x = solve(rhs);
    return {x.head(nu_), x.tail(np_)};
  }

  double relative_residual(const Vector& x, const Vector& b) const {
    const double nb = b.norm();
    return (matrix_ * x - b).norm() / (nb > 0.0 ? nb : 1.0);
  }

 private:
  void check_constant_pressure_mode() const {
    Vector z = Vector::Zero(nu_ + np_);
    z.tail(np_).setOnes();
    const Vector az = matrix_ * z;
    double scale = 0.0;
    for (int col = 0; col < matrix_.outerSize(); ++col)
      for (SparseMatrix::InnerIterator it(matrix_, col); it; ++it) scale = std::max(scale, std::abs(it.value()));
    if (np_ > 0 && az.lpNorm<Eigen::Infinity>() <= 1e-12 * scale)
      throw SingularSystem("saddle-point system is singular: constant pressure mode, zero pivot in the pressure block "
                           "(rows " + std::to_string(nu_) + ".." + std::to_string(nu_ + np_ - 1) +
                           "); pin one pressure dof");
  }

  void check_residual() const {
    std::mt19937_64 rng(0x5eed);
    std::normal_distribution<double> dist;
    Vector b(nu_ + np_);
    for (int i = 0; i < b.size(); ++i) b[i] = dist(rng);
    if (pinned_) b[nu_] = 0.0;
    const Vector x = lu_.solve(b);
    const double res = relative_residual(x, b);
    if (!std::isfinite(res) || res > 1e-10)
      throw SingularSystem("saddle-point system is numerically singular (relative residual " + std::to_string(res) + ")");
  }

  int nu_;
  int np_;
  bool pinned_;
  SparseMatrix matrix_;
  mutable Eigen::SparseLU<SparseMatrix, Eigen::COLAMDOrdering<int>> lu_;
};

inline SaddleFactorization factorize_saddle(const SparseMatrix& a, const SparseMatrix& b, bool pin_pressure = false) {
  return SaddleFactorization(a, b, pin_pressure);
}

/// Theta-scheme velocity-pressure stepper for the weak problem with open-dissipative outlets.
class StokesSolver {
 public:
  StokesSolver(const TaylorHoodSpace& space, const ConstrainedOperators& ops, RunConfig config)
      : space_(space), ops_(ops), config_(std::move(config)) {
    config_.validate(space.num_outlets());
    pin_ = space.num_outlets() == 0;
    if (pin_) warnings_.push_back("no open sections: pressure has a constant null mode, pinning pressure dof 0");
    inertial_ = ops.inertial(gammas(config_.outlets));
    dissipative_ = ops.dissipative(config_.nu, lambdas(config_.outlets));
    SparseMatrix step_matrix = inertial_ / config_.dt + config_.theta * dissipative_;
    step_ = std::make_unique<SaddleFactorization>(step_matrix, ops.divergence, pin_);
  }

  const RunConfig& config() const { return config_; }
  const ConstrainedOperators& operators() const { return ops_; }
  const TaylorHoodSpace& space() const { return space_; }
  const std::vector<std::string>& warnings() const { return warnings_; }
  const SparseMatrix& inertial_matrix() const { return inertial_; }
  const SparseMatrix& dissipative_matrix() const { return dissipative_; }

  /// (f(t), w) on the free dofs.
  Vector body_load(double t) const {
    if (!config_.forcing) return Vector::Zero(ops_.num_free());
    return ops_.restrict_to_free(assemble_load(space_, config_.forcing, t));
  }

  /// F(t) - sum_k S_k(t) b_k.
  Vector load(double t) const {
    Vector out = body_load(t);
    for (std::size_t k = 0; k < config_.outlets.size(); ++k)
      out -= config_.outlets[k].signal.eval(t) * ops_.outlet_source[k];
    return out;
  }

  /// M-orthogonal projection onto the discrete kernel of B.
  Vector project_divergence_free(const Vector& v_free) const {
    if (!projector_) projector_ = std::make_unique<SaddleFactorization>(ops_.mass, ops_.divergence, pin_);
    return projector_->solve_velocity_rhs(ops_.mass * v_free).first;
  }

  SystemState initial_state(const Vector& v0_full) const {
    SystemState s;
    s.t = 0.0;
    s.v = project_divergence_free(ops_.restrict_to_free(v0_full));
    s.p = Vector::Zero(ops_.num_pressure());
    return s;
  }

  SystemState initial_state() const {
    if (!config_.initial) return initial_state(Vector::Zero(space_.num_velocity_dofs()));
    return initial_state(interpolate(space_, config_.initial, 0.0));
  }

  SystemState step(const SystemState& s) const {
    const double theta = config_.theta;
    const double t1 = s.t + config_.dt;
    Vector rhs = (inertial_ * s.v) / config_.dt;
    if (theta < 1.0) rhs -= (1.0 - theta) * (dissipative_ * s.v);
    rhs += theta * load(t1);
    if (theta < 1.0) rhs += (1.0 - theta) * load(s.t);
    auto [v, p] = step_->solve_velocity_rhs(rhs);
    check_divergence(v);
    return {t1, std::move(v), std::move(p)};
  }

  /// Steps from the initial state to T, handing every state (initial included) to the observer.
  void run(const std::function<void(const SystemState&)>& observer) const { run(initial_state(), observer); }

  void run(SystemState state, const std::function<void(const SystemState&)>& observer) const {
    observer(state);
    const int n = config_.num_steps();
    for (int i = 1; i <= n; ++i) {
      SystemState next = step(state);
      next.t = i * config_.dt;
      observer(next);
      state = std::move(next);
    }
  }

  std::vector<SystemState> trajectory() const {
    std::vector<SystemState> out;
    run([&](const SystemState& s) { out.push_back(s); });
    return out;
  }

  /// Steady problem A_lambda v - B^T p = F(t) - sum S_k(t) b_k, B v = 0.
  std::pair<Vector, Vector> solve_steady(double t = 0.0) const {
    if (!steady_) steady_ = std::make_unique<SaddleFactorization>(dissipative_, ops_.divergence, pin_);
    auto sol = steady_->solve_velocity_rhs(load(t));
    check_divergence(sol.first);
    return sol;
  }

  double divergence_norm(const Vector& v) const { return (ops_.divergence * v).lpNorm<Eigen::Infinity>(); }

 private:
  void check_divergence(const Vector& v) const {
    const double scale = std::max(1.0, v.lpNorm<Eigen::Infinity>());
    if (divergence_norm(v) > config_.divergence_tolerance * scale)
      throw NumericalBreakdown("discrete divergence " + std::to_string(divergence_norm(v)) + " exceeds tolerance");
  }

  const TaylorHoodSpace& space_;
  const ConstrainedOperators& ops_;
  RunConfig config_;
  bool pin_ = false;
  std::vector<std::string> warnings_;
  SparseMatrix inertial_;
  SparseMatrix dissipative_;
  std::unique_ptr<SaddleFactorization> step_;
  mutable std::unique_ptr<SaddleFactorization> projector_;
  mutable std::unique_ptr<SaddleFactorization> steady_;
};

}  // namespace odstokes
