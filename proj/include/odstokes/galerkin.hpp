#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <Eigen/SparseQR>

#include "odstokes/errors.hpp"
#include "odstokes/fem.hpp"
#include "odstokes/outlets.hpp"
#include "odstokes/solver.hpp"

namespace odstokes {

using DenseMatrix = Eigen::MatrixXd;

/// Columns: discretely divergence-free, no-slip velocity fields on the free dofs,
/// orthonormal in `metric`.
struct ReducedBasis {
  DenseMatrix columns;
  SparseMatrix metric;

  int size() const { return static_cast<int>(columns.cols()); }
};

/// Surrogate of the V_H product on C0 elements: K + M + sum_k gamma_k G_k.
/// The second-gradient term has no home in P2 and is dropped.
inline SparseMatrix surrogate_metric(const ConstrainedOperators& ops, const std::vector<double>& gamma) {
  SparseMatrix s = ops.stiffness + ops.inertial(gamma);
  s.makeCompressed();
  return s;
}

/// Orthonormal (Euclidean) basis of ker B on the free dofs, via sparse QR of B^T with column pivoting.
inline DenseMatrix divergence_kernel(const ConstrainedOperators& ops) {
  SparseMatrix bt = ops.divergence.transpose();
  bt.makeCompressed();
  Eigen::SparseQR<SparseMatrix, Eigen::COLAMDOrdering<int>> qr;
  qr.compute(bt);
  if (qr.info() != Eigen::Success) throw NumericalBreakdown("sparse QR of the divergence operator failed");
  const auto n = static_cast<Eigen::Index>(ops.num_free());
  const auto rank = static_cast<Eigen::Index>(qr.rank());
  DenseMatrix selector = DenseMatrix::Zero(n, n - rank);
  for (Eigen::Index j = 0; j < n - rank; ++j) selector(rank + j, j) = 1.0;
  DenseMatrix z = qr.matrixQ() * selector;
  return z;
}

inline double gram_deviation(const DenseMatrix& w, const SparseMatrix& metric) {
  const DenseMatrix sw = metric * w;
  const DenseMatrix gram = w.transpose() * sw;
  return (gram - DenseMatrix::Identity(w.cols(), w.cols())).cwiseAbs().maxCoeff();
}

/// Modified Gram-Schmidt in the metric, repeated until the Gram matrix is the identity to 1e-10.
inline void orthonormalize(DenseMatrix& w, const SparseMatrix& metric) {
  if (w.cols() == 0) return;
  for (int pass = 0; pass < 3; ++pass) {
    for (Eigen::Index j = 0; j < w.cols(); ++j) {
      Vector col = w.col(j);
      const double before = col.dot(metric * col);
      for (Eigen::Index i = 0; i < j; ++i) {
        const Vector si = metric * w.col(i);
        col -= si.dot(col) * w.col(i);
      }
      const double norm2 = col.dot(metric * col);
      if (!(norm2 > 1e-20 * before) || !std::isfinite(norm2))
        throw NumericalBreakdown("basis column " + std::to_string(j) + " is linearly dependent");
      w.col(j) = col / std::sqrt(norm2);
    }
    if (gram_deviation(w, metric) <= 1e-10) return;
  }
  throw NumericalBreakdown("loss of orthogonality persists after re-orthogonalization");
}

/// First m discretely divergence-free fields, smoothest first, orthonormal in the surrogate metric.
/// The ordering comes from the generalized eigenproblem K y = mu S y restricted to ker B.
inline ReducedBasis compute_divfree_basis(const ConstrainedOperators& ops, const std::vector<double>& gamma, int m) {
  if (m < 1) throw DimensionError("basis size must be at least 1");
  ReducedBasis basis;
  basis.metric = surrogate_metric(ops, gamma);
  const DenseMatrix z = divergence_kernel(ops);
  if (m > z.cols())
    throw DimensionError("requested " + std::to_string(m) + " basis fields but ker B has dimension " +
                         std::to_string(z.cols()));
  const DenseMatrix kz = ops.stiffness * z;
  const DenseMatrix sz = basis.metric * z;
  DenseMatrix a = z.transpose() * kz;
  DenseMatrix s = z.transpose() * sz;
  a = 0.5 * (a + a.transpose()).eval();
  s = 0.5 * (s + s.transpose()).eval();
  Eigen::GeneralizedSelfAdjointEigenSolver<DenseMatrix> eig(a, s);
  if (eig.info() != Eigen::Success) throw NumericalBreakdown("kernel ordering eigenproblem failed");
  basis.columns = z * eig.eigenvectors().leftCols(m);
  orthonormalize(basis.columns, basis.metric);
  const double div = (ops.divergence * basis.columns).cwiseAbs().maxCoeff();
  if (div > 1e-10) throw NumericalBreakdown("basis is not discretely divergence-free (" + std::to_string(div) + ")");
  return basis;
}

/// W R for a seeded Gaussian m x m matrix R: an admissible but non-orthonormal basis of an m-dimensional
/// subspace of ker B.
inline DenseMatrix random_admissible_basis(const DenseMatrix& kernel, int m, std::mt19937_64& rng) {
  if (m < 1 || m > kernel.cols()) throw DimensionError("random basis size out of range");
  std::normal_distribution<double> dist;
  DenseMatrix r(kernel.cols(), m);
  for (Eigen::Index j = 0; j < r.cols(); ++j)
    for (Eigen::Index i = 0; i < r.rows(); ++i) r(i, j) = dist(rng);
  return kernel * r;
}

inline DenseMatrix assemble_Mm(const DenseMatrix& w, const ConstrainedOperators& ops, const std::vector<double>& gamma) {
  for (double g : gamma)
    if (g < 0.0) throw InvalidParameter("gamma must be non-negative");
  const SparseMatrix inertial = ops.inertial(gamma);
  DenseMatrix mm = w.transpose() * (inertial * w);
  return 0.5 * (mm + mm.transpose());
}

inline DenseMatrix assemble_Mm(const ReducedBasis& basis, const ConstrainedOperators& ops,
                               const std::vector<double>& gamma) {
  return assemble_Mm(basis.columns, ops, gamma);
}

inline DenseMatrix assemble_Am(const ReducedBasis& basis, const ConstrainedOperators& ops, double nu,
                               const std::vector<double>& lambda) {
  const SparseMatrix diss = ops.dissipative(nu, lambda);
  DenseMatrix am = basis.columns.transpose() * (diss * basis.columns);
  return 0.5 * (am + am.transpose());
}

inline double min_eigenvalue(const DenseMatrix& symmetric) {
  Eigen::SelfAdjointEigenSolver<DenseMatrix> eig(symmetric, Eigen::EigenvaluesOnly);
  return eig.eigenvalues().minCoeff();
}

/// g(0)_i = <v0, w_i> in the orthonormalization metric.
inline Vector project_initial_data(const ReducedBasis& basis, const Vector& v0_free) {
  return basis.columns.transpose() * (basis.metric * v0_free);
}

/// M_m g' + A_m g = r(t) with r(t) = W^T (F(t) - sum_k S_k(t) b_k).
struct ReducedSystem {
  DenseMatrix mass;
  DenseMatrix stiffness;
  std::function<Vector(double)> load;
  Vector initial;
};

inline ReducedSystem build_reduced_system(const ReducedBasis& basis, const TaylorHoodSpace& space,
                                          const ConstrainedOperators& ops, const RunConfig& config,
                                          const Vector& v0_free) {
  ReducedSystem sys;
  sys.mass = assemble_Mm(basis, ops, gammas(config.outlets));
  if (!(min_eigenvalue(sys.mass) > 0.0)) throw SingularSystem("reduced mass matrix is not positive definite");
  sys.stiffness = assemble_Am(basis, ops, config.nu, lambdas(config.outlets));
  auto w = std::make_shared<const DenseMatrix>(basis.columns);
  DenseMatrix wb(basis.size(), static_cast<Eigen::Index>(config.outlets.size()));
  for (std::size_t k = 0; k < config.outlets.size(); ++k) wb.col(static_cast<Eigen::Index>(k)) = basis.columns.transpose() * ops.outlet_source[k];
  std::vector<Signal> sources;
  for (const auto& o : config.outlets) sources.push_back(o.signal);
  const VectorField forcing = config.forcing;
  SparseMatrix restrict_op = ops.prolongation.transpose();
  sys.load = [w, wb, sources, forcing, &space, restrict_op](double t) {
    Vector r = Vector::Zero(w->cols());
    if (forcing) r = w->transpose() * (restrict_op * assemble_load(space, forcing, t));
    for (std::size_t k = 0; k < sources.size(); ++k) r -= sources[k].eval(t) * wb.col(static_cast<Eigen::Index>(k));
    return r;
  };
  sys.initial = project_initial_data(basis, v0_free);
  return sys;
}

struct ReducedTrajectory {
  std::vector<double> t;
  std::vector<Vector> g;
};

/// Theta scheme (M_m/dt + theta A_m) g+ = (M_m/dt - (1-theta) A_m) g + theta r+ + (1-theta) r.
inline ReducedTrajectory integrate_reduced(const ReducedSystem& sys, double dt, double T, double theta) {
  if (!(dt > 0.0)) throw InvalidParameter("dt must be > 0");
  if (!(T > 0.0)) throw InvalidParameter("T must be > 0");
  if (!(theta >= 0.5 && theta <= 1.0)) throw InvalidParameter("theta must lie in [1/2, 1]");
  const DenseMatrix lhs = sys.mass / dt + theta * sys.stiffness;
  Eigen::LLT<DenseMatrix> llt(lhs);
  if (llt.info() != Eigen::Success) throw SingularSystem("reduced step matrix is not positive definite");
  const DenseMatrix explicit_part = sys.mass / dt - (1.0 - theta) * sys.stiffness;

  const int n = static_cast<int>(std::llround(T / dt));
  ReducedTrajectory out;
  out.t.push_back(0.0);
  out.g.push_back(sys.initial);
  Vector r_prev = theta < 1.0 ? sys.load(0.0) : Vector();
  for (int i = 1; i <= n; ++i) {
    const double t = i * dt;
    const Vector r_next = sys.load(t);
    Vector rhs = explicit_part * out.g.back() + theta * r_next;
    if (theta < 1.0) rhs += (1.0 - theta) * r_prev;
    out.t.push_back(t);
    out.g.push_back(llt.solve(rhs));
    r_prev = r_next;
  }
  return out;
}

}  // namespace odstokes
