#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <vector>

#include "ksgl/errors.hpp"

namespace ksgl {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Ascending eigenvalues with orthonormal eigenvectors in the columns.
struct EigenSystem {
  Vector values;
  Matrix vectors;

  Eigen::Index size() const { return values.size(); }
  double min() const { return values(0); }
  double max() const { return values(values.size() - 1); }
};

// Second-moment statistics of n matrix-variate observations (q x p each).
struct SampleStats {
  Matrix s;  // p x p, feature-side
  Matrix t;  // q x q, sample-side
  int n = 0;

  Eigen::Index p() const { return s.rows(); }
  Eigen::Index q() const { return t.rows(); }
};

struct Gradient {
  Matrix theta;
  Matrix psi;
};

struct ObjectiveValue {
  double f = 0.0;
  double g = 0.0;  // smooth part
  double h = 0.0;  // l1 penalty
};

struct Penalty {
  double theta = 0.0;
  double psi = 0.0;
};

// Per-feature block-trace sums, per-sample sums and the full trace of a
// Kronecker-sum precision.
struct DiagonalSums {
  Vector per_feature;  // length p
  Vector per_sample;   // length q
  double trace = 0.0;
};

// Feature factor theta (p x p) and sample factor psi (q x q), with their
// eigensystems computed at construction. The Kronecker sum is positive
// definite: min eig(theta) + min eig(psi) > 0.
class KsModel {
 public:
  KsModel(Matrix theta, Matrix psi);
  // Reuses eigensystems computed elsewhere (e.g. during a line search).
  KsModel(Matrix theta, Matrix psi, EigenSystem eig_theta, EigenSystem eig_psi);

  static KsModel identity(Eigen::Index p, Eigen::Index q);

  const Matrix& theta() const { return theta_; }
  const Matrix& psi() const { return psi_; }
  const EigenSystem& eig_theta() const { return eig_theta_; }
  const EigenSystem& eig_psi() const { return eig_psi_; }
  Eigen::Index p() const { return theta_.rows(); }
  Eigen::Index q() const { return psi_.rows(); }

  // (theta + c I, psi - c I); eigenvectors are carried over.
  KsModel shifted(double c) const;

 private:
  void validate() const;

  Matrix theta_;
  Matrix psi_;
  EigenSystem eig_theta_;
  EigenSystem eig_psi_;
};

bool is_symmetric(const Matrix& m, double tol = 1e-12);
void require_symmetric(const Matrix& m, const char* what);
void require_finite(const Matrix& m, const char* what);

// Sum over i != j of |m_ij|.
double offdiag_l1(const Matrix& m);
std::size_t offdiag_nnz(const Matrix& m, double threshold = 0.0);

SampleStats sample_stats(const std::vector<Matrix>& data);

EigenSystem eigendecompose(const Matrix& m);

// log det of the Kronecker sum from the factor spectra.
double ks_logdet(const EigenSystem& theta, const EigenSystem& psi);

// theta (x) I_q + I_p (x) psi, refused above max_dim rows.
Matrix kron_sum_dense(const Matrix& theta, const Matrix& psi, Eigen::Index max_dim = 10000);

ObjectiveValue objective(const SampleStats& stats, const KsModel& model, const Penalty& gamma);

// Smooth-part gradient from the factor eigensystems.
Gradient gradient(const SampleStats& stats, const KsModel& model);

// Dense reference: inverts the full Kronecker sum and collapses it.
Gradient gradient_oracle(const SampleStats& stats, const Matrix& theta, const Matrix& psi,
                         Eigen::Index max_dim = 400);

DiagonalSums diagonal_sums(const Matrix& omega, Eigen::Index p, Eigen::Index q);

struct FactorDiagonals {
  Vector theta;
  Vector psi;
};

// Splits the diagonal of a Kronecker sum between the factors so that
// tr(psi) = rho * tr(theta).
FactorDiagonals identify_diagonals(const DiagonalSums& sums, double rho);

// Moves along the unidentifiable direction (cI, -cI) until
// tr(psi) = rho * tr(theta).
KsModel adjust_trace_ratio(const KsModel& model, double rho);

}  // namespace ksgl
