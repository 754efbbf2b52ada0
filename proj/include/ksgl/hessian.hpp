#pragma once

#include <variant>
#include <vector>

#include "ksgl/core.hpp"

namespace ksgl {

// Full Hessian of the smooth objective in eigen-form. Vectorization is
// column-major, theta coordinates first (p^2) then psi (q^2).
//
// v_theta[k] = Q_theta (Lambda_theta + lambda_psi_k I)^-1 Q_theta^T, one per
// psi eigenvalue, and symmetrically for v_psi.
struct ExactHessianRep {
  EigenSystem eig_theta;
  EigenSystem eig_psi;
  Matrix lambda_w;  // p x q, entry (l,k) = 1 / (lambda_theta_l + lambda_psi_k)
  std::vector<Matrix> v_theta;
  std::vector<Matrix> v_psi;
};

// Block-diagonal approximation keeping the k_trunc smallest co-eigenvalues
// and repeating the last retained factor for the remaining ones.
struct ApproxHessianRep {
  int k_trunc = 1;
  std::vector<Matrix> v_theta;  // k_trunc matrices, p x p
  std::vector<Matrix> v_psi;    // k_trunc matrices, q x q
  double tail_weight_theta = 0.0;  // q - K
  double tail_weight_psi = 0.0;    // p - K

  // Weight on factor k in the block sum; the last factor carries the tail.
  double weight(int k, bool theta) const {
    const double tail = theta ? tail_weight_theta : tail_weight_psi;
    return k + 1 == k_trunc ? 1.0 + tail : 1.0;
  }
};

using HessianRep = std::variant<ExactHessianRep, ApproxHessianRep>;

ExactHessianRep build_exact(const KsModel& model);
ApproxHessianRep build_approx(const KsModel& model, int k_trunc);
// k_trunc == 0 selects the exact representation.
HessianRep build_hessian(const KsModel& model, int k_trunc);

// Eigen-form dense assembly: (Q (x) Q) Lambda_H (Q (x) Q)^T blocks plus the
// cross block built from the squared lambda_w grid. Test scale only.
Matrix assemble_eigen_form(const ExactHessianRep& rep, Eigen::Index max_dim = 2000);
// Sum of V (x) V over the stored factors plus the same cross block.
Matrix assemble_from_factors(const ExactHessianRep& rep, Eigen::Index max_dim = 2000);
// Block-diagonal approximate Hessian.
Matrix assemble_dense(const ApproxHessianRep& rep, Eigen::Index max_dim = 2000);

// Brute-force references from the dense inverse W of the Kronecker sum.
// Selector form: P^T (W (x) W) P.
Matrix hessian_oracle_selector(const Matrix& theta, const Matrix& psi);
// Two-stage collapse of vec(W) vec(W)^T through per-coordinate intermediates.
Matrix hessian_oracle_collapse(const Matrix& theta, const Matrix& psi);
// Both of the above, cross-checked to 1e-10 before returning.
Matrix hessian_oracle_full(const Matrix& theta, const Matrix& psi);

// Eigenvalue grids of the diagonal blocks in the factor eigenbasis.
// Entry (l,m) is the eigenvalue for eigenvector q_l (x) q_m. k_trunc == 0 is exact.
Matrix theta_block_spectrum(const KsModel& model, int k_trunc);
Matrix psi_block_spectrum(const KsModel& model, int k_trunc);

struct SpectrumBounds {
  double min = 0.0;
  double max = 0.0;
};

// k_trunc == 0: closed-form smallest nonzero and largest eigenvalue
// expressions for the exact Hessian. k_trunc >= 1: smallest and largest
// eigenvalue of the approximate Hessian.
SpectrumBounds eig_bounds(const KsModel& model, int k_trunc);

// Dense Kronecker product, used by the oracles and tests.
Matrix kron(const Matrix& a, const Matrix& b);

}  // namespace ksgl
