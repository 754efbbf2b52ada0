#include "ksgl/hessian.hpp"

#include <algorithm>
#include <string>

namespace ksgl {

namespace {

Matrix sym(const Matrix& m) { return 0.5 * (m + m.transpose()); }

Matrix lambda_w_grid(const EigenSystem& et, const EigenSystem& ep) {
  Matrix lw(et.size(), ep.size());
  for (Eigen::Index l = 0; l < et.size(); ++l) {
    for (Eigen::Index k = 0; k < ep.size(); ++k) lw(l, k) = 1.0 / (et.values(l) + ep.values(k));
  }
  return lw;
}

void check_dim(Eigen::Index n, Eigen::Index cap) {
  if (n > cap) {
    throw ResourceError("dense Hessian of size " + std::to_string(n) + " exceeds cap " + std::to_string(cap));
  }
}

// Columns are q_l (x) q_l for each eigenvector of the factor.
Matrix self_kron_columns(const Matrix& q) {
  const Eigen::Index n = q.rows();
  Matrix out(n * n, n);
  for (Eigen::Index l = 0; l < n; ++l) {
    for (Eigen::Index a = 0; a < n; ++a) out.col(l).segment(a * n, n) = q(a, l) * q.col(l);
  }
  return out;
}

Matrix cross_block(const ExactHessianRep& rep) {
  const Matrix a = self_kron_columns(rep.eig_theta.vectors);
  const Matrix b = self_kron_columns(rep.eig_psi.vectors);
  return a * rep.lambda_w.cwiseAbs2() * b.transpose();
}

Matrix block_spectrum(const Matrix& xi, const std::vector<double>& weights) {
  // xi: n x m, column k holds the co-eigenvalue vector for factor k.
  Matrix grid = Matrix::Zero(xi.rows(), xi.rows());
  for (std::size_t k = 0; k < weights.size(); ++k) {
    const auto col = xi.col(static_cast<Eigen::Index>(k));
    grid.noalias() += weights[k] * col * col.transpose();
  }
  return grid;
}

std::vector<double> factor_weights(Eigen::Index count, int k_trunc) {
  if (k_trunc == 0) return std::vector<double>(static_cast<std::size_t>(count), 1.0);
  std::vector<double> w(static_cast<std::size_t>(k_trunc), 1.0);
  w.back() += static_cast<double>(count - k_trunc);
  return w;
}

void check_k(const KsModel& model, int k_trunc) {
  if (k_trunc < 0 || k_trunc > std::min(model.p(), model.q())) {
    throw InputError("k_trunc must lie in [0, min(p,q)], got " + std::to_string(k_trunc));
  }
}

}  // namespace

Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index j = 0; j < a.cols(); ++j) {
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return out;
}

ExactHessianRep build_exact(const KsModel& model) {
  ExactHessianRep rep;
  rep.eig_theta = model.eig_theta();
  rep.eig_psi = model.eig_psi();
  rep.lambda_w = lambda_w_grid(rep.eig_theta, rep.eig_psi);
  const Matrix& qt = rep.eig_theta.vectors;
  const Matrix& qp = rep.eig_psi.vectors;
  rep.v_theta.reserve(static_cast<std::size_t>(model.q()));
  for (Eigen::Index k = 0; k < model.q(); ++k) {
    rep.v_theta.push_back(sym(qt * rep.lambda_w.col(k).asDiagonal() * qt.transpose()));
  }
  rep.v_psi.reserve(static_cast<std::size_t>(model.p()));
  for (Eigen::Index l = 0; l < model.p(); ++l) {
    rep.v_psi.push_back(sym(qp * rep.lambda_w.row(l).transpose().asDiagonal() * qp.transpose()));
  }
  return rep;
}

ApproxHessianRep build_approx(const KsModel& model, int k_trunc) {
  check_k(model, k_trunc);
  if (k_trunc < 1) throw InputError("approximate Hessian needs k_trunc >= 1");
  ApproxHessianRep rep;
  rep.k_trunc = k_trunc;
  const Matrix lw = lambda_w_grid(model.eig_theta(), model.eig_psi());
  const Matrix& qt = model.eig_theta().vectors;
  const Matrix& qp = model.eig_psi().vectors;
  for (int k = 0; k < k_trunc; ++k) {
    rep.v_theta.push_back(sym(qt * lw.col(k).asDiagonal() * qt.transpose()));
    rep.v_psi.push_back(sym(qp * lw.row(k).transpose().asDiagonal() * qp.transpose()));
  }
  rep.tail_weight_theta = static_cast<double>(model.q() - k_trunc);
  rep.tail_weight_psi = static_cast<double>(model.p() - k_trunc);
  return rep;
}

HessianRep build_hessian(const KsModel& model, int k_trunc) {
  check_k(model, k_trunc);
  if (k_trunc == 0) return build_exact(model);
  return build_approx(model, k_trunc);
}

Matrix assemble_eigen_form(const ExactHessianRep& rep, Eigen::Index max_dim) {
  const Eigen::Index p = rep.eig_theta.size(), q = rep.eig_psi.size();
  check_dim(p * p + q * q, max_dim);
  const Matrix& qt = rep.eig_theta.vectors;
  const Matrix& qp = rep.eig_psi.vectors;
  const Matrix grid_t = block_spectrum(rep.lambda_w, factor_weights(q, 0));
  const Matrix grid_p = block_spectrum(rep.lambda_w.transpose(), factor_weights(p, 0));
  // Eigenvalue of q_a (x) q_b sits at kron position a*n + b.
  Vector lt(p * p), lp(q * q);
  for (Eigen::Index a = 0; a < p; ++a)
    for (Eigen::Index b = 0; b < p; ++b) lt(a * p + b) = grid_t(a, b);
  for (Eigen::Index a = 0; a < q; ++a)
    for (Eigen::Index b = 0; b < q; ++b) lp(a * q + b) = grid_p(a, b);
  const Matrix kt = kron(qt, qt), kp = kron(qp, qp);
  Matrix h(p * p + q * q, p * p + q * q);
  h.topLeftCorner(p * p, p * p) = sym(kt * lt.asDiagonal() * kt.transpose());
  h.bottomRightCorner(q * q, q * q) = sym(kp * lp.asDiagonal() * kp.transpose());
  const Matrix c = cross_block(rep);
  h.topRightCorner(p * p, q * q) = c;
  h.bottomLeftCorner(q * q, p * p) = c.transpose();
  return h;
}

Matrix assemble_from_factors(const ExactHessianRep& rep, Eigen::Index max_dim) {
  const Eigen::Index p = rep.eig_theta.size(), q = rep.eig_psi.size();
  check_dim(p * p + q * q, max_dim);
  Matrix h = Matrix::Zero(p * p + q * q, p * p + q * q);
  for (const Matrix& v : rep.v_theta) h.topLeftCorner(p * p, p * p) += kron(v, v);
  for (const Matrix& v : rep.v_psi) h.bottomRightCorner(q * q, q * q) += kron(v, v);
  const Matrix c = cross_block(rep);
  h.topRightCorner(p * p, q * q) = c;
  h.bottomLeftCorner(q * q, p * p) = c.transpose();
  return h;
}

Matrix assemble_dense(const ApproxHessianRep& rep, Eigen::Index max_dim) {
  const Eigen::Index p = rep.v_theta.front().rows(), q = rep.v_psi.front().rows();
  check_dim(p * p + q * q, max_dim);
  Matrix h = Matrix::Zero(p * p + q * q, p * p + q * q);
  for (int k = 0; k < rep.k_trunc; ++k) {
    h.topLeftCorner(p * p, p * p) += rep.weight(k, true) * kron(rep.v_theta[k], rep.v_theta[k]);
    h.bottomRightCorner(q * q, q * q) += rep.weight(k, false) * kron(rep.v_psi[k], rep.v_psi[k]);
  }
  return h;
}

Matrix theta_block_spectrum(const KsModel& model, int k_trunc) {
  check_k(model, k_trunc);
  const Matrix lw = lambda_w_grid(model.eig_theta(), model.eig_psi());
  return block_spectrum(lw, factor_weights(model.q(), k_trunc));
}

Matrix psi_block_spectrum(const KsModel& model, int k_trunc) {
  check_k(model, k_trunc);
  const Matrix lw = lambda_w_grid(model.eig_theta(), model.eig_psi());
  return block_spectrum(lw.transpose(), factor_weights(model.p(), k_trunc));
}

SpectrumBounds eig_bounds(const KsModel& model, int k_trunc) {
  check_k(model, k_trunc);
  const Vector& lt = model.eig_theta().values;
  const Vector& lp = model.eig_psi().values;
  const Eigen::Index p = model.p(), q = model.q();
  auto inv2 = [](double x) { return 1.0 / (x * x); };
  if (k_trunc == 0) {
    return {static_cast<double>(std::min(p, q)) * inv2(lt(p - 1) + lp(q - 1)),
            static_cast<double>(p + q) * inv2(lt(0) + lp(0))};
  }
  const int K = k_trunc;
  auto theta_side = [&](double lam_theta) {
    double acc = 0.0;
    for (int i = 0; i < K; ++i) acc += inv2(lam_theta + lp(i));
    return acc + static_cast<double>(q - K) * inv2(lam_theta + lp(K - 1));
  };
  auto psi_side = [&](double lam_psi) {
    double acc = 0.0;
    for (int j = 0; j < K; ++j) acc += inv2(lt(j) + lam_psi);
    return acc + static_cast<double>(p - K) * inv2(lt(K - 1) + lam_psi);
  };
  return {std::min(theta_side(lt(p - 1)), psi_side(lp(q - 1))),
          std::max(theta_side(lt(0)), psi_side(lp(0)))};
}

}  // namespace ksgl
