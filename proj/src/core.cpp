#include "ksgl/core.hpp"

#include <cmath>
#include <sstream>
#include <string>

namespace ksgl {

namespace {

std::string shape(const Matrix& m) {
  std::ostringstream os;
  os << m.rows() << "x" << m.cols();
  return os.str();
}

void require_square(const Matrix& m, const char* what) {
  if (m.rows() != m.cols() || m.rows() == 0) {
    throw InputError(std::string(what) + " must be square and non-empty, got " + shape(m));
  }
}

// Column l holds 1 / (lambda_theta_l + lambda_psi_k) over k.
Matrix inverse_eigen_sums(const EigenSystem& et, const EigenSystem& ep) {
  const Eigen::Index p = et.size(), q = ep.size();
  Matrix out(q, p);
  for (Eigen::Index l = 0; l < p; ++l) {
    for (Eigen::Index k = 0; k < q; ++k) out(k, l) = 1.0 / (et.values(l) + ep.values(k));
  }
  return out;
}

}  // namespace

bool is_symmetric(const Matrix& m, double tol) {
  if (m.rows() != m.cols()) return false;
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    for (Eigen::Index i = j + 1; i < m.rows(); ++i) {
      const double scale = std::max({1.0, std::abs(m(i, j)), std::abs(m(j, i))});
      if (std::abs(m(i, j) - m(j, i)) > tol * scale) return false;
    }
  }
  return true;
}

void require_symmetric(const Matrix& m, const char* what) {
  require_square(m, what);
  if (!is_symmetric(m)) throw InputError(std::string(what) + " is not symmetric");
}

void require_finite(const Matrix& m, const char* what) {
  if (!m.allFinite()) throw InputError(std::string(what) + " has non-finite entries");
}

double offdiag_l1(const Matrix& m) {
  return m.cwiseAbs().sum() - m.diagonal().cwiseAbs().sum();
}

std::size_t offdiag_nnz(const Matrix& m, double threshold) {
  std::size_t count = 0;
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      if (i != j && std::abs(m(i, j)) > threshold) ++count;
    }
  }
  return count;
}

// ---------------------------------------------------------------- KsModel

KsModel::KsModel(Matrix theta, Matrix psi) : theta_(std::move(theta)), psi_(std::move(psi)) {
  require_symmetric(theta_, "theta");
  require_symmetric(psi_, "psi");
  eig_theta_ = eigendecompose(theta_);
  eig_psi_ = eigendecompose(psi_);
  validate();
}

KsModel::KsModel(Matrix theta, Matrix psi, EigenSystem eig_theta, EigenSystem eig_psi)
    : theta_(std::move(theta)),
      psi_(std::move(psi)),
      eig_theta_(std::move(eig_theta)),
      eig_psi_(std::move(eig_psi)) {
  require_square(theta_, "theta");
  require_square(psi_, "psi");
  if (eig_theta_.size() != theta_.rows() || eig_psi_.size() != psi_.rows()) {
    throw InputError("eigensystem size does not match its factor");
  }
  validate();
}

KsModel KsModel::identity(Eigen::Index p, Eigen::Index q) {
  return KsModel(Matrix::Identity(p, p), Matrix::Identity(q, q));
}

void KsModel::validate() const {
  const double lo = eig_theta_.min() + eig_psi_.min();
  if (!(lo > 0.0)) {
    std::ostringstream os;
    os << "Kronecker sum is not positive definite: min eig(theta) + min eig(psi) = " << lo;
    throw NotPositiveDefiniteError(os.str());
  }
}

KsModel KsModel::shifted(double c) const {
  EigenSystem et = eig_theta_, ep = eig_psi_;
  et.values.array() += c;
  ep.values.array() -= c;
  Matrix th = theta_, ps = psi_;
  th.diagonal().array() += c;
  ps.diagonal().array() -= c;
  return KsModel(std::move(th), std::move(ps), std::move(et), std::move(ep));
}

// ------------------------------------------------------------- statistics

SampleStats sample_stats(const std::vector<Matrix>& data) {
  if (data.empty()) throw InputError("no observations given");
  const Eigen::Index q = data.front().rows(), p = data.front().cols();
  if (p == 0 || q == 0) throw InputError("observation has an empty dimension");
  SampleStats st;
  st.s = Matrix::Zero(p, p);
  st.t = Matrix::Zero(q, q);
  for (std::size_t i = 0; i < data.size(); ++i) {
    const Matrix& y = data[i];
    if (y.rows() != q || y.cols() != p) {
      throw InputError("observation " + std::to_string(i) + " has shape " + shape(y) +
                       ", expected " + std::to_string(q) + "x" + std::to_string(p));
    }
    require_finite(y, "observation");
    st.s.noalias() += y.transpose() * y;
    st.t.noalias() += y * y.transpose();
  }
  const double n = static_cast<double>(data.size());
  st.s /= n * static_cast<double>(q);
  st.t /= n * static_cast<double>(p);
  st.s = 0.5 * (st.s + st.s.transpose()).eval();
  st.t = 0.5 * (st.t + st.t.transpose()).eval();
  st.n = static_cast<int>(data.size());
  return st;
}

EigenSystem eigendecompose(const Matrix& m) {
  require_square(m, "matrix");
  if (!m.allFinite()) throw NumericalError("eigendecomposition input has non-finite entries");
  Eigen::SelfAdjointEigenSolver<Matrix> solver(m);
  if (solver.info() != Eigen::Success) {
    std::ostringstream os;
    os << "eigensolver did not converge (n=" << m.rows() << ", frobenius norm " << m.norm()
       << ", max abs " << m.cwiseAbs().maxCoeff() << ")";
    throw NumericalError(os.str());
  }
  return EigenSystem{solver.eigenvalues(), solver.eigenvectors()};
}

double ks_logdet(const EigenSystem& theta, const EigenSystem& psi) {
  double acc = 0.0;
  for (Eigen::Index l = 0; l < theta.size(); ++l) {
    for (Eigen::Index k = 0; k < psi.size(); ++k) {
      const double lam = theta.values(l) + psi.values(k);
      if (!(lam > 0.0)) throw NotPositiveDefiniteError("Kronecker sum has a non-positive eigenvalue");
      acc += std::log(lam);
    }
  }
  return acc;
}

Matrix kron_sum_dense(const Matrix& theta, const Matrix& psi, Eigen::Index max_dim) {
  require_square(theta, "theta");
  require_square(psi, "psi");
  const Eigen::Index p = theta.rows(), q = psi.rows();
  if (p * q > max_dim) {
    throw ResourceError("dense Kronecker sum of size " + std::to_string(p * q) + " exceeds cap " +
                        std::to_string(max_dim));
  }
  Matrix omega = Matrix::Zero(p * q, p * q);
  for (Eigen::Index i = 0; i < p; ++i) {
    for (Eigen::Index j = 0; j < p; ++j) {
      for (Eigen::Index k = 0; k < q; ++k) omega(i * q + k, j * q + k) += theta(i, j);
    }
    omega.block(i * q, i * q, q, q) += psi;
  }
  return omega;
}

ObjectiveValue objective(const SampleStats& stats, const KsModel& model, const Penalty& gamma) {
  const double p = static_cast<double>(model.p()), q = static_cast<double>(model.q());
  if (stats.p() != model.p() || stats.q() != model.q()) {
    throw InputError("statistics and model dimensions differ");
  }
  ObjectiveValue v;
  v.g = q * stats.s.cwiseProduct(model.theta()).sum() + p * stats.t.cwiseProduct(model.psi()).sum() -
        ks_logdet(model.eig_theta(), model.eig_psi());
  v.h = q * gamma.theta * offdiag_l1(model.theta()) + p * gamma.psi * offdiag_l1(model.psi());
  v.f = v.g + v.h;
  return v;
}

Gradient gradient(const SampleStats& stats, const KsModel& model) {
  if (stats.p() != model.p() || stats.q() != model.q()) {
    throw InputError("statistics and model dimensions differ");
  }
  const EigenSystem& et = model.eig_theta();
  const EigenSystem& ep = model.eig_psi();
  const Matrix inv = inverse_eigen_sums(et, ep);  // q x p
  const Vector wt = inv.colwise().sum().transpose();
  const Vector wp = inv.rowwise().sum();
  Gradient g;
  g.theta = static_cast<double>(model.q()) * stats.s -
            et.vectors * wt.asDiagonal() * et.vectors.transpose();
  g.psi = static_cast<double>(model.p()) * stats.t -
          ep.vectors * wp.asDiagonal() * ep.vectors.transpose();
  g.theta = 0.5 * (g.theta + g.theta.transpose()).eval();
  g.psi = 0.5 * (g.psi + g.psi.transpose()).eval();
  return g;
}

Gradient gradient_oracle(const SampleStats& stats, const Matrix& theta, const Matrix& psi,
                         Eigen::Index max_dim) {
  const Eigen::Index p = theta.rows(), q = psi.rows();
  const Matrix omega = kron_sum_dense(theta, psi, max_dim);
  Eigen::LLT<Matrix> llt(omega);
  if (llt.info() != Eigen::Success) throw NotPositiveDefiniteError("Kronecker sum is not positive definite");
  const Matrix w = llt.solve(Matrix::Identity(p * q, p * q));
  Matrix wt = Matrix::Zero(p, p), wp = Matrix::Zero(q, q);
  for (Eigen::Index i = 0; i < p; ++i) {
    for (Eigen::Index j = 0; j < p; ++j) {
      double acc = 0.0;
      for (Eigen::Index k = 0; k < q; ++k) acc += w(i * q + k, j * q + k);
      wt(i, j) = acc;
    }
    wp += w.block(i * q, i * q, q, q);
  }
  return Gradient{static_cast<double>(q) * stats.s - wt, static_cast<double>(p) * stats.t - wp};
}

// ------------------------------------------------------------------ gauge

DiagonalSums diagonal_sums(const Matrix& omega, Eigen::Index p, Eigen::Index q) {
  if (omega.rows() != p * q || omega.cols() != p * q) throw InputError("omega size is not p*q");
  DiagonalSums d;
  d.per_feature = Vector::Zero(p);
  d.per_sample = Vector::Zero(q);
  for (Eigen::Index j = 0; j < p; ++j) {
    for (Eigen::Index k = 0; k < q; ++k) {
      const double v = omega(j * q + k, j * q + k);
      d.per_feature(j) += v;
      d.per_sample(k) += v;
    }
  }
  d.trace = omega.trace();
  return d;
}

FactorDiagonals identify_diagonals(const DiagonalSums& sums, double rho) {
  if (!(rho > 0.0)) throw InputError("trace ratio must be positive");
  const Eigen::Index p = sums.per_feature.size(), q = sums.per_sample.size();
  if (p == 0 || q == 0) throw InputError("empty diagonal sums");
  const double scale = std::max(1.0, std::abs(sums.trace));
  if (std::abs(sums.per_feature.sum() - sums.trace) > 1e-10 * scale ||
      std::abs(sums.per_sample.sum() - sums.trace) > 1e-10 * scale) {
    throw InputError("diagonal sums are inconsistent with the trace");
  }
  const double denom = static_cast<double>(q) + rho * static_cast<double>(p);
  FactorDiagonals out;
  out.theta = (sums.per_feature.array() - rho * sums.trace / denom) / static_cast<double>(q);
  out.psi = (sums.per_sample.array() - sums.trace / denom) / static_cast<double>(p);
  return out;
}

KsModel adjust_trace_ratio(const KsModel& model, double rho) {
  if (!(rho > 0.0)) throw InputError("trace ratio must be positive");
  const double p = static_cast<double>(model.p()), q = static_cast<double>(model.q());
  const double c = (model.psi().trace() - rho * model.theta().trace()) / (q + rho * p);
  KsModel out = model.shifted(c);
  if (!(std::abs(out.theta().trace()) > 0.0)) throw InputError("degenerate gauge: tr(theta) is zero");
  return out;
}

}  // namespace ksgl
