// Dense brute-force Hessians built from W = (theta (+) psi)^-1. Everything is
// formed with explicit Kronecker products and selector matrices, so these are
// only usable for p*q up to a few dozen.

#include <string>

#include "ksgl/hessian.hpp"

namespace ksgl {

namespace {

constexpr Eigen::Index kMaxPq = 36;

Matrix unit(Eigen::Index n, Eigen::Index i) {
  Matrix e = Matrix::Zero(n, 1);
  e(i, 0) = 1.0;
  return e;
}

Matrix eye(Eigen::Index n) { return Matrix::Identity(n, n); }

Matrix dense_inverse(const Matrix& theta, const Matrix& psi) {
  require_symmetric(theta, "theta");
  require_symmetric(psi, "psi");
  const Eigen::Index pq = theta.rows() * psi.rows();
  if (pq > kMaxPq) {
    throw ResourceError("Hessian oracle limited to p*q <= " + std::to_string(kMaxPq) + ", got " +
                        std::to_string(pq));
  }
  const Matrix omega = kron_sum_dense(theta, psi);
  Eigen::LLT<Matrix> llt(omega);
  if (llt.info() != Eigen::Success) throw NotPositiveDefiniteError("Kronecker sum is not positive definite");
  return llt.solve(eye(pq));
}

Matrix vec(const Matrix& m) { return Eigen::Map<const Matrix>(m.data(), m.size(), 1); }

}  // namespace

Matrix hessian_oracle_selector(const Matrix& theta, const Matrix& psi) {
  const Eigen::Index p = theta.rows(), q = psi.rows();
  const Matrix w = dense_inverse(theta, psi);
  const Matrix ww = kron(w, w);
  const Eigen::Index n = p * p * q * q;
  Matrix sel_theta = Matrix::Zero(n, p * p);
  for (Eigen::Index i = 0; i < q; ++i) {
    const Matrix s = kron(eye(p), unit(q, i));
    sel_theta += kron(s, s);
  }
  Matrix sel_psi = Matrix::Zero(n, q * q);
  for (Eigen::Index j = 0; j < p; ++j) {
    const Matrix s = kron(unit(p, j), eye(q));
    sel_psi += kron(s, s);
  }
  Matrix sel(n, p * p + q * q);
  sel << sel_theta, sel_psi;
  return sel.transpose() * ww * sel;
}

Matrix hessian_oracle_collapse(const Matrix& theta, const Matrix& psi) {
  const Eigen::Index p = theta.rows(), q = psi.rows(), pq = p * q;
  const Matrix w = dense_inverse(theta, psi);
  const Matrix vw = vec(w);
  const Matrix outer = vw * vw.transpose();

  // First stage: fix one feature-side or sample-side index of the outer
  // product of vec(W).
  Matrix m_theta = Matrix::Zero(p * pq, p * pq);
  for (Eigen::Index j = 0; j < q; ++j) {
    const Matrix z = kron(kron(eye(p), unit(q, j)), eye(pq));
    m_theta += z.transpose() * outer * z;
  }
  Matrix m_psi = Matrix::Zero(q * pq, q * pq);
  for (Eigen::Index j = 0; j < p; ++j) {
    const Matrix z = kron(kron(unit(p, j), eye(q)), eye(pq));
    m_psi += z.transpose() * outer * z;
  }

  // Second stage: fix the remaining index; the result is the rearranged
  // block with entries B_ab B_cd at (vec(a,b), vec(c,d)).
  Matrix r_theta = Matrix::Zero(p * p, p * p);
  Matrix r_cross = Matrix::Zero(pq, pq);
  for (Eigen::Index i = 0; i < q; ++i) {
    const Matrix y = kron(eye(p), kron(eye(p), unit(q, i)));
    r_theta += y.transpose() * m_theta * y;
    const Matrix x = kron(eye(q), kron(eye(p), unit(q, i)));
    r_cross += x.transpose() * m_psi * x;
  }
  Matrix r_psi = Matrix::Zero(q * q, q * q);
  for (Eigen::Index i = 0; i < p; ++i) {
    const Matrix y = kron(eye(q), kron(unit(p, i), eye(q)));
    r_psi += y.transpose() * m_psi * y;
  }

  // Undo the rearrangement: (B (x) B)(a*m + c, b*n + d) = B_ab B_cd, and the
  // rearranged block holds it at (b*m + a, d*m + c) with m = rows of B.
  Matrix h = Matrix::Zero(p * p + q * q, p * p + q * q);
  for (Eigen::Index a = 0; a < p; ++a)
    for (Eigen::Index b = 0; b < p; ++b)
      for (Eigen::Index c = 0; c < p; ++c)
        for (Eigen::Index d = 0; d < p; ++d) h(a * p + c, b * p + d) = r_theta(b * p + a, d * p + c);
  for (Eigen::Index a = 0; a < q; ++a)
    for (Eigen::Index b = 0; b < q; ++b)
      for (Eigen::Index c = 0; c < q; ++c)
        for (Eigen::Index d = 0; d < q; ++d)
          h(p * p + a * q + c, p * p + b * q + d) = r_psi(b * q + a, d * q + c);
  // Cross blocks are p x q: rows of B are feature indices.
  for (Eigen::Index a = 0; a < p; ++a)
    for (Eigen::Index b = 0; b < q; ++b)
      for (Eigen::Index c = 0; c < p; ++c)
        for (Eigen::Index d = 0; d < q; ++d) {
          const double v = r_cross(b * p + a, d * p + c);
          h(a * p + c, p * p + b * q + d) = v;
          h(p * p + b * q + d, a * p + c) = v;
        }
  return h;
}

Matrix hessian_oracle_full(const Matrix& theta, const Matrix& psi) {
  const Matrix a = hessian_oracle_selector(theta, psi);
  const Matrix b = hessian_oracle_collapse(theta, psi);
  const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
  const double diff = (a - b).cwiseAbs().maxCoeff();
  if (diff > 1e-10 * scale) {
    throw ConsistencyError("dense Hessian assemblies disagree by " + std::to_string(diff));
  }
  return a;
}

}  // namespace ksgl
