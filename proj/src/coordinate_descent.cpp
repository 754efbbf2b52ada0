#include <algorithm>
#include <cmath>
#include <optional>
#include <variant>

#include "ksgl/solver.hpp"

namespace ksgl {

namespace {

double soft_threshold(double x, double t) {
  if (x > t) return x - t;
  if (x < -t) return x + t;
  return 0.0;
}

struct Factor {
  const Matrix* v;
  double weight;
};

std::vector<Factor> theta_factors(const HessianRep& hess) {
  std::vector<Factor> out;
  if (const auto* e = std::get_if<ExactHessianRep>(&hess)) {
    for (const Matrix& v : e->v_theta) out.push_back({&v, 1.0});
  } else {
    const auto& a = std::get<ApproxHessianRep>(hess);
    for (int k = 0; k < a.k_trunc; ++k) out.push_back({&a.v_theta[k], a.weight(k, true)});
  }
  return out;
}

std::vector<Factor> psi_factors(const HessianRep& hess) {
  std::vector<Factor> out;
  if (const auto* e = std::get_if<ExactHessianRep>(&hess)) {
    for (const Matrix& v : e->v_psi) out.push_back({&v, 1.0});
  } else {
    const auto& a = std::get<ApproxHessianRep>(hess);
    for (int k = 0; k < a.k_trunc; ++k) out.push_back({&a.v_psi[k], a.weight(k, false)});
  }
  return out;
}

// One factor block (theta or psi) of the quadratic model. Keeps U_k = D V_k
// so that (V_k D V_k)_ij costs one dot product.
class Block {
 public:
  Block(std::vector<Factor> factors, Eigen::Index n) : factors_(std::move(factors)), d_(Matrix::Zero(n, n)) {
    u_.assign(factors_.size(), Matrix::Zero(n, n));
  }

  // Curvature along the coordinate and the model gradient from this block.
  void coefficients(int i, int j, double* a, double* b) const {
    double aa = 0.0, bb = 0.0;
    for (std::size_t k = 0; k < factors_.size(); ++k) {
      const Matrix& v = *factors_[k].v;
      const double w = factors_[k].weight;
      aa += i == j ? w * v(i, i) * v(i, i) : w * (v(i, j) * v(i, j) + v(i, i) * v(j, j));
      bb += w * v.col(i).dot(u_[k].col(j));
    }
    *a = aa;
    *b = bb;
  }

  void apply(int i, int j, double mu) {
    d_(i, j) += mu;
    if (i != j) d_(j, i) += mu;
    for (std::size_t k = 0; k < factors_.size(); ++k) {
      const Matrix& v = *factors_[k].v;
      u_[k].row(i) += mu * v.col(j).transpose();
      if (i != j) u_[k].row(j) += mu * v.col(i).transpose();
    }
  }

  const Matrix& d() const { return d_; }

 private:
  std::vector<Factor> factors_;
  Matrix d_;
  std::vector<Matrix> u_;
};

// Theta/psi coupling of the exact Hessian. With e_l = q_l^T D_theta q_l and
// d_k = q_k^T D_psi q_k, the cross contribution to a theta coordinate (i,j)
// is sum_l Q_il Q_jl u_l where u = Lw2 d, and symmetrically z = Lw2^T e.
class Coupling {
 public:
  explicit Coupling(const ExactHessianRep& rep)
      : qt_(rep.eig_theta.vectors),
        qp_(rep.eig_psi.vectors),
        lw2_(rep.lambda_w.cwiseAbs2()),
        u_(Vector::Zero(rep.eig_theta.size())),
        z_(Vector::Zero(rep.eig_psi.size())) {}

  double theta_term(int i, int j) const { return (qt_.row(i).cwiseProduct(qt_.row(j))).dot(u_.transpose()); }
  double psi_term(int i, int j) const { return (qp_.row(i).cwiseProduct(qp_.row(j))).dot(z_.transpose()); }

  void theta_moved(int i, int j, double mu) {
    const double scale = i == j ? mu : 2.0 * mu;
    const Vector de = scale * qt_.row(i).cwiseProduct(qt_.row(j)).transpose();
    z_.noalias() += lw2_.transpose() * de;
  }
  void psi_moved(int i, int j, double mu) {
    const double scale = i == j ? mu : 2.0 * mu;
    const Vector dd = scale * qp_.row(i).cwiseProduct(qp_.row(j)).transpose();
    u_.noalias() += lw2_ * dd;
  }

 private:
  const Matrix& qt_;
  const Matrix& qp_;
  Matrix lw2_;
  Vector u_;
  Vector z_;
};

struct Job {
  bool theta;
  int i;
  int j;
};

double penalty_change(const Matrix& x, const Matrix& d, double weight) {
  double acc = 0.0;
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      if (i != j) acc += std::abs(x(i, j) + d(i, j)) - std::abs(x(i, j));
    }
  }
  return weight * acc;
}

// vec(D)^T H vec(D) restricted to one diagonal block.
double block_quadratic(const std::vector<Factor>& factors, const Matrix& d) {
  double acc = 0.0;
  for (const Factor& f : factors) {
    const Matrix dv = d * *f.v;
    acc += f.weight * (dv.cwiseProduct(dv.transpose())).sum();
  }
  return acc;
}

}  // namespace

DirectionPair cd_direction(const KsModel& model, const Gradient& grad, const HessianRep& hess,
                           const ActiveSets& active, const Penalty& gamma, int sweeps, Rng& rng) {
  const double p = static_cast<double>(model.p()), q = static_cast<double>(model.q());
  const double pen_theta = q * gamma.theta, pen_psi = p * gamma.psi;
  Block bt(theta_factors(hess), model.p());
  Block bp(psi_factors(hess), model.q());
  std::optional<Coupling> coupling;
  if (const auto* e = std::get_if<ExactHessianRep>(&hess)) coupling.emplace(*e);

  std::vector<Job> jobs;
  jobs.reserve(active.theta.size() + active.psi.size());
  for (const Coordinate& c : active.theta) jobs.push_back({true, c.i, c.j});
  for (const Coordinate& c : active.psi) jobs.push_back({false, c.i, c.j});

  for (int s = 0; s < sweeps; ++s) {
    std::shuffle(jobs.begin(), jobs.end(), rng);
    for (const Job& job : jobs) {
      Block& blk = job.theta ? bt : bp;
      const Matrix& x = job.theta ? model.theta() : model.psi();
      const Matrix& g = job.theta ? grad.theta : grad.psi;
      double a = 0.0, b = 0.0;
      blk.coefficients(job.i, job.j, &a, &b);
      b += g(job.i, job.j);
      if (coupling) b += job.theta ? coupling->theta_term(job.i, job.j) : coupling->psi_term(job.i, job.j);
      if (!(a > 0.0) || !std::isfinite(b)) {
        throw NumericalError("coordinate descent hit a non-positive curvature coefficient");
      }
      double mu;
      if (job.i == job.j) {
        mu = -b / a;
      } else {
        const double c = x(job.i, job.j) + blk.d()(job.i, job.j);
        mu = -c + soft_threshold(c - b / a, (job.theta ? pen_theta : pen_psi) / a);
      }
      if (mu == 0.0) continue;
      blk.apply(job.i, job.j, mu);
      if (coupling) {
        if (job.theta) {
          coupling->theta_moved(job.i, job.j, mu);
        } else {
          coupling->psi_moved(job.i, job.j, mu);
        }
      }
    }
  }
  return DirectionPair{bt.d(), bp.d()};
}

double quadratic_model(const KsModel& model, const Gradient& grad, const HessianRep& hess,
                       const DirectionPair& d, const Penalty& gamma) {
  double quad = block_quadratic(theta_factors(hess), d.theta) + block_quadratic(psi_factors(hess), d.psi);
  if (const auto* e = std::get_if<ExactHessianRep>(&hess)) {
    const Matrix& qt = e->eig_theta.vectors;
    const Matrix& qp = e->eig_psi.vectors;
    const Vector et = (qt.transpose() * d.theta * qt).diagonal();
    const Vector dp = (qp.transpose() * d.psi * qp).diagonal();
    quad += 2.0 * et.dot(e->lambda_w.cwiseAbs2() * dp);
  }
  return 0.5 * quad + predicted_decrease(model, grad, d, gamma);
}

double predicted_decrease(const KsModel& model, const Gradient& grad, const DirectionPair& d,
                          const Penalty& gamma) {
  const double p = static_cast<double>(model.p()), q = static_cast<double>(model.q());
  return grad.theta.cwiseProduct(d.theta).sum() + grad.psi.cwiseProduct(d.psi).sum() +
         penalty_change(model.theta(), d.theta, q * gamma.theta) +
         penalty_change(model.psi(), d.psi, p * gamma.psi);
}

}  // namespace ksgl
