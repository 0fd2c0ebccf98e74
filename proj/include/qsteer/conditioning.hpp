#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <cmath>
#include <optional>
#include <utility>

#include "qsteer/gram.hpp"

namespace qsteer {

// Conditional Gaussian state of (x, p) at t = 0 for one homodyne schedule.
// The covariance is record-free; the mean is filled only when a record is
// supplied. Kx, Kp are the optimal filter rows acting on the N outcomes.
struct ConditionalState {
  Eigen::Matrix2d covariance;
  Eigen::VectorXd Kx, Kp;
  QuadratureSchedule schedule;
  std::optional<Eigen::Vector2d> mean;
};

struct SteeringReport {
  Eigen::Matrix2d Vs;
  double S = 0.0;
  bool steerable = false;
  bool wiseman_consistent = false;
};

struct OptimalSchedule {
  QuadratureSchedule schedule;
  bool degenerate = false;  // both filter components vanished somewhere
};

// Factors B once and serves every query that needs B^{-1}; no explicit
// inverse is formed anywhere.
class JointConditioner {
 public:
  explicit JointConditioner(const CovarianceBlocks& blocks)
      : A_(blocks.A), C_(blocks.C), grid_(blocks.grid), Bstore_(blocks.B), llt_(Bstore_) {
    init_();
  }
  explicit JointConditioner(CovarianceBlocks&& blocks)
      : A_(blocks.A),
        C_(std::move(blocks.C)),
        grid_(blocks.grid),
        Bstore_(std::move(blocks.B)),
        llt_(Bstore_) {
    init_();
  }

  const Eigen::Matrix2d& A() const { return A_; }
  const Eigen::MatrixXd& C() const { return C_; }
  const TimeGrid& grid() const { return grid_; }
  const Eigen::Matrix2d& Vs() const { return Vs_; }

  // v_phi = (sin phi / dx_q, cos phi / dp_q)
  static Eigen::Vector2d quad_vector(double phi, double dxq, double dpq) {
    if (!(dxq > 0.0) || !(dpq > 0.0))
      throw Error("quadrature vector: zero-point references must be positive");
    return {std::sin(phi) / dxq, std::cos(phi) / dpq};
  }

  double min_variance(double phi, double dxq, double dpq) const {
    Eigen::Vector2d v = quad_vector(phi, dxq, dpq);
    return v.dot(Vs_ * v);
  }

  OptimalSchedule optimal_schedule(double phi, double dxq, double dpq) const {
    Eigen::Vector2d v = quad_vector(phi, dxq, dpq);
    Eigen::VectorXd w = llt_.solve(C_ * v);  // (v C^T B^{-1})^T
    const int N = grid_.samples;
    OptimalSchedule out;
    out.schedule.theta.resize(N);
    double scale = w.cwiseAbs().maxCoeff();
    for (int k = 0; k < N; ++k) {
      double a = w(k), b = w(N + k);
      if (std::abs(a) <= 1e-300 * (1.0 + scale) && std::abs(b) <= 1e-300 * (1.0 + scale)) {
        out.schedule.theta[k] = 0.0;
        out.degenerate = true;
      } else {
        out.schedule.theta[k] = std::atan2(a, b);
      }
    }
    return out;
  }

 private:
  void init_() {
    if (llt_.info() != Eigen::Success)
      throw Error("joint conditioning: B factorization failed (discretization bug)");
    Eigen::MatrixXd X = llt_.solve(C_);
    Eigen::Matrix2d V = A_ - C_.transpose() * X;
    Vs_ = 0.5 * (V + V.transpose());
  }

  Eigen::Matrix2d A_;
  Eigen::MatrixXd C_;
  TimeGrid grid_;
  Eigen::MatrixXd Bstore_;
  Eigen::LLT<Eigen::Ref<Eigen::MatrixXd>> llt_;
  Eigen::Matrix2d Vs_;
};

// Conditional state for one schedule; Eq.-18 type Schur complement on the
// projected blocks.
inline ConditionalState condition_single(const CovarianceBlocks& blocks,
                                         const QuadratureSchedule& schedule,
                                         const std::vector<double>* record = nullptr) {
  ProjectedBlocks pb = project_theta(blocks, schedule);
  Eigen::LLT<Eigen::Ref<Eigen::MatrixXd>> llt(pb.B_theta);
  if (llt.info() != Eigen::Success)
    throw Error("condition_single: B_theta factorization failed (matrix not PD)");
  Eigen::MatrixXd X = llt.solve(pb.C_theta);  // N x 2
  ConditionalState st;
  Eigen::Matrix2d V = blocks.A - pb.C_theta.transpose() * X;
  st.covariance = 0.5 * (V + V.transpose());
  st.Kx = X.col(0);
  st.Kp = X.col(1);
  st.schedule = schedule;
  if (record) {
    if (static_cast<int>(record->size()) != blocks.grid.samples)
      throw Error("condition_single: record length does not match grid");
    Eigen::Map<const Eigen::VectorXd> y(record->data(), record->size());
    st.mean = Eigen::Vector2d(st.Kx.dot(y), st.Kp.dot(y));
  }
  return st;
}

// V_s = A - C^T B^{-1} C, the joint-quadrature Schur complement.
inline Eigen::Matrix2d condition_joint(const CovarianceBlocks& blocks) {
  return JointConditioner(blocks).Vs();
}

inline double min_variance_of(const Eigen::Matrix2d& Vs, double phi, double dxq, double dpq) {
  Eigen::Vector2d v = JointConditioner::quad_vector(phi, dxq, dpq);
  return v.dot(Vs * v);
}

inline double min_variance(const CovarianceBlocks& blocks, double phi, double dxq, double dpq) {
  return min_variance_of(condition_joint(blocks), phi, dxq, dpq);
}

inline OptimalSchedule optimal_schedule(const CovarianceBlocks& blocks, double phi, double dxq,
                                        double dpq) {
  return JointConditioner(blocks).optimal_schedule(phi, dxq, dpq);
}

// S = -ln(2 sqrt(det V_s) / hbar)
inline double steerability(const Eigen::Matrix2d& Vs) {
  double det = Vs.determinant();
  if (!(det > 0.0)) throw Error("steerability: det V_s must be positive");
  return -std::log(2.0 * std::sqrt(det) / hbar);
}

// Gaussian steering test of Wiseman et al.: returns true when the state is
// NOT steerable, i.e. V_s + i Sigma >= 0, equivalently det V_s >= hbar^2/4.
inline bool wiseman_criterion(const Eigen::Matrix2d& Vs) {
  return Vs.determinant() >= hbar * hbar / 4.0;
}

inline SteeringReport steering_report(const Eigen::Matrix2d& Vs) {
  SteeringReport r;
  r.Vs = Vs;
  r.S = steerability(Vs);
  r.steerable = r.S > 0.0;
  r.wiseman_consistent = (wiseman_criterion(Vs) == !r.steerable);
  return r;
}

// Retrodictive tomography error: conditional covariance of (x(0), p(0)) given
// the record on the window after t = 0, with a broad prior. Evaluated at
// prior_scale and 10x prior_scale; the two must agree or there is no
// information to converge on (e.g. alpha = 0).
inline Eigen::Matrix2d retrodict_Vv(const LinearModel& model, const TimeGrid& grid,
                                    double prior_scale) {
  Eigen::Matrix2d V1 = condition_joint(assemble_retrodiction(model, grid, prior_scale));
  Eigen::Matrix2d V2 = condition_joint(assemble_retrodiction(model, grid, 10.0 * prior_scale));
  double scale = std::sqrt(std::abs(V2(0, 0) * V2(1, 1))) + 1e-300;
  if ((V2 - V1).cwiseAbs().maxCoeff() > 5e-3 * scale)
    throw Error("retrodict_Vv: no convergence across prior_scale decades (no information?)");
  return V2;
}

}  // namespace qsteer
