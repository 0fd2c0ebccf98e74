#pragma once

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>
#include <string>
#include <vector>

#include "qsteer/model.hpp"

namespace qsteer {

// Uniform grid t_k = -tau + k dt, k = 0..N-1, dt = tau/(N-1), t_{N-1} = 0.
struct TimeGrid {
  double tau = 1.0;
  int samples = 2;

  TimeGrid() = default;
  TimeGrid(double tau_, int samples_) : tau(tau_), samples(samples_) {
    if (!(tau > 0.0)) throw Error("TimeGrid: window must be positive");
    if (samples < 2) throw Error("TimeGrid: need at least 2 samples");
  }
  double dt() const { return tau / (samples - 1); }
  double time(int k) const { return -tau + k * dt(); }
};

// Homodyne angles theta(t_k), interpreted modulo pi.
struct QuadratureSchedule {
  std::vector<double> theta;
  static QuadratureSchedule constant(double angle, int n) {
    QuadratureSchedule s;
    s.theta.assign(n, angle);
    return s;
  }
};

// Joint second moments of (x(0), p(0)) and the stacked samples of y1 then y2
// (y1 rows 0..N-1, y2 rows N..2N-1). B carries the shot-noise 1/(2 dt) on its
// diagonal; C encodes the ponderomotive correlation with the state at t = 0.
struct CovarianceBlocks {
  Eigen::Matrix2d A;
  Eigen::MatrixXd B;
  Eigen::MatrixXd C;  // 2N x 2
  TimeGrid grid;
  std::string units = "hbar = 1; input unit system";
};

namespace detail {

struct Discretization {
  Eigen::MatrixXd Phi1;  // e^{D dt}
  Eigen::MatrixXd E1;    // Int_0^{dt/2} e^{D w} dw  (same-bin half)
  Eigen::MatrixXd E2;    // Int_{dt/2}^{dt} e^{D w} dw (previous-bin half)
};

inline Discretization discretize(const Eigen::MatrixXd& D, double dt) {
  const int d = static_cast<int>(D.rows());
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(2 * d, 2 * d);
  M.topLeftCorner(d, d) = D;
  M.topRightCorner(d, d) = Eigen::MatrixXd::Identity(d, d);
  Discretization out;
  Eigen::MatrixXd Eh = (M * (dt / 2.0)).exp();
  Eigen::MatrixXd Ef = (M * dt).exp();
  out.Phi1 = Ef.topLeftCorner(d, d);
  out.E1 = Eh.topRightCorner(d, d);
  out.E2 = Ef.topRightCorner(d, d) - out.E1;
  return out;
}

// Everything the O(N^2) fill needs, built in O(N d^3).
struct AssemblyCore {
  int N = 0, d = 0;
  double dt = 0.0;
  Discretization disc;
  std::vector<int> active;                          // state-driving channels
  std::vector<Eigen::VectorXd> q1;                  // per channel, k >= 1
  std::vector<Eigen::VectorXd> e2l;                 // E2 * L_c
  std::vector<Eigen::MatrixXd> Pd;                  // Cov(s_k, s_k)
  std::vector<Eigen::MatrixXd> Phipow;              // Phi1^p
  std::vector<std::vector<Eigen::VectorXd>> hrow;   // [i][p] = (H_i Phi^p)^T
  std::vector<std::vector<Eigen::VectorXd>> grow;   // [i][j] row for off-diagonal fill
};

inline AssemblyCore build_core(const LinearModel& model, const TimeGrid& grid,
                               const Eigen::MatrixXd& prior) {
  AssemblyCore core;
  core.N = grid.samples;
  core.d = model.dim;
  core.dt = grid.dt();
  core.disc = discretize(model.drift, core.dt);
  const int N = core.N, d = core.d;
  const auto& Phi1 = core.disc.Phi1;

  core.q1.assign(n_channels, Eigen::VectorXd::Zero(d));
  core.e2l.assign(n_channels, Eigen::VectorXd::Zero(d));
  for (int c = 0; c < n_channels; ++c) {
    Eigen::VectorXd L = model.input.col(c);
    if (L.norm() == 0.0 || model.noise_level(c) == 0.0) continue;
    core.active.push_back(c);
    double nu = model.noise_level(c) / core.dt;
    core.q1[c] = core.disc.E1 * L * nu;
    core.e2l[c] = core.disc.E2 * L;
  }

  core.Pd.resize(N);
  core.Pd[0] = prior;
  for (int k = 0; k + 1 < N; ++k) {
    Eigen::MatrixXd next = Phi1 * core.Pd[k] * Phi1.transpose();
    for (int c : core.active) {
      double nu = model.noise_level(c) / core.dt;
      Eigen::VectorXd e1l = core.q1[c] / nu;  // E1 L
      const Eigen::VectorXd& e2l = core.e2l[c];
      if (k >= 1) {
        // bin k straddles the step: its value is already correlated with s_k
        Eigen::VectorXd pq = Phi1 * core.q1[c];
        next += pq * e2l.transpose() + e2l * pq.transpose();
      }
      next += nu * (e2l * e2l.transpose() + e1l * e1l.transpose());
    }
    next = 0.5 * (next + next.transpose());
    core.Pd[k + 1] = next;
  }

  core.Phipow.resize(N);
  core.Phipow[0] = Eigen::MatrixXd::Identity(d, d);
  for (int p = 1; p < N; ++p) core.Phipow[p] = core.Phipow[p - 1] * Phi1;

  core.hrow.assign(2, std::vector<Eigen::VectorXd>(N));
  for (int i = 0; i < 2; ++i) {
    Eigen::VectorXd h = model.readout.row(i).transpose();
    for (int p = 0; p < N; ++p) core.hrow[i][p] = core.Phipow[p].transpose() * h;
  }

  core.grow.assign(2, std::vector<Eigen::VectorXd>(N));
  for (int j = 0; j < N; ++j) {
    Eigen::MatrixXd G = core.Pd[j] * Phi1.transpose();
    for (int c : core.active)
      if (j >= 1) G += core.q1[c] * core.e2l[c].transpose();
    for (int i = 0; i < 2; ++i) {
      Eigen::VectorXd g = G.transpose() * model.readout.row(i).transpose();
      for (int c : core.active) {
        double f = model.feedthrough(i, c);
        if (f == 0.0) continue;
        double nu = model.noise_level(c) / core.dt;
        Eigen::VectorXd r = nu * core.e2l[c];
        if (j >= 1) r += Phi1 * core.q1[c];
        g += f * r;
      }
      core.grow[i][j] = g;
    }
  }
  return core;
}

inline void fill_B(const LinearModel& model, const AssemblyCore& core, Eigen::MatrixXd& B) {
  const int N = core.N;
  B.resize(2 * N, 2 * N);
  // same-time entries
  for (int j = 0; j < N; ++j) {
    for (int i = 0; i < 2; ++i) {
      for (int m = i; m < 2; ++m) {
        double val = 0.0;
        for (int c = 0; c < n_channels; ++c) {
          double nu = model.noise_level(c) / core.dt;
          val += model.feedthrough(i, c) * model.feedthrough(m, c) * nu;
        }
        if (j >= 1) {
          for (int c : core.active) {
            val += model.feedthrough(i, c) * core.q1[c].dot(model.readout.row(m).transpose());
            val += model.feedthrough(m, c) * core.q1[c].dot(model.readout.row(i).transpose());
          }
        }
        val += model.readout.row(i) * core.Pd[j] * model.readout.row(m).transpose();
        B(i * N + j, m * N + j) = val;
        B(m * N + j, i * N + j) = val;
      }
    }
  }
  // two-time entries, j < l
  for (int j = 0; j < N; ++j) {
    for (int l = j + 1; l < N; ++l) {
      int p = l - j - 1;
      for (int i = 0; i < 2; ++i) {
        for (int m = 0; m < 2; ++m) {
          double val = core.grow[i][j].dot(core.hrow[m][p]);
          B(i * N + j, m * N + l) = val;
          B(m * N + l, i * N + j) = val;
        }
      }
    }
  }
}

}  // namespace detail

// Blocks of Eq.-17 type for state prediction at t = 0 from the record on
// [-tau, 0]. Noises are piecewise constant per bin of width dt with variance
// (level)/dt; propagation integrates e^{D t} exactly against each bin.
inline CovarianceBlocks assemble(const LinearModel& model, const TimeGrid& grid, double n0) {
  const int N = grid.samples;
  detail::AssemblyCore core = detail::build_core(model, grid, model.prior(n0));
  CovarianceBlocks blocks;
  blocks.grid = grid;
  detail::fill_B(model, core, blocks.B);

  blocks.C.resize(2 * N, 2);
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < N; ++j) {
      Eigen::VectorXd v;
      if (j == N - 1) {
        v = core.Pd[N - 1] * model.readout.row(i).transpose();
        for (int c : core.active) v += model.feedthrough(i, c) * core.q1[c];
      } else {
        v = core.Phipow[N - 2 - j] * core.grow[i][j];
      }
      blocks.C(i * N + j, 0) = v(0);
      blocks.C(i * N + j, 1) = v(1);
    }
  }
  blocks.A = core.Pd[N - 1].topLeftCorner(2, 2);

  for (int k = 0; k < 2 * N; ++k)
    if (!(blocks.B(k, k) > 0.0))
      throw Error("assemble: non-positive-definite B (discretization bug)");
  return blocks;
}

// Blocks for retrodiction: state at t = 0 with a broad prior, record on the
// following window. prior_scale multiplies the zero-point variances.
inline CovarianceBlocks assemble_retrodiction(const LinearModel& model, const TimeGrid& grid,
                                              double prior_scale) {
  if (!(prior_scale > 0.0)) throw Error("assemble_retrodiction: prior_scale must be positive");
  const int N = grid.samples;
  Eigen::MatrixXd prior = model.prior(0.0);
  prior(0, 0) *= prior_scale;
  prior(1, 1) *= prior_scale;
  detail::AssemblyCore core = detail::build_core(model, grid, prior);
  CovarianceBlocks blocks;
  blocks.grid = grid;
  detail::fill_B(model, core, blocks.B);

  blocks.C.resize(2 * N, 2);
  for (int i = 0; i < 2; ++i) {
    Eigen::VectorXd h = model.readout.row(i).transpose();
    for (int j = 0; j < N; ++j) {
      Eigen::VectorXd v = prior * (core.Phipow[j].transpose() * h);
      blocks.C(i * N + j, 0) = v(0);
      blocks.C(i * N + j, 1) = v(1);
    }
  }
  blocks.A = prior.topLeftCorner(2, 2);
  return blocks;
}

struct ProjectedBlocks {
  Eigen::MatrixXd B_theta;  // N x N
  Eigen::MatrixXd C_theta;  // N x 2
};

// B_theta = u_theta B u_theta^T, C_theta = u_theta C with
// u_theta = (sin theta, cos theta) acting blockwise.
inline ProjectedBlocks project_theta(const CovarianceBlocks& blocks,
                                     const QuadratureSchedule& schedule) {
  const int N = blocks.grid.samples;
  if (static_cast<int>(schedule.theta.size()) != N)
    throw Error("project_theta: schedule length does not match grid");
  Eigen::VectorXd s(N), c(N);
  for (int k = 0; k < N; ++k) {
    s(k) = std::sin(schedule.theta[k]);
    c(k) = std::cos(schedule.theta[k]);
  }
  ProjectedBlocks out;
  out.B_theta.resize(N, N);
  for (int j = 0; j < N; ++j)
    for (int l = 0; l < N; ++l)
      out.B_theta(j, l) = s(j) * s(l) * blocks.B(j, l) + s(j) * c(l) * blocks.B(j, N + l) +
                          c(j) * s(l) * blocks.B(N + j, l) + c(j) * c(l) * blocks.B(N + j, N + l);
  out.C_theta.resize(N, 2);
  for (int j = 0; j < N; ++j)
    out.C_theta.row(j) = s(j) * blocks.C.row(j) + c(j) * blocks.C.row(N + j);
  return out;
}

}  // namespace qsteer
