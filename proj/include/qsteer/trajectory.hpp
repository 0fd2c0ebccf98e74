#pragma once

#include <Eigen/Dense>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <thread>
#include <vector>

#include "qsteer/conditioning.hpp"

namespace qsteer {

namespace rng {

// Philox4x32-10. Counter-based so per-trajectory streams keyed by
// (seed, stream) are reproducible independent of thread scheduling.
struct Philox {
  uint64_t seed = 0;
  uint64_t stream = 0;

  static inline void mulhilo(uint32_t a, uint32_t b, uint32_t& hi, uint32_t& lo) {
    uint64_t p = static_cast<uint64_t>(a) * b;
    hi = static_cast<uint32_t>(p >> 32);
    lo = static_cast<uint32_t>(p);
  }

  std::array<uint32_t, 4> block(uint64_t counter) const {
    uint32_t c0 = static_cast<uint32_t>(counter);
    uint32_t c1 = static_cast<uint32_t>(counter >> 32);
    uint32_t c2 = static_cast<uint32_t>(stream);
    uint32_t c3 = static_cast<uint32_t>(stream >> 32);
    uint32_t k0 = static_cast<uint32_t>(seed);
    uint32_t k1 = static_cast<uint32_t>(seed >> 32);
    for (int round = 0; round < 10; ++round) {
      uint32_t hi0, lo0, hi1, lo1;
      mulhilo(0xD2511F53u, c0, hi0, lo0);
      mulhilo(0xCD9E8D57u, c2, hi1, lo1);
      uint32_t n0 = hi1 ^ c1 ^ k0;
      uint32_t n1 = lo1;
      uint32_t n2 = hi0 ^ c3 ^ k1;
      uint32_t n3 = lo0;
      c0 = n0; c1 = n1; c2 = n2; c3 = n3;
      k0 += 0x9E3779B9u;
      k1 += 0xBB67AE85u;
    }
    return {c0, c1, c2, c3};
  }
};

// Standard normals via Box-Muller on Philox blocks; two per block.
class NormalStream {
 public:
  NormalStream(uint64_t seed, uint64_t stream) : gen_{seed, stream} {}

  double next() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    auto b = gen_.block(counter_++);
    double u1 = to_unit(b[0], b[1]);
    double u2 = to_unit(b[2], b[3]);
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 2.0 * M_PI * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

 private:
  static double to_unit(uint32_t hi, uint32_t lo) {
    uint64_t x = (static_cast<uint64_t>(hi) << 32) | lo;
    // strictly inside (0,1)
    return (static_cast<double>(x >> 11) + 0.5) * 0x1.0p-53;
  }
  Philox gen_;
  uint64_t counter_ = 0;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace rng

// One simulated measurement record. hidden_truth is the simulation's own
// (x(0), p(0)), retained for residual tests only.
struct Record {
  TimeGrid grid;
  QuadratureSchedule schedule;
  std::vector<double> outcomes;
  Eigen::Vector2d hidden_truth;
  uint64_t seed = 0;
  uint64_t stream = 0;
};

// Draws the per-bin noises with the same discretization the gram assembly
// uses, propagates the state and forms y_theta.
inline Record simulate(const LinearModel& model, const TimeGrid& grid,
                       const QuadratureSchedule& schedule, uint64_t seed, double n0 = 0.0,
                       uint64_t stream = 0) {
  const int N = grid.samples, d = model.dim;
  if (static_cast<int>(schedule.theta.size()) != N)
    throw Error("simulate: schedule length does not match grid");
  detail::Discretization disc = detail::discretize(model.drift, grid.dt());

  rng::NormalStream z(seed, stream);
  // draw order: initial state, then channels in enum order per bin
  Eigen::MatrixXd prior = model.prior(n0);
  Eigen::LLT<Eigen::MatrixXd> pl(prior);
  Eigen::VectorXd s0raw(d);
  for (int k = 0; k < d; ++k) s0raw(k) = z.next();
  Eigen::VectorXd s = pl.matrixL() * s0raw;

  std::vector<double> w(static_cast<size_t>(N) * n_channels);
  const double dt = grid.dt();
  for (int k = 0; k < N; ++k)
    for (int c = 0; c < n_channels; ++c)
      w[k * n_channels + c] = std::sqrt(model.noise_level(c) / dt) * z.next();

  auto bin = [&](int k, int c) { return w[k * n_channels + c]; };

  Record rec;
  rec.grid = grid;
  rec.schedule = schedule;
  rec.seed = seed;
  rec.stream = stream;
  rec.outcomes.resize(N);

  for (int k = 0; k < N; ++k) {
    double y1 = model.readout.row(0).dot(s);
    double y2 = model.readout.row(1).dot(s);
    for (int c = 0; c < n_channels; ++c) {
      y1 += model.feedthrough(0, c) * bin(k, c);
      y2 += model.feedthrough(1, c) * bin(k, c);
    }
    rec.outcomes[k] = std::sin(schedule.theta[k]) * y1 + std::cos(schedule.theta[k]) * y2;
    if (k + 1 < N) {
      Eigen::VectorXd drive = Eigen::VectorXd::Zero(d);
      for (int c = 0; c < n_channels; ++c) {
        if (model.noise_level(c) == 0.0) continue;
        drive += disc.E2 * model.input.col(c) * bin(k, c);
        drive += disc.E1 * model.input.col(c) * bin(k + 1, c);
      }
      s = disc.Phi1 * s + drive;
    }
  }
  rec.hidden_truth = s.head<2>();
  return rec;
}

// Applies the optimal filter rows to the outcomes.
inline Eigen::Vector2d filter_record(const Record& rec, const ConditionalState& state) {
  if (rec.outcomes.size() != static_cast<size_t>(state.Kx.size()))
    throw Error("filter_record: record / filter shape mismatch");
  Eigen::Map<const Eigen::VectorXd> y(rec.outcomes.data(), rec.outcomes.size());
  return {state.Kx.dot(y), state.Kp.dot(y)};
}

struct EnsembleReport {
  Eigen::Matrix2d empirical = Eigen::Matrix2d::Zero();
  Eigen::Matrix2d expected = Eigen::Matrix2d::Zero();
  double max_rel_deviation = 0.0;  // |emp - V|_ij / sqrt(det V)
  double max_outcome_corr = 0.0;   // orthogonality check
  Eigen::Vector2d mean_residual = Eigen::Vector2d::Zero();
  int count = 0;
};

// Monte Carlo check of the conditional covariance: the empirical covariance
// of (truth - estimate) must match V_m^{|theta}. Trajectories are split into
// fixed 64-wide chunks reduced in index order, so the result is identical for
// any thread count.
inline EnsembleReport verify_ensemble(const LinearModel& model, const TimeGrid& grid,
                                      const QuadratureSchedule& schedule, int count,
                                      uint64_t seed, double n0 = 0.0, int threads = 0) {
  if (count < 100) throw Error("verify_ensemble: count must be at least 100");
  CovarianceBlocks blocks = assemble(model, grid, n0);
  ConditionalState state = condition_single(blocks, schedule);
  const int N = grid.samples;

  struct Chunk {
    Eigen::Matrix2d srr = Eigen::Matrix2d::Zero();
    Eigen::Vector2d sr = Eigen::Vector2d::Zero();
    Eigen::VectorXd sy, syy, sxy, spy;
  };
  constexpr int chunk_width = 64;
  const int nchunks = (count + chunk_width - 1) / chunk_width;
  std::vector<Chunk> chunks(nchunks);

  auto run_chunk = [&](int ci) {
    Chunk& ch = chunks[ci];
    ch.sy = Eigen::VectorXd::Zero(N);
    ch.syy = Eigen::VectorXd::Zero(N);
    ch.sxy = Eigen::VectorXd::Zero(N);
    ch.spy = Eigen::VectorXd::Zero(N);
    int lo = ci * chunk_width, hi = std::min(count, lo + chunk_width);
    for (int t = lo; t < hi; ++t) {
      Record rec = simulate(model, grid, schedule, seed, n0, static_cast<uint64_t>(t));
      Eigen::Vector2d est = filter_record(rec, state);
      Eigen::Vector2d r = rec.hidden_truth - est;
      ch.srr += r * r.transpose();
      ch.sr += r;
      Eigen::Map<const Eigen::VectorXd> y(rec.outcomes.data(), N);
      ch.sy += y;
      ch.syy += y.cwiseProduct(y);
      ch.sxy += r(0) * y;
      ch.spy += r(1) * y;
    }
  };

  int nthreads = threads > 0 ? threads : static_cast<int>(std::thread::hardware_concurrency());
  if (nthreads < 1) nthreads = 1;
  if (nthreads == 1) {
    for (int ci = 0; ci < nchunks; ++ci) run_chunk(ci);
  } else {
    std::vector<std::thread> pool;
    std::atomic<int> next{0};
    for (int t = 0; t < nthreads; ++t)
      pool.emplace_back([&] {
        for (int ci = next.fetch_add(1); ci < nchunks; ci = next.fetch_add(1)) run_chunk(ci);
      });
    for (auto& th : pool) th.join();
  }

  Eigen::Matrix2d srr = Eigen::Matrix2d::Zero();
  Eigen::Vector2d sr = Eigen::Vector2d::Zero();
  Eigen::VectorXd sy = Eigen::VectorXd::Zero(N), syy = Eigen::VectorXd::Zero(N);
  Eigen::VectorXd sxy = Eigen::VectorXd::Zero(N), spy = Eigen::VectorXd::Zero(N);
  for (const Chunk& ch : chunks) {  // deterministic order
    srr += ch.srr;
    sr += ch.sr;
    sy += ch.sy;
    syy += ch.syy;
    sxy += ch.sxy;
    spy += ch.spy;
  }

  EnsembleReport rep;
  rep.count = count;
  rep.expected = state.covariance;
  Eigen::Vector2d mean = sr / count;
  rep.mean_residual = mean;
  rep.empirical = srr / count - mean * mean.transpose();
  double scale = std::sqrt(state.covariance.determinant());
  rep.max_rel_deviation = (rep.empirical - rep.expected).cwiseAbs().maxCoeff() / scale;

  Eigen::VectorXd ymean = sy / count;
  Eigen::VectorXd yvar = syy / count - ymean.cwiseProduct(ymean);
  double sx = std::sqrt(rep.empirical(0, 0)), sp = std::sqrt(rep.empirical(1, 1));
  double cmax = 0.0;
  for (int k = 0; k < N; ++k) {
    double sy_k = std::sqrt(std::max(yvar(k), 1e-300));
    double cx = (sxy(k) / count - mean(0) * ymean(k)) / (sx * sy_k);
    double cp = (spy(k) / count - mean(1) * ymean(k)) / (sp * sy_k);
    cmax = std::max({cmax, std::abs(cx), std::abs(cp)});
  }
  rep.max_outcome_corr = cmax;
  return rep;
}

}  // namespace qsteer
