#include "qsensor/trajectory.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <stdexcept>
#include <thread>

#include "qsensor/rng.hpp"

namespace qs {

void TrajectoryConfig::validate() const {
  noise.validate();
  double max_rate = std::max({noise.gamma, std::abs(g), noise.dark_rate});
  if (code.strategy.kind == DephasingStrategy::Kind::EnergyGap)
    max_rate = std::max(max_rate, code.strategy.gap_omega);
  if (max_rate > 0 && dt > 0.01 / max_rate)
    throw std::invalid_argument("TrajectoryConfig: dt exceeds stability bound 0.01/max_rate");
  if (dt <= 0 || duration < 0 || n_traj < 1)
    throw std::invalid_argument("TrajectoryConfig: bad dt, duration or n_traj");
  double prev = 0.0;
  for (double t : record_times) {
    if (t < prev || t > duration + 1e-12)
      throw std::invalid_argument(
          "TrajectoryConfig: record_times must be sorted within [0, duration]");
    prev = t;
  }
}

double readout_probability(const StateVector& psi, const SensorCode& code) {
  const Vector psi0 = code.initial_state().v;
  const double n2 = psi.v.squaredNorm();
  return std::norm(psi0.dot(psi.v)) / n2;
}

double readout_probability_code_conditional(const StateVector& psi, const SensorCode& code) {
  const Vector psi0 = code.initial_state().v;
  const double code_weight =
      std::norm(code.code_plus.v.dot(psi.v)) + std::norm(code.code_minus.v.dot(psi.v));
  return std::norm(psi0.dot(psi.v)) / code_weight;
}

namespace {

// Everything shared across trajectories, built once per ensemble.
struct Prepared {
  Matrix u_step;  // exp(-i H_nh dt)
  Matrix u_park;  // controls gated off: exp(-gamma sum J'J dt)
  std::vector<Matrix> jump_ops;
  std::vector<Matrix> jdagj;
  std::vector<Matrix> corrections;
  std::vector<Detection> detections;
  std::vector<Matrix> parity_projectors;
  Matrix sum_jdagj;
  Vector sum_jdagj_diag;
  bool sum_is_diagonal = false;
  Matrix p_code, p_wrong, p_rest;
  Vector psi0;
  long n_steps = 0;
  long delay_steps = 0;
  long dead_steps = 0;
  long zeno_steps = 0;
  long parity_steps = 0;
  std::vector<long> record_steps;
  int dark_channel = -1;  // channel whose correction a dark count triggers
};

Prepared prepare(const TrajectoryConfig& cfg) {
  Prepared prep;
  const int dim = cfg.code.dim();
  const Matrix h_nh = cfg.code.h_nonhermitian(cfg.g, cfg.noise.gamma);
  prep.u_step = expm((cx(0, -1) * cfg.dt * h_nh).eval());
  Matrix damp = Matrix::Zero(dim, dim);
  for (const auto& ch : cfg.code.jumps) damp += ch.op.m.adjoint() * ch.op.m;
  prep.u_park = expm((-cfg.noise.gamma * cfg.dt * damp).eval());
  for (const auto& ch : cfg.code.jumps) {
    prep.jump_ops.push_back(ch.op.m);
    prep.jdagj.push_back(ch.op.m.adjoint() * ch.op.m);
    prep.corrections.push_back(ch.correction.m);
    prep.detections.push_back(ch.detection);
    prep.parity_projectors.push_back(ch.decayed_projector);
    if (prep.dark_channel < 0 && ch.detection == Detection::Photodetector)
      prep.dark_channel = static_cast<int>(prep.jump_ops.size()) - 1;
  }
  prep.sum_jdagj = damp;
  prep.sum_is_diagonal = (damp - Matrix(damp.diagonal().asDiagonal())).cwiseAbs().maxCoeff() < 1e-14;
  prep.sum_jdagj_diag = damp.diagonal();
  prep.p_code = cfg.code.code_projector();
  prep.p_wrong = cfg.code.wrong_projector();
  prep.p_rest = Matrix::Identity(dim, dim) - prep.p_code - prep.p_wrong;
  prep.psi0 = cfg.code.initial_state().v;
  prep.n_steps = std::lround(cfg.duration / cfg.dt);
  prep.delay_steps = std::lround(cfg.noise.correction_delay / cfg.dt);
  prep.dead_steps = std::lround(cfg.noise.dead_time / cfg.dt);
  if (cfg.code.strategy.kind == DephasingStrategy::Kind::Zeno)
    prep.zeno_steps = std::max(1L, std::lround(cfg.code.strategy.zeno_interval / cfg.dt));
  if (cfg.parity_check_interval > 0)
    prep.parity_steps = std::max(1L, std::lround(cfg.parity_check_interval / cfg.dt));
  for (double t : cfg.record_times) prep.record_steps.push_back(std::lround(t / cfg.dt));
  return prep;
}

struct PendingCorrection {
  long due_step;
  int channel;
};

// y = M x for small dense matrices; fixed-extent loops for the common register
// sizes keep the per-step cost down.
template <int D>
inline void apply_fixed(const cx* mp, const cx* x, cx* y) {
  for (int i = 0; i < D; ++i) y[i] = cx(0, 0);
  for (int j = 0; j < D; ++j) {
    const cx xj = x[j];
    const cx* col = mp + static_cast<size_t>(j) * D;
    for (int i = 0; i < D; ++i) y[i] += col[i] * xj;
  }
}

inline void apply(const Matrix& m, const Vector& x, Vector& y) {
  const int d = static_cast<int>(x.size());
  const cx* mp = m.data();  // column-major
  switch (d) {
    case 2: apply_fixed<2>(mp, x.data(), y.data()); return;
    case 4: apply_fixed<4>(mp, x.data(), y.data()); return;
    case 8: apply_fixed<8>(mp, x.data(), y.data()); return;
    case 16: apply_fixed<16>(mp, x.data(), y.data()); return;
    default: break;
  }
  for (int i = 0; i < d; ++i) y(i) = cx(0, 0);
  for (int j = 0; j < d; ++j) {
    const cx xj = x(j);
    const cx* col = mp + static_cast<size_t>(j) * d;
    for (int i = 0; i < d; ++i) y(i) += col[i] * xj;
  }
}

TrajectoryRecord run_one(const TrajectoryConfig& cfg, const Prepared& prep, int traj_index) {
  Philox rng(cfg.seed, static_cast<uint64_t>(traj_index));
  const int n_channels = static_cast<int>(prep.jump_ops.size());
  const int dim = static_cast<int>(prep.psi0.size());

  Vector psi = prep.psi0;
  Vector scratch(dim);
  TrajectoryRecord rec;
  rec.p.reserve(prep.record_steps.size());
  rec.p_code.reserve(prep.record_steps.size());

  std::vector<PendingCorrection> pending;
  long blind_until = -1;     // detector dead through this wall step
  long last_correction = 0;  // live step of the last applied correction
  int corrections_done = 0;
  size_t record_idx = 0;
  long live_step = 0;  // protocol steps; lags wall steps only while refocusing

  const double min_norm2 = 1e-12;
  auto record_if_due = [&]() {
    while (record_idx < prep.record_steps.size() && prep.record_steps[record_idx] == live_step) {
      StateVector s{psi};
      rec.p.push_back(readout_probability(s, cfg.code));
      rec.p_code.push_back(readout_probability_code_conditional(s, cfg.code));
      ++record_idx;
    }
  };

  auto project_keep_norm = [&](const Vector& piece, double n2) {
    const double pn = piece.norm();
    if (pn < 1e-15 * std::sqrt(n2)) return;  // numerically empty branch, keep state
    psi = piece * (std::sqrt(n2) / pn);
  };

  record_if_due();
  long wall_step = 0;
  while (live_step < prep.n_steps) {
    ++wall_step;
    const bool blind = wall_step <= blind_until;
    const bool parked = blind && cfg.refocus_during_dead_time;

    // corrections that have come due
    for (size_t i = 0; i < pending.size();) {
      if (pending[i].due_step <= wall_step) {
        apply(prep.corrections[pending[i].channel], psi, scratch);
        psi = scratch;
        psi.normalize();
        ++corrections_done;
        last_correction = live_step;
        pending.erase(pending.begin() + static_cast<long>(i));
        if (cfg.stop_after_corrections > 0 && corrections_done >= cfg.stop_after_corrections) {
          rec.final_time = live_step * cfg.dt;
          rec.final_state = StateVector{psi};
          return rec;
        }
      } else {
        ++i;
      }
    }

    // Zeno projective readout of code vs wrong subspace (skipped while a
    // correction is pending or the detector is parked)
    if (prep.zeno_steps > 0 && !parked && pending.empty() && live_step > 0 &&
        live_step % prep.zeno_steps == 0) {
      const double n2 = psi.squaredNorm();
      const Vector vc = prep.p_code * psi;
      const Vector vw = prep.p_wrong * psi;
      const double wc = vc.squaredNorm() / n2;
      const double ww = vw.squaredNorm() / n2;
      const double u = rng.uniform();
      if (u < wc)
        project_keep_norm(vc, n2);
      else if (u < wc + ww)
        project_keep_norm(vw, n2);
      else
        project_keep_norm((prep.p_rest * psi).eval(), n2);
    }

    // cadenced parity readout
    if (prep.parity_steps > 0 && pending.empty() && live_step > 0 &&
        live_step % prep.parity_steps == 0) {
      const double n2 = psi.squaredNorm();
      double acc = 0.0;
      const double u = rng.uniform();
      bool collapsed = false;
      for (int c = 0; c < n_channels; ++c) {
        if (prep.detections[c] != Detection::ParityMonitor) continue;
        const Vector vd = prep.parity_projectors[c] * psi;
        acc += vd.squaredNorm() / n2;
        if (u < acc) {
          project_keep_norm((prep.corrections[c] * vd).eval(), n2);
          ++corrections_done;
          last_correction = live_step;
          collapsed = true;
          break;
        }
      }
      if (!collapsed) {
        Vector even = psi;
        for (int c = 0; c < n_channels; ++c)
          if (prep.detections[c] == Detection::ParityMonitor)
            even -= prep.parity_projectors[c] * psi;
        project_keep_norm(even, n2);
      }
    }

    // one uniform decides jump / dark count / deterministic drift
    const double n2 = psi.squaredNorm();
    if (!std::isfinite(n2))
      throw std::runtime_error("run_trajectory: non-finite amplitudes at step " +
                               std::to_string(wall_step) + " (step too large)");
    if (n2 < min_norm2)
      throw std::runtime_error("run_trajectory: norm underflow at step " +
                               std::to_string(wall_step) + "; reduce dt or record more often");
    const bool jumps_allowed = pending.empty() || cfg.allow_jumps_during_delay;
    double total = 0.0;
    if (jumps_allowed && !parked) {
      double ex;
      if (prep.sum_is_diagonal) {
        ex = 0.0;
        for (int i = 0; i < dim; ++i) ex += std::norm(psi(i)) * prep.sum_jdagj_diag(i).real();
      } else {
        apply(prep.sum_jdagj, psi, scratch);
        ex = std::real(psi.dot(scratch));
      }
      total = 2.0 * cfg.noise.gamma * cfg.dt * ex / n2;
    }
    const double p_dark = (!blind && cfg.noise.dark_rate > 0) ? cfg.noise.dark_rate * cfg.dt : 0.0;

    const double u = rng.uniform();
    if (u < total + p_dark) {
      const double t_now = live_step * cfg.dt;
      int channel = -1;
      if (u < total) {
        // resolve which channel fired
        double acc = 0.0;
        for (int c = 0; c < n_channels; ++c) {
          apply(prep.jdagj[c], psi, scratch);
          acc += 2.0 * cfg.noise.gamma * cfg.dt * std::real(psi.dot(scratch)) / n2;
          if (u < acc || c == n_channels - 1) {
            channel = c;
            break;
          }
        }
      }
      if (channel >= 0) {
        apply(prep.jump_ops[channel], psi, scratch);
        psi = scratch;
        psi.normalize();
        rec.evolution_segments.push_back((live_step - last_correction) * cfg.dt);
        if (prep.detections[channel] == Detection::Photodetector) {
          const bool detected = !blind && rng.uniform() >= cfg.noise.loss_alpha;
          rec.clicks.push_back({t_now, channel, detected});
          if (detected) {
            long due = wall_step + prep.delay_steps + 1;
            if (prep.dead_steps > 0) {
              blind_until = wall_step + prep.dead_steps;
              // with refocusing the decayed state is parked dark through the blind
              // window and repaired when the detector comes back
              if (cfg.refocus_during_dead_time) due = std::max(due, blind_until + 1);
            }
            pending.push_back({due, channel});
          }
        } else if (prep.parity_steps == 0) {
          rec.clicks.push_back({t_now, channel, true});
          pending.push_back({wall_step + 1, channel});
        } else {
          rec.clicks.push_back({t_now, channel, false});  // picked up at the next parity readout
        }
      } else {
        // dark count triggers the photodetector correction path
        rec.clicks.push_back({t_now, -1, true});
        if (prep.dark_channel >= 0) {
          const long due =
              wall_step + 1 + (cfg.delay_applies_to_dark ? prep.delay_steps : 0);
          pending.push_back({due, prep.dark_channel});
          if (prep.dead_steps > 0) blind_until = wall_step + prep.dead_steps;
        }
      }
      // jumps and clicks are instantaneous; protocol time advances on evolution only
    } else {
      apply(parked ? prep.u_park : prep.u_step, psi, scratch);
      psi = scratch;
      if (!parked) ++live_step;  // parked steps burn wall time only
    }
    record_if_due();
    if (wall_step > 100 * prep.n_steps + 1000000)
      throw std::runtime_error("run_trajectory: wall clock runaway (dead time too long?)");
  }

  rec.final_time = live_step * cfg.dt;
  rec.final_state = StateVector{psi};
  return rec;
}

}  // namespace

TrajectoryRecord run_trajectory(const TrajectoryConfig& cfg, int traj_index) {
  cfg.validate();
  const Prepared prep = prepare(cfg);
  return run_one(cfg, prep, traj_index);
}

TrajectoryResult ensemble_probability(const TrajectoryConfig& cfg) {
  cfg.validate();
  const Prepared prep = prepare(cfg);
  const size_t n_rec = prep.record_steps.size();

  constexpr int kChunk = 256;
  const int n_chunks = (cfg.n_traj + kChunk - 1) / kChunk;
  struct ChunkSums {
    std::vector<double> sum, sumsq, sum_code;
    double clicks = 0.0;
  };
  std::vector<ChunkSums> chunks(n_chunks);

  auto run_chunk = [&](int ci) {
    ChunkSums& cs = chunks[ci];
    cs.sum.assign(n_rec, 0.0);
    cs.sumsq.assign(n_rec, 0.0);
    cs.sum_code.assign(n_rec, 0.0);
    const int lo = ci * kChunk;
    const int hi = std::min(cfg.n_traj, lo + kChunk);
    for (int i = lo; i < hi; ++i) {
      TrajectoryRecord rec = run_one(cfg, prep, i);
      for (size_t k = 0; k < n_rec; ++k) {
        cs.sum[k] += rec.p[k];
        cs.sumsq[k] += rec.p[k] * rec.p[k];
        cs.sum_code[k] += rec.p_code[k];
      }
      cs.clicks += static_cast<double>(rec.clicks.size());
    }
  };

  const int n_threads = std::max(1, cfg.threads);
  if (n_threads == 1) {
    for (int ci = 0; ci < n_chunks; ++ci) run_chunk(ci);
  } else {
    std::vector<std::thread> pool;
    std::atomic<int> next{0};
    for (int t = 0; t < n_threads; ++t)
      pool.emplace_back([&]() {
        for (int ci = next.fetch_add(1); ci < n_chunks; ci = next.fetch_add(1)) run_chunk(ci);
      });
    for (auto& th : pool) th.join();
  }

  TrajectoryResult res;
  res.times = cfg.record_times;
  res.p.assign(n_rec, 0.0);
  res.stderr_p.assign(n_rec, 0.0);
  res.p_code.assign(n_rec, 0.0);
  double clicks = 0.0;
  std::vector<double> sum(n_rec, 0.0), sumsq(n_rec, 0.0), sumc(n_rec, 0.0);
  for (int ci = 0; ci < n_chunks; ++ci) {  // fixed-order reduction
    for (size_t k = 0; k < n_rec; ++k) {
      sum[k] += chunks[ci].sum[k];
      sumsq[k] += chunks[ci].sumsq[k];
      sumc[k] += chunks[ci].sum_code[k];
    }
    clicks += chunks[ci].clicks;
  }
  const double n = static_cast<double>(cfg.n_traj);
  for (size_t k = 0; k < n_rec; ++k) {
    const double mean = sum[k] / n;
    res.p[k] = mean;
    res.p_code[k] = sumc[k] / n;
    const double var = n > 1 ? std::max(0.0, (sumsq[k] - n * mean * mean) / (n - 1)) : 0.0;
    res.stderr_p[k] = std::sqrt(var / n);
  }
  res.n_clicks_mean.assign(n_rec, clicks / n);
  return res;
}

}  // namespace qs
