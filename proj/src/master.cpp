#include "qsensor/master.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <Eigen/Eigenvalues>
#include <unsupported/Eigen/KroneckerProduct>

namespace qs {

void MasterConfig::validate() const {
  noise.validate();
  double max_rate = std::max({noise.gamma, std::abs(g), noise.dark_rate});
  if (code.strategy.kind == DephasingStrategy::Kind::EnergyGap)
    max_rate = std::max(max_rate, code.strategy.gap_omega);
  if (max_rate > 0 && dt > 0.005 / max_rate)
    throw std::invalid_argument("MasterConfig: dt exceeds stability bound 0.005/max_rate");
  if (dt <= 0 || duration < 0) throw std::invalid_argument("MasterConfig: bad dt or duration");
  if (variant == MasterVariant::CorrectedWithEc && !(ec_interval > 0))
    throw std::invalid_argument("MasterConfig: ec_interval must be positive");
}

Matrix lindblad_rhs(const Matrix& rho, const Matrix& h, const std::vector<Matrix>& jumps,
                    double gamma) {
  Matrix out = cx(0, -1) * (h * rho - rho * h);
  for (const auto& j : jumps) {
    const Matrix jd = j.adjoint();
    const Matrix jdj = jd * j;
    out += gamma * (2.0 * j * rho * jd - jdj * rho - rho * jdj);
  }
  return out;
}

Matrix corrected_rhs(const Matrix& rho, const SensorCode& code, const NoiseModel& noise,
                     double g) {
  const Matrix h_nh = code.h_nonhermitian(g, noise.gamma);
  Matrix out = cx(0, -1) * (h_nh * rho - rho * h_nh.adjoint());
  for (const auto& ch : code.jumps) {
    const double alpha = ch.detection == Detection::Photodetector ? noise.loss_alpha : 0.0;
    const Matrix cj = ch.correction.m * ch.op.m;
    out += 2.0 * noise.gamma *
           ((1.0 - alpha) * cj * rho * cj.adjoint() + alpha * ch.op.m * rho * ch.op.m.adjoint());
  }
  if (noise.dark_rate > 0) {
    for (const auto& ch : code.jumps) {
      if (ch.detection != Detection::Photodetector) continue;
      out += noise.dark_rate * (ch.correction.m * rho * ch.correction.m.adjoint() - rho);
    }
  }
  return out;
}

Matrix apply_code_ec(const Matrix& rho, const SensorCode& code) {
  const Matrix pc = code.code_projector();
  const Matrix pw = code.wrong_projector();
  const Matrix pr = Matrix::Identity(rho.rows(), rho.cols()) - pc - pw;
  const Matrix& v = code.ec_fix.m;
  return pc * rho * pc + v * (pw * rho * pw) * v.adjoint() + pr * rho * pr;
}

Matrix apply_parity_ec(const Matrix& rho, const SensorCode& code) {
  Matrix even = Matrix::Identity(rho.rows(), rho.cols());
  Matrix out = Matrix::Zero(rho.rows(), rho.cols());
  for (const auto& ch : code.jumps) {
    if (ch.detection != Detection::ParityMonitor) continue;
    even -= ch.decayed_projector;
    const Matrix piece = ch.decayed_projector * rho * ch.decayed_projector;
    out += ch.correction.m * piece * ch.correction.m.adjoint();
  }
  out += even * rho * even;
  return out;
}

namespace {

double readout(const Matrix& rho, const Vector& psi0) {
  return std::real(psi0.dot(rho * psi0));
}

}  // namespace

MasterResult integrate(const MasterConfig& cfg) {
  cfg.validate();
  const int dim = cfg.code.dim();
  const Vector psi0 = cfg.code.initial_state().v;
  const Vector op = cfg.code.code_plus.v;
  const Vector om = cfg.code.code_minus.v;

  Matrix rho = psi0 * psi0.adjoint();

  std::vector<Matrix> raw_jumps;
  for (const auto& ch : cfg.code.jumps) raw_jumps.push_back(ch.op.m);
  const Matrix h = cfg.code.hamiltonian(cfg.g);

  auto rhs = [&](const Matrix& r) -> Matrix {
    switch (cfg.variant) {
      case MasterVariant::PlainLindblad: return lindblad_rhs(r, h, raw_jumps, cfg.noise.gamma);
      case MasterVariant::Corrected:
      case MasterVariant::CorrectedWithEc: return corrected_rhs(r, cfg.code, cfg.noise, cfg.g);
      case MasterVariant::ReducedEffective: break;
    }
    throw std::logic_error("integrate: reduced_effective has a closed form; use it directly");
  };

  const long n_steps = std::lround(cfg.duration / cfg.dt);
  const long record_stride = std::max(1L, std::lround(cfg.record_interval / cfg.dt));
  const long ec_stride = std::max(1L, std::lround(cfg.ec_interval / cfg.dt));
  const bool zeno = cfg.code.strategy.kind == DephasingStrategy::Kind::Zeno;
  const long zeno_stride =
      zeno ? std::max(1L, std::lround(cfg.code.strategy.zeno_interval / cfg.dt)) : 0;

  MasterResult res;
  auto record = [&](long step) {
    res.times.push_back(step * cfg.dt);
    res.p.push_back(readout(rho, psi0));
    res.coherence.push_back(op.dot(rho * om));
    if (cfg.check_positivity) {
      DensityMatrix snapshot(rho);
      snapshot.validate(1e-8, 1e-8, -1e-8);
      res.states.push_back(std::move(snapshot));
    }
  };

  record(0);
  for (long step = 1; step <= n_steps; ++step) {
    const Matrix k1 = rhs(rho);
    const Matrix k2 = rhs(rho + (cfg.dt / 2) * k1);
    const Matrix k3 = rhs(rho + (cfg.dt / 2) * k2);
    const Matrix k4 = rhs(rho + cfg.dt * k3);
    rho += (cfg.dt / 6) * (k1 + 2 * k2 + 2 * k3 + k4);

    const double tr = rho.trace().real();
    res.max_trace_drift = std::max(res.max_trace_drift, std::abs(tr - 1.0));
    if (std::abs(tr - 1.0) > 1e-6)
      throw std::runtime_error("integrate: trace drift " + std::to_string(tr - 1.0) +
                               " at t = " + std::to_string(step * cfg.dt) + "; reduce dt");
    rho /= tr;
    const double hd = (rho - rho.adjoint()).cwiseAbs().maxCoeff();
    res.max_hermiticity_defect = std::max(res.max_hermiticity_defect, hd);
    if (hd > 1e-8) rho = ((rho + rho.adjoint()) / 2.0).eval();

    if (cfg.variant == MasterVariant::CorrectedWithEc && step % ec_stride == 0)
      rho = apply_code_ec(rho, cfg.code);
    if (zeno && step % zeno_stride == 0) {
      const Matrix pc = cfg.code.code_projector();
      const Matrix pw = cfg.code.wrong_projector();
      const Matrix pr = Matrix::Identity(dim, dim) - pc - pw;
      rho = (pc * rho * pc + pw * rho * pw + pr * rho * pr).eval();
    }

    if (step % record_stride == 0 || step == n_steps) record(step);
  }
  return res;
}

double reduced_effective_solution(double g, double gamma, double alpha, double kappa, double t) {
  if (alpha < 0 || kappa < 0)
    throw std::invalid_argument("reduced_effective_solution: negative alpha or kappa");
  const double rate = 2.0 * (gamma * alpha + kappa / 2.0);
  return 0.5 * (1.0 + std::cos(2.0 * g * t) * std::exp(-rate * t));
}

cx coherence_mode_eigenvalue(const SensorCode& code, const NoiseModel& noise, double g) {
  const int dim = code.dim();
  const Matrix h_nh = code.h_nonhermitian(g, noise.gamma);
  const Matrix id = Matrix::Identity(dim, dim);
  // column-stacking: vec(A rho B) = (B^T kron A) vec(rho)
  Matrix liouv = cx(0, -1) * (Eigen::kroneckerProduct(id, h_nh).eval() -
                              Eigen::kroneckerProduct(h_nh.conjugate(), id).eval());
  for (const auto& ch : code.jumps) {
    const double alpha = ch.detection == Detection::Photodetector ? noise.loss_alpha : 0.0;
    const Matrix cj = ch.correction.m * ch.op.m;
    liouv += 2.0 * noise.gamma *
             ((1.0 - alpha) * Eigen::kroneckerProduct(cj.conjugate(), cj).eval() +
              alpha * Eigen::kroneckerProduct(ch.op.m.conjugate(), ch.op.m).eval());
  }
  if (noise.dark_rate > 0) {
    for (const auto& ch : code.jumps) {
      if (ch.detection != Detection::Photodetector) continue;
      liouv += noise.dark_rate *
               (Eigen::kroneckerProduct(ch.correction.m.conjugate(), ch.correction.m).eval() -
                Matrix::Identity(dim * dim, dim * dim));
    }
  }
  Eigen::ComplexEigenSolver<Matrix> es(liouv);
  Matrix target = code.code_plus.v * code.code_minus.v.adjoint();
  const Eigen::Map<Vector> tvec(target.data(), dim * dim);
  int best = 0;
  double best_overlap = -1.0;
  for (int i = 0; i < dim * dim; ++i) {
    Vector v = es.eigenvectors().col(i).normalized();
    const double ov = std::abs(v.dot(tvec));
    if (ov > best_overlap) {
      best_overlap = ov;
      best = i;
    }
  }
  return es.eigenvalues()(best);
}

}  // namespace qs
