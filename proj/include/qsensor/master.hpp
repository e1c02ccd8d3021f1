// Deterministic integration of the Lindblad equation, the feedback-corrected
// master equations, and the reduced effective model for the code qubit.
#pragma once

#include <vector>

#include "qsensor/protocols.hpp"
#include "qsensor/qlin.hpp"

namespace qs {

enum class MasterVariant { PlainLindblad, Corrected, CorrectedWithEc, ReducedEffective };

struct MasterConfig {
  SensorCode code;
  NoiseModel noise;
  double g = 0.0;
  double duration = 0.0;
  double dt = 1e-3;
  MasterVariant variant = MasterVariant::Corrected;
  double ec_interval = 0.01;     // tau_ec for CorrectedWithEc and parity-monitor cadence
  double record_interval = 0.1;  // spacing of stored samples
  bool check_positivity = true;

  void validate() const;
};

struct MasterResult {
  std::vector<double> times;
  std::vector<double> p;              // <psi0| rho |psi0>
  std::vector<cx> coherence;          // <O+| rho |O->
  std::vector<DensityMatrix> states;  // at record times
  double max_trace_drift = 0.0;
  double max_hermiticity_defect = 0.0;
};

// -i[H, rho] + gamma * sum_k (2 Jk rho Jk' - Jk'Jk rho - rho Jk'Jk)
Matrix lindblad_rhs(const Matrix& rho, const Matrix& h, const std::vector<Matrix>& jumps,
                    double gamma);

// -i(H_nh rho - rho H_nh') + 2 gamma sum_k [(1-alpha_k) Ck Jk rho Jk' Ck' + alpha_k Jk rho Jk'],
// with alpha_k = alpha on photodetector channels and 0 on parity-monitored ones,
// plus kappa (C rho C' - rho) for dark counts.
Matrix corrected_rhs(const Matrix& rho, const SensorCode& code, const NoiseModel& noise, double g);

// Projective code-vs-wrong readout followed by the logical repair unitary on the
// wrong outcome; identity on the remaining subspace.
Matrix apply_code_ec(const Matrix& rho, const SensorCode& code);

// Parity-monitor readout: project onto each channel's single-decay subspace and
// apply that channel's correction; even-parity remainder untouched.
Matrix apply_parity_ec(const Matrix& rho, const SensorCode& code);

// Classic fixed-step RK4 with per-step trace renormalization and drift monitoring.
MasterResult integrate(const MasterConfig& cfg);

// Closed form of the reduced effective model:
// p(t) = (1 + cos(2 g t) exp(-2 (gamma alpha + kappa/2) t)) / 2
double reduced_effective_solution(double g, double gamma, double alpha, double kappa, double t);

// Coherence-mode eigenvalue of the corrected Liouvillian: returns lambda with
// m1 = |Im lambda|, m2 = -Re lambda for the mode overlapping |O+><O-|.
cx coherence_mode_eigenvalue(const SensorCode& code, const NoiseModel& noise, double g);

}  // namespace qs
