// Sensor-code construction: code states, signal Hamiltonians, jump operators,
// per-jump correction unitaries and dephasing-correction strategies.
#pragma once

#include <functional>
#include <string>
#include <vector>

#include "qsensor/qlin.hpp"

namespace qs {

struct NoiseModel {
  double gamma = 1.0;             // decay rate (Lindblad prefactor convention: channel rate 2*gamma*<J'J>)
  double loss_alpha = 0.0;        // photon-loss probability per click
  double dark_rate = 0.0;         // dark-count rate kappa
  double dead_time = 0.0;         // detector blind window after a detected click
  double correction_delay = 0.0;  // tau between detected jump and applied correction

  void validate() const;
};

struct DephasingStrategy {
  enum class Kind { ExactTerm, EnergyGap, Zeno };
  Kind kind = Kind::ExactTerm;
  double gap_omega = 0.0;      // EnergyGap strength
  double zeno_interval = 0.0;  // Zeno projection period

  static DephasingStrategy exact_term() { return {}; }
  static DephasingStrategy energy_gap(double omega);
  static DephasingStrategy zeno(double dt);
  void validate() const;
};

enum class Detection { Photodetector, ParityMonitor };

struct JumpChannel {
  Operator op;          // jump operator J, fires at rate 2*gamma*<J'J>
  std::string label;
  Operator correction;  // unitary applied on detection
  Detection detection = Detection::Photodetector;
  // ParityMonitor channels only: projector onto the post-decay subspace this
  // channel's correction repairs (used by the cadenced parity readout).
  Matrix decayed_projector;
};

struct SensorCode {
  std::string name;
  int n_qubits = 0;
  StateVector code_plus, code_minus;                    // |O+>, |O->
  StateVector wrong_plus, wrong_minus;                  // dephasing-mixed partners
  std::function<Operator(double)> signal;               // g -> signal Hamiltonian
  std::vector<JumpChannel> jumps;
  DephasingStrategy strategy;
  Operator exact_term;    // Hamiltonian term making code states H_nh eigenstates
  Operator gap_operator;  // P_code - P_wrong
  Operator ec_fix;        // unitary swapping wrong <-> code frames (logical-Z repair)

  int dim() const { return 1 << n_qubits; }
  Matrix code_projector() const;
  Matrix wrong_projector() const;

  // Signal plus the active dephasing-correction term (exact term or energy gap).
  Matrix hamiltonian(double g) const;
  // hamiltonian(g) - i*gamma*sum_k Jk' Jk
  Matrix h_nonhermitian(double g, double gamma) const;

  StateVector initial_state() const;  // (|O+> + |O->)/sqrt(2)

  // Orthonormality, correction unitarity, signal hermiticity.
  void validate(double eps = 1e-10) const;
};

// The unique unitary mapping the post-jump frame back onto the code frame:
// normalized jump images of the code states map to the code states, and both
// frames are completed by Gram-Schmidt over the canonical basis.
Operator correction_from_jump(const StateVector& code_plus, const StateVector& code_minus,
                              const Matrix& jump);

// Example I: two qubits, code {|+0>, |-1>}, signal g*sigma_x^1, single decaying qubit.
SensorCode build_example_i(double g, double gamma, DephasingStrategy strategy);

// Example II: three decaying qubits, code {|+>|Psi+>, |->|Psi->}, parity-monitored ancillas.
SensorCode build_example_ii(double g, double gamma, DephasingStrategy strategy);

// X-Y plane signal g(cos(theta) sx + sin(theta) sy); reduces to Example I at theta = 0.
SensorCode build_xy_code(double theta, double g, double gamma, DephasingStrategy strategy);

// General single-body signal with sin(theta) != 0; the sigma_z component is frozen out
// by a mandatory energy gap and the sensed quantity is g*sin(theta).
SensorCode build_general_signal_code(double theta, double phi, double g, double gamma,
                                     double gap_omega);

// Homodyne-style monitoring: jump sigma_-^1 + b, signal g*sigma_z^1, code along
// sigma_theta = (-b sz + sx/2)/sqrt(b^2 + 1/4).
SensorCode build_homodyne_z(double b, double g, double gamma);

// Two sensing qubits + one good qubit, jumps (sigma_-^1 +- sigma_-^2)/sqrt(2);
// senses g1 - g2.
SensorCode build_interferometer_code(double g1, double g2, double gamma);

// Lookup by CLI name: example_i, example_ii, xy, general, homodyne_z, interferometer.
SensorCode build_code_by_name(const std::string& name, double g, double gamma,
                              DephasingStrategy strategy, double theta = 0.0, double phi = 0.0,
                              double b = 1.0, double g2 = 0.0);

}  // namespace qs
