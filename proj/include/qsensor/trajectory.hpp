// Monte-Carlo quantum-jump engine: stochastic unraveling of the master equation
// with detector imperfections (loss, dark counts, dead time) and conditional
// corrections applied after a configurable delay.
#pragma once

#include <cstdint>
#include <vector>

#include "qsensor/protocols.hpp"
#include "qsensor/qlin.hpp"

namespace qs {

struct TrajectoryConfig {
  SensorCode code;
  NoiseModel noise;
  double g = 0.0;
  double duration = 0.0;
  double dt = 1e-3;
  int n_traj = 1;
  uint64_t seed = 0;
  std::vector<double> record_times;

  bool allow_jumps_during_delay = false;  // re-enable the O(gamma^3 tau^3) path
  bool delay_applies_to_dark = true;      // same hardware path by default
  bool refocus_during_dead_time = false;  // gate controls off while the detector is blind
  double parity_check_interval = 0.0;     // 0 = continuous parity monitoring
  int stop_after_corrections = 0;         // 0 = run the full duration
  int threads = 1;

  void validate() const;
};

struct ClickEvent {
  double time = 0.0;
  int channel = -1;  // -1 = dark count
  bool detected = true;
};

// One trajectory's record.
struct TrajectoryRecord {
  std::vector<ClickEvent> clicks;
  std::vector<double> p;       // |<psi0|psi>|^2 on the normalized state, per record time
  std::vector<double> p_code;  // conditioned on the code subspace, per record time
  std::vector<double> evolution_segments;  // correction-to-jump durations, step-quantized
  double final_time = 0.0;
  StateVector final_state;
};

struct TrajectoryResult {
  std::vector<double> times;
  std::vector<double> p;
  std::vector<double> stderr_p;
  std::vector<double> p_code;
  std::vector<double> n_clicks_mean;
};

TrajectoryRecord run_trajectory(const TrajectoryConfig& cfg, int traj_index);

// Mean and standard error of the readout probability over n_traj trajectories.
// Deterministic for fixed (seed, n_traj, dt) regardless of thread count.
TrajectoryResult ensemble_probability(const TrajectoryConfig& cfg);

// |<psi0|psi>|^2 with |psi0> = (|O+> + |O->)/sqrt(2); psi is normalized first.
double readout_probability(const StateVector& psi, const SensorCode& code);

// Probability of psi0 conditioned on finding the state inside the code subspace.
double readout_probability_code_conditional(const StateVector& psi, const SensorCode& code);

}  // namespace qs
