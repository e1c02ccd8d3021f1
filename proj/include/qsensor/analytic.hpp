// Closed-form delayed-correction model: per-cycle amplitude coefficients, the
// exact product probability for a given list of jump times, its mean-field
// evaluation, and the late-time approximation with predicted envelope laws.
#pragma once

#include <cstdint>
#include <vector>

#include "qsensor/qlin.hpp"
#include "qsensor/rng.hpp"

namespace qs {

struct DelayParams {
  double tau = 0.0;
  double g = 0.0;
  double gamma = 1.0;

  // g*tau and gamma*tau small is the regime of validity; warn past 0.5.
  bool outside_small_delay_regime() const;
  // 1/gamma << t << 1/(g^2 sqrt(gamma tau^3))
  double validity_floor() const { return 1.0 / gamma; }
  double validity_ceiling() const;
};

// Per-cycle amplitude factors of the code components, with the global
// exp(-gamma (t+tau)/2) decay stripped (it cancels in the probability ratio).
cx a_coeff(double t, const DelayParams& p);
cx b_coeff(double t, const DelayParams& p);

// Jump-time record: segments[0] is the initial (pre-first-jump) evolution; each
// later segment is correction-to-jump; an optional trailing free segment covers
// readout after the last correction.
struct JumpTimes {
  std::vector<double> segments;
  bool has_trailing_free_segment = false;
};

// Probability of the initial state right after the last correction, conditioned
// on the code subspace (the wrong-subspace weight is omitted, as in the product
// formula). Log-domain accumulation; the first segment enters as a pure phase.
double exact_probability(const JumpTimes& times, const DelayParams& p);

// The deterministic evaluation behind the figure's "full expression": every
// cycle at the mean waiting time 1/gamma, N = gamma * t * (1 - gamma tau) cycles.
double mean_field_probability(double t, const DelayParams& p);

// Late-time closed form; order = 2 is the printed two-term result, order = 3
// adds the reconstructed resummed envelope.
double approx_probability(double t, const DelayParams& p, int order = 2);

enum class JumpSampling {
  SumConstrained,  // Poisson process on [0, t(1-gamma tau)]; segments sum exactly to it
  Physical         // renewal process with tau gaps at fixed physical readout time
};

JumpTimes sample_jump_times(double t, const DelayParams& p, Philox& rng,
                            JumpSampling scheme = JumpSampling::SumConstrained);

struct McEstimate {
  double mean = 0.0;
  double stderr_mean = 0.0;
};

McEstimate mc_average(double t, const DelayParams& p, int n_samples, uint64_t seed,
                      JumpSampling scheme = JumpSampling::SumConstrained);

struct EnvelopePrediction {
  double gaussian_rate;        // sqrt(2/9) g^2 (1 - gamma tau) tau
  double frequency_main_text;  // (g + g^3 tau^2 / 3)(1 - gamma tau)
  double frequency_appendix;   // (g + g^3 tau^2 / 6)(1 - gamma tau)
  const char* chosen = "appendix";  // adjudicated by the numeric frequency fit
};

EnvelopePrediction predicted_envelope(const DelayParams& p);

}  // namespace qs
