#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "qsensor/analytic.hpp"
#include "qsensor/protocols.hpp"
#include "qsensor/trajectory.hpp"

using namespace qs;

namespace {

const DelayParams kCaption{0.2, 0.2, 1.0};  // tau = 0.2/gamma, g = 0.2 gamma, gamma = 1

// main-text printed forms, used as an independent algebraic cross-check
cx a_main_text(double t, const DelayParams& p) {
  const cx i(0, 1);
  const double g = p.g, gam = p.gamma, tau = p.tau;
  return std::exp(-i * g * t) * std::cos(g * tau) -
         i * std::sin(g * tau) * std::exp(i * g * t) * (2 * g + i * gam) * (2 * g + i * gam) /
             (4 * g * g) -
         i * (gam * gam / (4 * g * g)) * std::sin(g * tau) * std::exp(-i * g * t);
}

cx b_main_text(double t, const DelayParams& p) {
  const cx i(0, 1);
  const double g = p.g, gam = p.gamma, tau = p.tau;
  return std::cos(g * tau) * std::exp(i * g * t) -
         i * std::exp(-i * g * t) * std::sin(g * tau) * (2 * g - i * gam) * (2 * g - i * gam) /
             (4 * g * g) -
         i * std::exp(i * g * t) * std::sin(g * tau) * (gam * gam + 4.0 * i * g * gam) /
             (4 * g * g);
}

struct FullModel {
  SensorCode code;
  Matrix h_nh;
  Matrix jump;
  Matrix correction;

  explicit FullModel(const DelayParams& p)
      : code(build_example_i(p.g, p.gamma, DephasingStrategy::exact_term())) {
    h_nh = code.h_nonhermitian(p.g, p.gamma);
    jump = code.jumps[0].op.m;
    correction = code.jumps[0].correction.m;
  }

  Matrix propagator(double t) const { return expm((cx(0, -1) * t * h_nh).eval()); }

  // state after segments (first = free evolution, then cycles of jump + delay +
  // correction + evolution), exactly composed in the 4-dimensional space
  Vector compose(const JumpTimes& times, const DelayParams& p) const {
    Vector psi = code.initial_state().v;
    const Matrix u_tau = propagator(p.tau);
    const size_t n = times.segments.size();
    const size_t body_end = times.has_trailing_free_segment ? n - 1 : n;
    psi = (propagator(times.segments[0]) * psi).eval();
    for (size_t k = 1; k < body_end; ++k) {
      psi = (correction * (u_tau * (jump * psi))).eval();
      psi = (propagator(times.segments[k]) * psi).eval();
    }
    if (body_end < n && n > 1) {
      // trailing free segment follows the last correction
      psi = (correction * (u_tau * (jump * psi))).eval();
      psi = (propagator(times.segments[n - 1]) * psi).eval();
    } else if (!times.has_trailing_free_segment && n > 1) {
      psi = (correction * (u_tau * (jump * psi))).eval();
    }
    return psi;
  }
};

}  // namespace

TEST_CASE("tau = 0 reduces the coefficients to pure phases") {
  DelayParams p{0.0, 0.3, 1.0};
  for (double t : {0.1, 1.0, 4.0}) {
    CHECK(std::abs(a_coeff(t, p) - std::exp(cx(0, -p.g * t))) < 1e-13);
    CHECK(std::abs(b_coeff(t, p) - std::exp(cx(0, p.g * t))) < 1e-13);
  }
}

TEST_CASE("main-text and appendix forms are the same function") {
  for (double t : {0.2, 0.9, 2.7, 6.3}) {
    CHECK(std::abs(a_coeff(t, kCaption) - a_main_text(t, kCaption)) < 1e-12);
    CHECK(std::abs(b_coeff(t, kCaption) - b_main_text(t, kCaption)) < 1e-12);
  }
}

TEST_CASE("coefficients match the matrix-element oracle") {
  // a(t) = [f1 e^{-i lambda t} + g1 (m1 + n1)] e^{gamma (t+tau)/2} extracted from
  // the full 4x4 propagators of Example I
  const DelayParams p = kCaption;
  FullModel model(p);
  const Matrix u_tau = model.propagator(p.tau);
  const Vector down0 = tensor(ket_down(), ket_zero()).v;
  const Vector down1 = tensor(ket_down(), ket_one()).v;
  const Vector up0 = tensor(ket_up(), ket_zero()).v;
  const Vector up1 = tensor(ket_up(), ket_one()).v;
  const Vector plus0 = model.code.code_plus.v;
  const Vector minus0 = model.code.wrong_plus.v;
  const Vector minus1 = model.code.code_minus.v;
  const Vector plus1 = model.code.wrong_minus.v;

  const cx f1 = down0.dot(u_tau * down0);
  const cx g1 = up0.dot(u_tau * down0);
  const cx f2 = down1.dot(u_tau * down1);
  const cx g2 = up1.dot(u_tau * down1);
  CHECK(std::abs(f1 - f2) < 1e-14);  // the paper's f1 = f2

  for (double t : {0.4, 1.3, 3.1}) {
    const Matrix u_t = model.propagator(t);
    const cx m1 = minus0.dot(u_t * minus0);
    const cx n1 = plus0.dot(u_t * minus0);
    const cx m2 = plus1.dot(u_t * plus1);
    const cx n2 = minus1.dot(u_t * plus1);
    const double strip = std::exp(p.gamma * (t + p.tau) / 2.0);
    const cx a_full = f1 * std::exp(cx(-p.gamma / 2 * t, -p.g * t)) + g1 * (m1 + n1);
    const cx b_full = f2 * std::exp(cx(-p.gamma / 2 * t, p.g * t)) + g2 * (m2 + n2);
    CHECK(std::abs(a_full * strip - a_coeff(t, p)) < 1e-10);
    CHECK(std::abs(b_full * strip - b_coeff(t, p)) < 1e-10);
  }
}

TEST_CASE("small-g handling is continuous") {
  DelayParams tiny{0.2, 0.0, 1.0};  // g = 0 exactly: removable singularity
  CHECK(std::isfinite(std::abs(a_coeff(1.0, tiny))));
  DelayParams small{0.2, 1e-9, 1.0};
  DelayParams ref{0.2, 1e-4, 1.0};
  CHECK(std::abs(a_coeff(1.0, small) - a_coeff(1.0, ref)) < 1e-3);
  CHECK(std::abs(b_coeff(1.0, small) - b_coeff(1.0, ref)) < 1e-3);
}

TEST_CASE("single segment reduces to the Ramsey cosine") {
  DelayParams p{0.0, 0.25, 1.0};
  JumpTimes times;
  times.segments = {1.7};
  CHECK(exact_probability(times, p) ==
        doctest::Approx(0.5 * (1 + std::cos(2 * 0.25 * 1.7))).epsilon(1e-12));
}

TEST_CASE("appendix induction: composed state equals the coefficient products") {
  Philox rng(99, 0);
  const DelayParams p = kCaption;
  FullModel model(p);
  for (int rep = 0; rep < 6; ++rep) {
    JumpTimes times;
    const int n_jumps = 1 + static_cast<int>(rng.uniform() * 5);
    for (int k = 0; k <= n_jumps; ++k) times.segments.push_back(0.2 + 2.0 * rng.uniform());
    times.has_trailing_free_segment = false;
    times.segments.pop_back();
    // compose C U(tau) sm U(t_k) ... on the initial state
    Vector psi = model.compose(times, p);
    cx prod_a = std::exp(cx(0, -p.g * times.segments[0]));
    cx prod_b = std::exp(cx(0, p.g * times.segments[0]));
    for (size_t k = 1; k < times.segments.size(); ++k) {
      prod_a *= a_coeff(times.segments[k], p);
      prod_b *= b_coeff(times.segments[k], p);
    }
    // the state has the claimed (f,g)-split form: code amplitudes proportional to
    // the coefficient products, with a common factor absorbing the global decay
    const cx alpha = model.code.code_plus.v.dot(psi);
    const cx beta = model.code.code_minus.v.dot(psi);
    const double scale = std::abs(alpha * prod_b) + std::abs(beta * prod_a);
    CHECK(std::abs(alpha * prod_b - beta * prod_a) / scale < 1e-9);
    // ... and nothing leaks outside span{code, wrong}
    const Matrix p_out = identity(4) - model.code.code_projector() -
                         model.code.wrong_projector();
    CHECK((p_out * psi).norm() / psi.norm() < 1e-12);
  }
}

TEST_CASE("omitted wrong-subspace weight stays order tau^2, independent of N") {
  const DelayParams p = kCaption;
  FullModel model(p);
  Philox rng(7, 3);
  const Matrix pw = model.code.wrong_projector();
  double w5 = 0, w50 = 0;
  for (int n_jumps : {5, 50}) {
    JumpTimes times;
    for (int k = 0; k <= n_jumps; ++k) times.segments.push_back(rng.exponential(p.gamma));
    times.segments.resize(n_jumps);
    times.has_trailing_free_segment = false;
    Vector psi = model.compose(times, p);
    psi.normalize();
    const double wrong_weight = std::real(psi.dot(pw * psi));
    if (n_jumps == 5)
      w5 = wrong_weight;
    else
      w50 = wrong_weight;
  }
  const double scale = p.g * p.g * p.tau * p.tau + p.gamma * p.gamma * p.tau * p.tau;
  CHECK(w5 < 3 * scale);
  CHECK(w50 < 3 * scale);  // does not grow with N
}

TEST_CASE("exact probability equals the trajectory's code-conditional readout") {
  // jump times recorded from real trajectories, replayed through the product
  // formula; agreement to 1e-8 per trajectory
  const DelayParams p = kCaption;
  TrajectoryConfig cfg;
  cfg.code = build_example_i(p.g, p.gamma, DephasingStrategy::exact_term());
  cfg.noise.gamma = p.gamma;
  cfg.noise.correction_delay = p.tau;
  cfg.g = p.g;
  cfg.duration = 40.0;
  cfg.dt = 1e-3;
  cfg.n_traj = 1;
  cfg.seed = 31337;
  cfg.stop_after_corrections = 6;
  int compared = 0;
  for (int idx = 0; idx < 25; ++idx) {
    TrajectoryRecord rec = run_trajectory(cfg, idx);
    if (rec.evolution_segments.size() < 6) continue;
    JumpTimes times;
    times.segments = rec.evolution_segments;
    times.has_trailing_free_segment = false;
    const double p_traj = readout_probability_code_conditional(rec.final_state, cfg.code);
    const double p_formula = exact_probability(times, p);
    CHECK(std::abs(p_traj - p_formula) < 1e-8);
    ++compared;
  }
  CHECK(compared >= 20);
}

TEST_CASE("exact probability stays within [0, 1] and log domain is stable") {
  Philox rng(55, 0);
  const DelayParams p = kCaption;
  for (int rep = 0; rep < 50; ++rep) {
    JumpTimes times;
    const int n = 1 + static_cast<int>(rng.uniform() * 200);
    for (int k = 0; k < n; ++k) times.segments.push_back(rng.exponential(p.gamma));
    const double v = exact_probability(times, p);
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
  }
  // very long lists: products underflow in linear space but not in log space
  JumpTimes long_times;
  Philox rng2(56, 0);
  for (int k = 0; k < 10000; ++k) long_times.segments.push_back(rng2.exponential(p.gamma));
  const double v = exact_probability(long_times, p);
  CHECK(std::isfinite(v));
  CHECK(v >= 0.0);
  CHECK(v <= 1.0);
}

TEST_CASE("approximation reduces to the cosine at tau = 0") {
  DelayParams p{0.0, 0.2, 1.0};
  for (double t : {2.0, 7.0, 19.0})
    CHECK(approx_probability(t, p, 2) ==
          doctest::Approx(0.5 * (1 + std::cos(2 * p.g * t))).epsilon(1e-12));
}

TEST_CASE("truncated second order bounds the resummed curves from below at late times") {
  // the printed late-time form decays linearly (1 - X) while the resummed third
  // order and the full expression carry exp(-X) >= 1 - X, so their envelopes sit
  // above it
  const DelayParams p = kCaption;
  const double t_hi = 0.5 * p.validity_ceiling();
  const double period = M_PI / (p.g * (1 - p.gamma * p.tau));
  int checked = 0;
  for (double t = 0.5 * t_hi; t + period <= t_hi; t += period) {
    double env2 = 0, env3 = 0, env_full = 0;
    for (double s = t; s < t + period; s += period / 64) {
      env2 = std::max(env2, std::abs(approx_probability(s, p, 2) - 0.5));
      env3 = std::max(env3, std::abs(approx_probability(s, p, 3) - 0.5));
      env_full = std::max(env_full, std::abs(mean_field_probability(s, p) - 0.5));
    }
    CHECK(env3 >= env2 - 1e-9);
    CHECK(env_full >= env2 - 1e-9);
    ++checked;
  }
  CHECK(checked >= 3);
}

TEST_CASE("mean-field full expression tracks the approximation over the window") {
  const DelayParams p = kCaption;
  double max_dev2 = 0, max_dev3 = 0;
  for (double t = p.validity_floor() * 5; t <= 0.5 * p.validity_ceiling(); t += 0.5) {
    max_dev2 = std::max(max_dev2, std::abs(mean_field_probability(t, p) -
                                           approx_probability(t, p, 2)));
    max_dev3 = std::max(max_dev3, std::abs(mean_field_probability(t, p) -
                                           approx_probability(t, p, 3)));
  }
  CHECK(max_dev2 < 0.06);
  CHECK(max_dev3 < 0.04);  // the reconstructed third order is the closer one
}

TEST_CASE("gaussian exponent coefficient approaches 2/9 for small parameters") {
  // (gamma Delta)^2 / 2 vs (2/9) tau^2 g^4 with Delta the per-cycle log-magnitude
  // imbalance of the mean-field factors
  for (auto [g, tau, band] : {std::tuple{0.02, 0.02, 0.02}, std::tuple{0.05, 0.05, 0.07}}) {
    DelayParams p{tau, g, 1.0};
    const double delta =
        std::abs(std::log(std::abs(a_coeff(1.0 / p.gamma, p))) -
                 std::log(std::abs(b_coeff(1.0 / p.gamma, p))));
    const double coeff = p.gamma * p.gamma * delta * delta / 2.0;
    const double target = (2.0 / 9.0) * tau * tau * g * g * g * g;
    CHECK(coeff / target == doctest::Approx(1.0).epsilon(band * 2 + 0.02));
  }
}

TEST_CASE("frequency adjudication picks the appendix /6 correction") {
  const DelayParams p = kCaption;
  // phase slope of the mean-field coherence over the validity window
  double t0 = 5.0, t1 = p.validity_ceiling();
  const int n = 4000;
  double prev_arg = 0, total = 0;
  for (int i = 0; i < n; ++i) {
    const double t = t0 + (t1 - t0) * i / (n - 1);
    const double cycles = p.gamma * t * (1 - p.gamma * p.tau);
    const cx la = cycles * std::log(a_coeff(1 / p.gamma, p));
    const cx lb = cycles * std::log(b_coeff(1 / p.gamma, p));
    const double arg = std::imag(lb - la);  // phase of conj(A) B
    if (i > 0) total += arg - prev_arg;
    prev_arg = arg;
  }
  const double m1 = total / (t1 - t0) / 2.0;
  const EnvelopePrediction env = predicted_envelope(p);
  CHECK(std::abs(m1 - env.frequency_appendix) < std::abs(m1 - env.frequency_main_text));
  CHECK(std::abs(m1 - env.frequency_appendix) / m1 < 0.05);
  CHECK(env.gaussian_rate ==
        doctest::Approx(std::sqrt(2.0 / 9.0) * p.g * p.g * (1 - p.gamma * p.tau) * p.tau));

  // tau -> 0: no decay, bare frequency
  const EnvelopePrediction trivial = predicted_envelope(DelayParams{0.0, 0.3, 1.0});
  CHECK(trivial.gaussian_rate == 0.0);
  CHECK(trivial.frequency_appendix == doctest::Approx(0.3));
  CHECK(trivial.frequency_main_text == doctest::Approx(0.3));
}

TEST_CASE("coefficient magnitudes grow linearly in gamma tau, not quadratically") {
  // the printed coefficients exceed one at first order in gamma*tau once the
  // global decay is stripped; pin the actual scaling law
  const double g = 0.2, gamma = 1.0;
  double prev = 0;
  for (double tau : {0.2, 0.1, 0.05}) {
    DelayParams p{tau, g, gamma};
    const double dev = std::abs(a_coeff(1.0 / gamma, p) * b_coeff(1.0 / gamma, p)) - 1.0;
    const double ratio = dev / (gamma * tau);
    CHECK(ratio == doctest::Approx(1.05).epsilon(0.15));
    prev = ratio;
  }
  (void)prev;
}

TEST_CASE("samplers are deterministic and respect their contracts") {
  const DelayParams p = kCaption;
  Philox rng_a(5, 9), rng_b(5, 9);
  JumpTimes a = sample_jump_times(30.0, p, rng_a, JumpSampling::SumConstrained);
  JumpTimes b = sample_jump_times(30.0, p, rng_b, JumpSampling::SumConstrained);
  REQUIRE(a.segments.size() == b.segments.size());
  for (size_t i = 0; i < a.segments.size(); ++i) CHECK(a.segments[i] == b.segments[i]);
  double sum = 0;
  for (double s : a.segments) sum += s;
  CHECK(sum == doctest::Approx(30.0 * (1 - p.gamma * p.tau)).epsilon(1e-12));

  Philox rng_c(5, 10);
  JumpTimes c = sample_jump_times(30.0, p, rng_c, JumpSampling::Physical);
  double physical = 0;
  for (double s : c.segments) physical += s;
  const int jumps = static_cast<int>(c.segments.size()) - (c.has_trailing_free_segment ? 1 : 0);
  CHECK(physical + jumps * p.tau <= 30.0 + p.tau + 1e-9);

  McEstimate est = mc_average(10.0, p, 400, 77);
  CHECK(est.mean > 0.0);
  CHECK(est.mean < 1.0);
  CHECK(est.stderr_mean > 0.0);
  McEstimate est2 = mc_average(10.0, p, 400, 77);
  CHECK(est.mean == est2.mean);  // seeded
}
