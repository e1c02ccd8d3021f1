#include "qsensor/analytic.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace qs {

bool DelayParams::outside_small_delay_regime() const {
  return std::abs(g * tau) > 0.5 || std::abs(gamma * tau) > 0.5;
}

double DelayParams::validity_ceiling() const {
  return 1.0 / (g * g * std::sqrt(gamma * tau * tau * tau));
}

namespace {

// 2x2 block of H_nh on the qubit-2 = |0> (s = +1) or |1> (s = -1) subspace,
// exact-term correction included; basis (up, down).
Eigen::Matrix2cd block_h(const DelayParams& p, double s) {
  Eigen::Matrix2cd h;
  const cx i(0, 1);
  h << -i * p.gamma, p.g + i * s * p.gamma / 2.0, p.g - i * s * p.gamma / 2.0, 0.0;
  return h;
}

// Fallback for small g: evaluate a/b from matrix elements of the block
// propagators, with the global decay stripped.
cx coeff_from_blocks(double t, const DelayParams& p, bool want_a) {
  const double s = want_a ? +1.0 : -1.0;
  const Eigen::Matrix2cd h = block_h(p, s);
  const cx i(0, 1);
  Matrix ut = expm((-i * t * Matrix(h)).eval());
  Matrix utau = expm((-i * p.tau * Matrix(h)).eval());
  Vector up(2), dn(2), pl(2), mi(2);
  up << 1, 0;
  dn << 0, 1;
  pl << 1 / std::sqrt(2.0), 1 / std::sqrt(2.0);
  mi << 1 / std::sqrt(2.0), -1 / std::sqrt(2.0);
  const Vector code = want_a ? pl : mi;    // |+> on the 0-tag, |-> on the 1-tag
  const Vector wrong = want_a ? mi : pl;
  const cx f = dn.dot(utau * dn);          // <down|U(tau)|down>
  const cx gg = up.dot(utau * dn);         // <up|U(tau)|down>
  const cx lam = want_a ? cx(p.g, -p.gamma / 2.0) : cx(-p.g, -p.gamma / 2.0);
  const cx code_phase = std::exp(-i * lam * t);
  const cx m = wrong.dot(ut * wrong);
  const cx n = code.dot(ut * wrong);
  const cx full = f * code_phase + gg * (m + n);
  return full * std::exp(p.gamma * (t + p.tau) / 2.0);
}

bool use_block_fallback(double t, const DelayParams& p) {
  return std::abs(p.g) * std::max(t, p.tau) < 1e-6 || std::abs(p.g) < 1e-12;
}

}  // namespace

cx a_coeff(double t, const DelayParams& p) {
  if (t < 0) throw std::invalid_argument("a_coeff: t < 0");
  if (use_block_fallback(t, p)) return coeff_from_blocks(t, p, true);
  const cx i(0, 1);
  const double g = p.g, gam = p.gamma, tau = p.tau;
  return (1.0 / (4 * g * g)) * std::exp(-i * g * t) *
         (4 * g * g * std::cos(g * tau) -
          i * std::sin(g * tau) *
              (gam * gam + std::exp(2.0 * i * g * t) * (2 * g + i * gam) * (2 * g + i * gam)));
}

cx b_coeff(double t, const DelayParams& p) {
  if (t < 0) throw std::invalid_argument("b_coeff: t < 0");
  if (use_block_fallback(t, p)) return coeff_from_blocks(t, p, false);
  const cx i(0, 1);
  const double g = p.g, gam = p.gamma, tau = p.tau;
  return (1.0 / (2 * g * g)) * std::exp(-i * g * tau) *
         (2 * g * g * std::cos(g * t) +
          std::exp(i * g * tau) *
              (2.0 * i * g * g * std::cos(g * tau) +
               (-2 * g * g + 4.0 * i * g * gam + gam * gam) * std::sin(g * tau)) *
              std::sin(g * t));
}

namespace {

double probability_from_logs(cx log_a, cx log_b) {
  const double m = std::max(log_a.real(), log_b.real());
  const cx a = std::exp(log_a - m);
  const cx b = std::exp(log_b - m);
  const double den = std::norm(a) + std::norm(b);
  if (!(den > 0) || !std::isfinite(den))
    throw std::runtime_error("exact_probability: degenerate denominator (both products vanish)");
  return 0.5 + std::real(std::conj(a) * b) / den;
}

}  // namespace

double exact_probability(const JumpTimes& times, const DelayParams& p) {
  if (times.segments.empty()) throw std::invalid_argument("exact_probability: no segments");
  const cx i(0, 1);
  const size_t n = times.segments.size();
  const size_t body_end = times.has_trailing_free_segment ? n - 1 : n;
  cx log_a = -i * p.g * times.segments[0];
  cx log_b = i * p.g * times.segments[0];
  for (size_t k = 1; k < body_end; ++k) {
    const double t = times.segments[k];
    log_a += std::log(a_coeff(t, p));
    log_b += std::log(b_coeff(t, p));
  }
  if (times.has_trailing_free_segment && n > 1) {
    log_a += -i * p.g * times.segments[n - 1];
    log_b += i * p.g * times.segments[n - 1];
  }
  return probability_from_logs(log_a, log_b);
}

double mean_field_probability(double t, const DelayParams& p) {
  const double cycles = p.gamma * t * (1.0 - p.gamma * p.tau);
  if (cycles <= 0) return 0.5 * (1.0 + std::cos(2 * p.g * t));
  const cx la = static_cast<double>(cycles) * std::log(a_coeff(1.0 / p.gamma, p));
  const cx lb = static_cast<double>(cycles) * std::log(b_coeff(1.0 / p.gamma, p));
  return probability_from_logs(la, lb);
}

double approx_probability(double t, const DelayParams& p, int order) {
  if (order != 2 && order != 3) throw std::invalid_argument("approx_probability: order is 2 or 3");
  const double g = p.g, gam = p.gamma, tau = p.tau;
  const double T = t * (1.0 - gam * tau);
  if (order == 2) {
    return 0.5 + 0.5 * std::cos(2 * g * T) -
           (T * tau * tau * g * g * g / 6.0) * std::sin(2 * g * T) -
           (tau * tau * T * T * g * g * g * g / 9.0) * std::cos(2 * g * T);
  }
  // reconstructed third-order curve: resummed Gaussian envelope with the
  // appendix frequency shift
  const double x2 = (2.0 / 9.0) * tau * tau * g * g * g * g * T * T;
  const double m1 = g + g * g * g * tau * tau / 6.0;
  const double env = std::exp(-x2);
  return 0.5 + 0.5 * env * std::cos(2 * m1 * T) -
         (T * tau * tau * g * g * g / 6.0) * env * std::sin(2 * m1 * T);
}

JumpTimes sample_jump_times(double t, const DelayParams& p, Philox& rng, JumpSampling scheme) {
  JumpTimes out;
  if (scheme == JumpSampling::SumConstrained) {
    const double total = t * (1.0 - p.gamma * p.tau);
    const int n = rng.poisson(p.gamma * total);
    std::vector<double> points(n);
    for (int k = 0; k < n; ++k) points[k] = total * rng.uniform();
    std::sort(points.begin(), points.end());
    out.segments.reserve(points.size() + 2);
    double prev = 0.0;
    for (double x : points) {
      out.segments.push_back(x - prev);
      prev = x;
    }
    out.segments.push_back(total - prev);
    out.has_trailing_free_segment = out.segments.size() > 1;
    return out;
  }
  // Physical: exponential waits separated by tau correction gaps; readout at t.
  double clock = 0.0;
  while (true) {
    const double wait = rng.exponential(p.gamma);
    if (clock + wait >= t) {
      out.segments.push_back(t - clock);
      out.has_trailing_free_segment = out.segments.size() > 1;
      return out;
    }
    out.segments.push_back(wait);
    clock += wait + p.tau;
    if (clock >= t) {
      out.has_trailing_free_segment = false;
      return out;
    }
  }
}

McEstimate mc_average(double t, const DelayParams& p, int n_samples, uint64_t seed,
                      JumpSampling scheme) {
  if (n_samples < 1) throw std::invalid_argument("mc_average: n_samples < 1");
  double sum = 0.0, sumsq = 0.0;
  for (int s = 0; s < n_samples; ++s) {
    Philox rng(seed, static_cast<uint64_t>(s));
    const double v = exact_probability(sample_jump_times(t, p, rng, scheme), p);
    sum += v;
    sumsq += v * v;
  }
  const double n = n_samples;
  const double mean = sum / n;
  const double var = n > 1 ? std::max(0.0, (sumsq - n * mean * mean) / (n - 1)) : 0.0;
  return {mean, std::sqrt(var / n)};
}

EnvelopePrediction predicted_envelope(const DelayParams& p) {
  EnvelopePrediction e{};
  const double shrink = 1.0 - p.gamma * p.tau;
  e.gaussian_rate = std::sqrt(2.0 / 9.0) * p.g * p.g * shrink * p.tau;
  e.frequency_main_text = (p.g + p.g * p.g * p.g * p.tau * p.tau / 3.0) * shrink;
  e.frequency_appendix = (p.g + p.g * p.g * p.g * p.tau * p.tau / 6.0) * shrink;
  e.chosen = "appendix";
  return e;
}

}  // namespace qs
