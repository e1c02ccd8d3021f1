#include "qsensor/estimate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace qs {

namespace {

double envelope(double m2, double t, bool gaussian) {
  return gaussian ? std::exp(-(m2 * t) * (m2 * t)) : std::exp(-m2 * t);
}

struct Model {
  bool gaussian;
  double eval(const Eigen::Vector4d& th, double t) const {
    return 0.5 * (1.0 + th(0) * std::cos(th(1) * t) * envelope(th(2), t, gaussian)) + th(3);
  }
  Eigen::Vector4d jacobian_row(const Eigen::Vector4d& th, double t) const {
    const double env = envelope(th(2), t, gaussian);
    const double c = std::cos(th(1) * t);
    const double s = std::sin(th(1) * t);
    Eigen::Vector4d j;
    j(0) = 0.5 * c * env;
    j(1) = -0.5 * th(0) * t * s * env;
    j(2) = gaussian ? -0.5 * th(0) * c * env * 2.0 * th(2) * t * t : -0.5 * th(0) * c * env * t;
    j(3) = 1.0;
    return j;
  }
};

// dominant periodogram peak over an oversampled frequency grid
double dft_peak(const std::vector<FitSample>& samples) {
  const double t_span = samples.back().t - samples.front().t;
  if (t_span <= 0) throw std::invalid_argument("fit_damped_cosine: degenerate time span");
  double mean = 0;
  for (const auto& s : samples) mean += s.p;
  mean /= static_cast<double>(samples.size());
  double dt_min = t_span;
  for (size_t i = 1; i < samples.size(); ++i)
    dt_min = std::min(dt_min, samples[i].t - samples[i - 1].t);
  const double w_min = 2 * M_PI / (4.0 * t_span);
  const double w_max = M_PI / std::max(dt_min, 1e-12);
  const int n_grid = 2048;
  double best_w = w_min, best_power = -1.0;
  for (int k = 0; k < n_grid; ++k) {
    const double w = w_min * std::pow(w_max / w_min, k / static_cast<double>(n_grid - 1));
    double re = 0, im = 0;
    for (const auto& s : samples) {
      re += (s.p - mean) * std::cos(w * s.t);
      im += (s.p - mean) * std::sin(w * s.t);
    }
    const double power = re * re + im * im;
    if (power > best_power) {
      best_power = power;
      best_w = w;
    }
  }
  if (best_power <= 0) throw std::runtime_error("fit_damped_cosine: no spectral peak (flat data)");
  return best_w;
}

// log-envelope regression on local extrema of |p - 1/2|
double envelope_rate_guess(const std::vector<FitSample>& samples) {
  std::vector<std::pair<double, double>> peaks;
  for (size_t i = 1; i + 1 < samples.size(); ++i) {
    const double a = std::abs(samples[i].p - 0.5);
    if (a > std::abs(samples[i - 1].p - 0.5) && a >= std::abs(samples[i + 1].p - 0.5) && a > 1e-6)
      peaks.emplace_back(samples[i].t, std::log(a));
  }
  if (peaks.size() < 2) return 0.0;
  double st = 0, sy = 0, stt = 0, sty = 0;
  for (auto& [t, y] : peaks) {
    st += t;
    sy += y;
    stt += t * t;
    sty += t * y;
  }
  const double n = static_cast<double>(peaks.size());
  const double denom = n * stt - st * st;
  if (std::abs(denom) < 1e-12) return 0.0;
  return std::max(0.0, -(n * sty - st * sy) / denom);
}

FitResult fit_with_model(const std::vector<FitSample>& samples, const Model& model,
                         Eigen::Vector4d th) {
  const int n = static_cast<int>(samples.size());
  Eigen::VectorXd r(n);
  Eigen::MatrixXd jac(n, 4);
  auto fill = [&](const Eigen::Vector4d& p) {
    double chi2 = 0;
    for (int i = 0; i < n; ++i) {
      const double w = 1.0 / samples[i].sigma;
      r(i) = (model.eval(p, samples[i].t) - samples[i].p) * w;
      jac.row(i) = (model.jacobian_row(p, samples[i].t) * w).transpose();
      chi2 += r(i) * r(i);
    }
    return chi2;
  };

  double chi2 = fill(th);
  double lambda = 1e-3;
  FitResult out;
  for (int iter = 0; iter < 200; ++iter) {
    out.iterations = iter + 1;
    const Eigen::Matrix4d jtj = jac.transpose() * jac;
    const Eigen::Vector4d grad = jac.transpose() * r;
    if (grad.norm() < 1e-10) {
      out.converged = true;
      break;
    }
    Eigen::Matrix4d damped = jtj;
    for (int k = 0; k < 4; ++k) damped(k, k) += lambda * std::max(jtj(k, k), 1e-12);
    const Eigen::Vector4d step = damped.ldlt().solve(-grad);
    const Eigen::Vector4d trial = th + step;
    Eigen::VectorXd r_old = r;
    Eigen::MatrixXd jac_old = jac;
    const double chi2_trial = fill(trial);
    if (chi2_trial < chi2) {
      th = trial;
      chi2 = chi2_trial;
      lambda = std::max(lambda * 0.3, 1e-12);
    } else {
      r = r_old;
      jac = jac_old;
      lambda *= 8.0;
      if (lambda > 1e12) break;
    }
  }
  out.amplitude = th(0);
  out.m1 = std::abs(th(1));
  out.m2 = th(2);
  out.offset = th(3);
  out.residual_norm = std::sqrt(chi2);
  out.gaussian_envelope = model.gaussian;
  const Eigen::Matrix4d jtj = jac.transpose() * jac;
  const double dof = std::max(1, n - 4);
  Eigen::FullPivLU<Eigen::Matrix4d> lu(jtj);
  if (lu.isInvertible()) out.covariance = lu.inverse() * (chi2 / dof);
  // a negative decay this small is numerically zero
  if (out.m2 < 0 && out.m2 > -1e-8) out.m2 = 0.0;
  return out;
}

FitResult best_fit(const std::vector<FitSample>& samples, bool gaussian) {
  const double w_peak = dft_peak(samples);
  const double m2_guess = envelope_rate_guess(samples);
  const Model model{gaussian};
  FitResult best;
  bool have = false;
  for (double w : {w_peak, 0.5 * w_peak, 2.0 * w_peak}) {
    Eigen::Vector4d th(1.0, w, gaussian ? std::sqrt(std::max(m2_guess, 1e-6)) : m2_guess, 0.0);
    FitResult fit = fit_with_model(samples, model, th);
    if (!have || fit.residual_norm < best.residual_norm) {
      best = fit;
      have = true;
    }
  }
  return best;
}

}  // namespace

FitResult fit_damped_cosine(const std::vector<FitSample>& samples, EnvelopeModel envelope_model) {
  if (samples.size() < 8) throw std::invalid_argument("fit_damped_cosine: need >= 8 samples");
  for (size_t i = 1; i < samples.size(); ++i)
    if (samples[i].t <= samples[i - 1].t)
      throw std::invalid_argument("fit_damped_cosine: times must be increasing");

  switch (envelope_model) {
    case EnvelopeModel::Exponential: return best_fit(samples, false);
    case EnvelopeModel::Gaussian: return best_fit(samples, true);
    case EnvelopeModel::Auto: break;
  }
  FitResult expo = best_fit(samples, false);
  FitResult gauss = best_fit(samples, true);
  // switch to the Gaussian envelope only when it is decisively better
  return (gauss.residual_norm * 2.0 < expo.residual_norm) ? gauss : expo;
}

SensitivityReport sensitivity(const std::function<double(double, double)>& p_of_t_g, double g,
                              double t_total, const std::vector<double>& t_grid) {
  if (t_grid.empty()) throw std::invalid_argument("sensitivity: empty grid");
  const double dg = 1e-4 * std::abs(g);
  if (!(dg > 0)) throw std::invalid_argument("sensitivity: g must be nonzero");
  SensitivityReport rep;
  rep.delta_g = std::numeric_limits<double>::infinity();
  bool any_derivative = false;
  for (double t : t_grid) {
    if (t <= 0 || t > t_total) continue;
    const double dpdg = (p_of_t_g(t, g + dg) - p_of_t_g(t, g - dg)) / (2 * dg);
    if (std::abs(dpdg) < 1e-14) continue;
    any_derivative = true;
    const double p = std::clamp(p_of_t_g(t, g), 1e-12, 1.0 - 1e-12);
    const double value = std::sqrt(p * (1.0 - p)) / (std::abs(dpdg) * std::sqrt(t_total / t));
    if (value < rep.delta_g) {
      rep.delta_g = value;
      rep.optimal_t = t;
    }
  }
  if (!any_derivative)
    throw std::runtime_error("sensitivity: dp/dg vanishes on the whole grid");
  return rep;
}

double scaling_exponent(const std::vector<std::pair<double, double>>& points) {
  if (points.size() < 4) throw std::invalid_argument("scaling_exponent: need >= 4 points");
  double lo = points.front().first, hi = points.front().first;
  for (auto& [T, d] : points) {
    if (!(T > 0) || !(d > 0)) throw std::invalid_argument("scaling_exponent: non-positive input");
    lo = std::min(lo, T);
    hi = std::max(hi, T);
  }
  if (std::log10(hi / lo) < 1.5)
    throw std::invalid_argument("scaling_exponent: need >= 1.5 decades of T");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (auto& [T, d] : points) {
    const double x = std::log(T), y = std::log(d);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double n = static_cast<double>(points.size());
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

std::vector<double> linspace(double lo, double hi, int n) {
  std::vector<double> out(n);
  for (int i = 0; i < n; ++i) out[i] = lo + (hi - lo) * i / (n - 1);
  return out;
}

}  // namespace qs
