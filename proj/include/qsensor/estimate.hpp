// Damped-oscillation fitting, sensitivity (delta-g per sqrt total time) and
// scaling-exponent extraction.
#pragma once

#include <functional>
#include <vector>

#include <Eigen/Dense>

namespace qs {

struct FitSample {
  double t;
  double p;
  double sigma = 1.0;  // weight = 1/sigma^2
};

enum class EnvelopeModel { Auto, Exponential, Gaussian };

struct FitResult {
  double m1 = 0.0;         // oscillation rate
  double m2 = 0.0;         // decay rate (exponential) or Gaussian rate
  double amplitude = 0.0;
  double offset = 0.0;
  Eigen::Matrix4d covariance = Eigen::Matrix4d::Zero();
  double residual_norm = 0.0;
  bool gaussian_envelope = false;
  bool converged = false;
  int iterations = 0;
};

// Weighted nonlinear least squares for p = (1 + A cos(m1 t) env(m2, t))/2 + c with
// env exponential or Gaussian; initial m1 from the dominant periodogram peak.
FitResult fit_damped_cosine(const std::vector<FitSample>& samples,
                            EnvelopeModel envelope = EnvelopeModel::Auto);

struct SensitivityReport {
  double delta_g = 0.0;   // signal units per sqrt(total time)
  double optimal_t = 0.0;
  double scaling_exponent = 0.0;  // filled by scaling studies
  double baseline_ramsey = 0.0;
};

// Delta g(t) = sqrt(p(1-p)) / (|dp/dg| sqrt(T_total/t)) minimized over t_grid.
// The curve family is evaluated at g +- dg (central difference, dg = 1e-4 g).
SensitivityReport sensitivity(const std::function<double(double, double)>& p_of_t_g, double g,
                              double t_total, const std::vector<double>& t_grid);

// Least-squares slope of log(delta_g) vs log(T).
double scaling_exponent(const std::vector<std::pair<double, double>>& delta_g_vs_total_time);

// Convenience grid builder: n points linear in [lo, hi].
std::vector<double> linspace(double lo, double hi, int n);

}  // namespace qs
