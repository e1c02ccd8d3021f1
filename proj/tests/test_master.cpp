#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "qsensor/estimate.hpp"
#include "qsensor/master.hpp"
#include "qsensor/protocols.hpp"
#include "qsensor/rng.hpp"

using namespace qs;

namespace {

Matrix random_density(Philox& rng, int dim) {
  Matrix a(dim, dim);
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j) a(i, j) = cx(rng.uniform() - 0.5, rng.uniform() - 0.5);
  Matrix rho = a * a.adjoint();
  return rho / rho.trace().real();
}

MasterConfig example_i_config(double g, double gamma, double alpha, double duration) {
  MasterConfig cfg;
  cfg.code = build_example_i(g, gamma, DephasingStrategy::exact_term());
  cfg.noise.gamma = gamma;
  cfg.noise.loss_alpha = alpha;
  cfg.g = g;
  cfg.duration = duration;
  cfg.dt = 0.002;
  cfg.record_interval = 0.1;
  return cfg;
}

}  // namespace

TEST_CASE("lindblad amplitude damping fixed point") {
  const double gamma = 1.0;
  Matrix rho = 0.5 * identity(2);  // maximally mixed
  const Matrix h = Matrix::Zero(2, 2);
  const std::vector<Matrix> jumps = {pauli(Axis::Minus)};
  const double dt = 1e-3;
  for (int step = 0; step < 10000; ++step) {  // t = 10/gamma
    Matrix k1 = lindblad_rhs(rho, h, jumps, gamma);
    Matrix k2 = lindblad_rhs(rho + dt / 2 * k1, h, jumps, gamma);
    Matrix k3 = lindblad_rhs(rho + dt / 2 * k2, h, jumps, gamma);
    Matrix k4 = lindblad_rhs(rho + dt * k3, h, jumps, gamma);
    rho += dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4);
  }
  Matrix ground = Matrix::Zero(2, 2);
  ground(1, 1) = 1.0;  // |down><down|
  CHECK((rho - ground).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("lindblad rhs is traceless") {
  Philox rng(5, 0);
  for (int rep = 0; rep < 6; ++rep) {
    Matrix rho = random_density(rng, 4);
    const Matrix h = pauli_on(2, 1, Axis::X).m;
    const std::vector<Matrix> jumps = {pauli_on(2, 1, Axis::Minus).m,
                                       pauli_on(2, 2, Axis::Minus).m};
    CHECK(std::abs(lindblad_rhs(rho, h, jumps, 0.8).trace()) < 1e-12);
  }
}

TEST_CASE("excited population decays at rate 2 gamma") {
  // d<sp sm>/dt = -2 gamma for rho = |up><up|
  const double gamma = 0.7;
  Matrix rho = Matrix::Zero(2, 2);
  rho(0, 0) = 1.0;
  const Matrix rhs = lindblad_rhs(rho, Matrix::Zero(2, 2), {pauli(Axis::Minus)}, gamma);
  const Matrix number = pauli(Axis::Plus) * pauli(Axis::Minus);
  CHECK(std::real((number * rhs).trace()) == doctest::Approx(-2 * gamma).epsilon(1e-12));
}

TEST_CASE("perfect correction keeps the code coherence at one half") {
  MasterConfig cfg = example_i_config(0.2, 1.0, 0.0, 50.0);
  MasterResult res = integrate(cfg);
  for (size_t i = 0; i < res.coherence.size(); ++i)
    CHECK(std::abs(std::abs(res.coherence[i]) - 0.5) < 1e-6);
  // p(t) = (1 + cos(2 g t))/2
  for (size_t i = 0; i < res.times.size(); ++i)
    CHECK(std::abs(res.p[i] - 0.5 * (1 + std::cos(2 * 0.2 * res.times[i]))) < 1e-6);
}

TEST_CASE("alpha = 1 reduces Eq.5 to uncorrected recycling") {
  Philox rng(9, 0);
  SensorCode code = build_example_i(0.2, 1.0, DephasingStrategy::exact_term());
  NoiseModel noise;
  noise.gamma = 1.0;
  noise.loss_alpha = 1.0;
  Matrix rho = random_density(rng, 4);
  const Matrix got = corrected_rhs(rho, code, noise, 0.2);
  const Matrix h_nh = code.h_nonhermitian(0.2, 1.0);
  const Matrix j = code.jumps[0].op.m;
  const Matrix expect =
      cx(0, -1) * (h_nh * rho - rho * h_nh.adjoint()) + 2.0 * (j * rho * j.adjoint());
  CHECK((got - expect).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("alpha = 0 Eq.5 equals Eq.4 entrywise") {
  Philox rng(10, 0);
  SensorCode code = build_example_i(0.2, 1.0, DephasingStrategy::exact_term());
  NoiseModel noise;  // alpha = 0
  Matrix rho = random_density(rng, 4);
  const Matrix got = corrected_rhs(rho, code, noise, 0.2);
  const Matrix h_nh = code.h_nonhermitian(0.2, 1.0);
  const Matrix cj = code.jumps[0].correction.m * code.jumps[0].op.m;
  const Matrix expect =
      cx(0, -1) * (h_nh * rho - rho * h_nh.adjoint()) + 2.0 * (cj * rho * cj.adjoint());
  CHECK((got - expect).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("EC superoperator identity on the code space") {
  // EC((1-a) C sm rho sp C' + a sm rho sp) = ((1-a) rho + a Z rho Z)/2 with Z the
  // logical phase flip, for rho supported on the code space
  SensorCode code = build_example_i(0.2, 1.0, DephasingStrategy::exact_term());
  const Matrix j = code.jumps[0].op.m;
  const Matrix c = code.jumps[0].correction.m;
  const Matrix z_logical = code.code_plus.v * code.code_plus.v.adjoint() -
                           code.code_minus.v * code.code_minus.v.adjoint() +
                           (identity(4) - code.code_projector());
  const double alpha = 0.3;
  const Vector basis[2] = {code.code_plus.v, code.code_minus.v};
  for (int a = 0; a < 2; ++a) {
    for (int b = 0; b < 2; ++b) {
      const Matrix rho = basis[a] * basis[b].adjoint();
      const Matrix recycled = (1 - alpha) * (c * j) * rho * (c * j).adjoint() +
                              alpha * j * rho * j.adjoint();
      const Matrix got = apply_code_ec(recycled, code);
      const Matrix expect = 0.5 * ((1 - alpha) * rho + alpha * z_logical * rho * z_logical);
      CHECK((got - expect).cwiseAbs().maxCoeff() < 1e-10);
    }
  }
}

TEST_CASE("integrator fourth-order self check") {
  MasterConfig cfg = example_i_config(0.2, 1.0, 0.05, 10.0);
  cfg.record_interval = 1.0;
  cfg.check_positivity = false;
  MasterResult coarse = integrate(cfg);
  cfg.dt /= 2;
  MasterResult fine = integrate(cfg);
  double max_diff = 0;
  for (size_t i = 0; i < coarse.p.size(); ++i)
    max_diff = std::max(max_diff, std::abs(coarse.p[i] - fine.p[i]));
  CHECK(max_diff < 1e-8);
}

TEST_CASE("plain lindblad decays on the relaxation timescale") {
  MasterConfig cfg = example_i_config(0.2, 1.0, 0.0, 8.0);
  cfg.variant = MasterVariant::PlainLindblad;
  MasterResult res = integrate(cfg);
  // coherence gone well before 8/gamma without corrections
  CHECK(std::abs(res.coherence.back()) < 0.05);
  // decay rate is of order gamma: fit log-slope over the first 1/gamma
  const double rate = std::log(0.5 / std::abs(res.coherence[10])) / res.times[10];
  CHECK(rate > 0.5);
  CHECK(rate < 4.0);
}

TEST_CASE("trace hermiticity positivity preserved") {
  MasterConfig cfg = example_i_config(0.2, 1.0, 0.08, 20.0);
  cfg.check_positivity = true;  // validate() at every record throws on violation
  MasterResult res = integrate(cfg);
  CHECK(res.max_trace_drift < 1e-10);
  CHECK(res.max_hermiticity_defect < 1e-10);
}

TEST_CASE("small alpha decay law") {
  // fitted m2 vs 2 gamma alpha + 4 gamma alpha^2 within 10% for alpha <= 0.05
  const double gamma = 1.0, g = 0.02;
  for (double alpha : {0.01, 0.03, 0.05}) {
    MasterConfig cfg;
    cfg.code = build_example_i(g, gamma, DephasingStrategy::exact_term());
    cfg.noise.gamma = gamma;
    cfg.noise.loss_alpha = alpha;
    cfg.g = g;
    cfg.duration = std::min(4.0 / (2 * gamma * alpha), 400.0);
    cfg.dt = 0.004;
    cfg.record_interval = 0.25;
    cfg.check_positivity = false;
    MasterResult res = integrate(cfg);
    std::vector<FitSample> samples;
    for (size_t i = 0; i < res.times.size(); ++i)
      samples.push_back({res.times[i], res.p[i], 1.0});
    FitResult fit = fit_damped_cosine(samples, EnvelopeModel::Exponential);
    const double law = 2 * gamma * alpha + 4 * gamma * alpha * alpha;
    CHECK(std::abs(fit.m2 - law) / law < 0.10);
  }
}

TEST_CASE("reduced effective closed form") {
  // alpha = 0.01, kappa = 0: envelope decay 0.02 gamma
  const double g = 0.2, gamma = 1.0;
  const double p1 = reduced_effective_solution(g, gamma, 0.01, 0.0, 3.0);
  CHECK(p1 == doctest::Approx(0.5 * (1 + std::cos(2 * g * 3.0) * std::exp(-0.02 * 3.0))));
  // alpha = kappa = 0: undamped
  const double p2 = reduced_effective_solution(g, gamma, 0.0, 0.0, 7.0);
  CHECK(p2 == doctest::Approx(0.5 * (1 + std::cos(2 * g * 7.0))).epsilon(1e-14));
  CHECK_THROWS(reduced_effective_solution(g, gamma, -0.1, 0.0, 1.0));
}

TEST_CASE("corrected_with_ec converges to the reduced model as tau_ec -> 0") {
  const double g = 0.2, gamma = 1.0, alpha = 0.05, kappa = 0.1;
  std::vector<double> errors;
  const std::vector<double> taus = {0.08, 0.04, 0.02};
  for (double tau_ec : taus) {
    MasterConfig cfg;
    cfg.code = build_example_i(g, gamma, DephasingStrategy::exact_term());
    cfg.noise.gamma = gamma;
    cfg.noise.loss_alpha = alpha;
    cfg.noise.dark_rate = kappa;
    cfg.g = g;
    cfg.duration = 20.0;
    cfg.dt = 0.002;
    cfg.variant = MasterVariant::CorrectedWithEc;
    cfg.ec_interval = tau_ec;
    cfg.record_interval = 0.5;
    cfg.check_positivity = false;
    MasterResult res = integrate(cfg);
    // deviation at the final time; early-transient maxima are noisier
    errors.push_back(std::abs(res.p.back() - reduced_effective_solution(g, gamma, alpha, kappa,
                                                                        res.times.back())));
  }
  // error is O(tau_ec): halving tau_ec halves the error
  CHECK(errors[0] / errors[1] == doctest::Approx(2.0).epsilon(0.2));
  CHECK(errors[1] / errors[2] == doctest::Approx(2.0).epsilon(0.2));
  CHECK(errors[2] < 0.001);
}

TEST_CASE("coherence mode eigenvalue matches table regime at small g") {
  // full-solution decay and frequency in the g << gamma limit
  const double gamma = 1.0, g = 0.01;
  SensorCode code = build_example_i(g, gamma, DephasingStrategy::exact_term());
  NoiseModel noise;
  noise.gamma = gamma;
  noise.loss_alpha = 0.05;
  const cx lambda = coherence_mode_eigenvalue(code, noise, g);
  CHECK(-lambda.real() == doctest::Approx(0.1135).epsilon(0.01));
  CHECK(std::abs(lambda.imag()) / g == doctest::Approx(2.205).epsilon(0.01));
}
