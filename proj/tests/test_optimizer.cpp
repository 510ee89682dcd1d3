#include "oracles.hpp"

#include "marcf/optimizer.hpp"
#include "marcf/simulate.hpp"

#include <doctest.h>

using namespace marcf;

namespace {

MarcfParams jitter(const MarcfParams& th, Rng& rng, double eps) {
  MarcfParams out = th;
  for (auto& m : out.modes) {
    m.C += eps * rng.gaussian(m.C.rows(), m.C.cols());
    m.R += eps * rng.gaussian(m.R.rows(), m.R.cols());
    m.P += eps * rng.gaussian(m.P.rows(), m.P.cols());
    m.D += eps * rng.gaussian(m.D.rows(), m.D.cols());
  }
  return out;
}

}  // namespace

TEST_CASE("config validation") {
  FitConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.eta = 0.0;
  CHECK_THROWS_AS(cfg.validate(), ShapeError);
  cfg = FitConfig{};
  cfg.max_iter = -1;
  CHECK_THROWS_AS(cfg.validate(), ShapeError);
  cfg = FitConfig{};
  cfg.hp.b = 0.0;
  CHECK_THROWS_AS(cfg.validate(), ShapeError);
}

TEST_CASE("a stationary start stops immediately") {
  Rng rng(11);
  const StructuralDims dims{5, 4, 2, 2, 1, 1};
  const MarcfParams truth = rebalance(oracle::perturbed_params(rng, dims, 0.0), 1.0);
  const TransitionSample exact = exact_transitions(assemble(truth), 40, rng);
  const FitReport rep = fit(truth, exact, FitConfig{});
  CHECK(rep.converged);
  CHECK(rep.iterations_run == 0);
  CHECK(rep.objective_trace.size() == 1);
  CHECK(rep.final_gradient_norm <= 1e-10);
}

TEST_CASE("noise-free recovery from a nearby start") {
  Rng rng(12);
  const StructuralDims dims{5, 4, 2, 2, 1, 1};
  const MarcfParams truth = rebalance(oracle::perturbed_params(rng, dims, 0.0), 1.0);
  const TransitionSample exact = exact_transitions(assemble(truth), 200, rng);
  FitConfig cfg;
  cfg.eta = 0.03;
  cfg.max_iter = 20000;
  cfg.rel_tol = 0.0;
  const FitReport rep = fit(jitter(truth, rng, 0.05), exact, cfg);
  CHECK(rep.backoffs_used == 0);
  CHECK(rep.objective_trace.back() < 1e-7 * rep.objective_trace.front());
  CHECK(oracle::kron_error(assemble(rep.theta_hat), assemble(truth)) < 1e-4);
  CHECK(identification_defect(rep.theta_hat) < 1e-5);
}

TEST_CASE("objective decreases for a small step") {
  Rng rng(13);
  const StructuralDims dims{6, 5, 3, 2, 1, 1};
  const TransitionSample s = oracle::random_sample(rng, 6, 5, 100);
  FitConfig cfg;
  cfg.eta = 1e-3;
  cfg.max_iter = 300;
  cfg.rel_tol = 0.0;
  const FitReport rep = fit(oracle::perturbed_params(rng, dims, 0.1), s, cfg);
  REQUIRE(rep.objective_trace.size() == static_cast<std::size_t>(rep.iterations_run) + 1);
  for (std::size_t j = 1; j < rep.objective_trace.size(); ++j)
    CHECK(rep.objective_trace[j] <= rep.objective_trace[j - 1] * (1 + 1e-12));
  CHECK(rep.backoffs_used == 0);
  CHECK(rep.eta_used == cfg.eta);
}

TEST_CASE("fits are deterministic and rotation equivariant") {
  Rng rng(14);
  const StructuralDims dims{5, 5, 3, 2, 2, 1};
  const TransitionSample s = oracle::random_sample(rng, 5, 5, 60);
  FitConfig cfg;
  cfg.eta = 5e-3;
  cfg.max_iter = 200;
  const MarcfParams th0 = oracle::perturbed_params(rng, dims, 0.1);
  const FitReport a = fit(th0, s, cfg);
  const FitReport b = fit(th0, s, cfg);
  CHECK(a.objective_trace == b.objective_trace);
  for (int m = 0; m < 2; ++m) CHECK(a.theta_hat.modes[m].D == b.theta_hat.modes[m].D);

  MarcfParams rot = th0;
  std::array<std::array<Matrix, 3>, 2> qs;
  for (int m = 0; m < 2; ++m) {
    const int d = dims.d(m), k = dims.r(m) - d;
    qs[m] = {random_orthonormal(rng, d, d), random_orthonormal(rng, k, k),
             random_orthonormal(rng, k, k)};
    rot.modes[m] = rotate_mode(th0.modes[m], qs[m][0], qs[m][1], qs[m][2]);
  }
  const FitReport c = fit(rot, s, cfg);
  REQUIRE(c.objective_trace.size() == a.objective_trace.size());
  for (std::size_t j = 0; j < a.objective_trace.size(); ++j)
    CHECK(std::abs(c.objective_trace[j] - a.objective_trace[j]) <= 1e-10 * std::abs(a.objective_trace[j]));
  for (int m = 0; m < 2; ++m) {
    const ModeBlocks back = rotate_mode(a.theta_hat.modes[m], qs[m][0], qs[m][1], qs[m][2]);
    CHECK((back.C - c.theta_hat.modes[m].C).norm() < 1e-9);
    CHECK((back.R - c.theta_hat.modes[m].R).norm() < 1e-9);
    CHECK((back.P - c.theta_hat.modes[m].P).norm() < 1e-9);
    CHECK((back.D - c.theta_hat.modes[m].D).norm() < 1e-9);
  }
}

TEST_CASE("divergence backs off the step size") {
  Rng rng(15);
  const StructuralDims dims{4, 4, 2, 2, 1, 1};
  const TransitionSample s = oracle::random_sample(rng, 4, 4, 50);
  const MarcfParams th0 = oracle::perturbed_params(rng, dims, 0.1);
  FitConfig cfg;
  cfg.max_iter = 200;
  cfg.eta = 1e6;
  CHECK_THROWS_AS(fit(th0, s, cfg), NumericalError);

  // A step that only diverges at full size.
  cfg.eta = 1.0;
  cfg.backoff_factor = 0.01;
  const FitReport rep = fit(th0, s, cfg);
  CHECK(rep.backoffs_used >= 1);
  CHECK(rep.eta_used == doctest::Approx(std::pow(0.01, rep.backoffs_used)));
  CHECK(std::isfinite(rep.objective_trace.back()));
}

TEST_CASE("reduced-rank fits") {
  Rng rng(16);
  const CoefPair truth{0.6 * oracle::orthonormal(rng, 5, 2) * oracle::orthonormal(rng, 5, 2).transpose(),
                       0.8 * oracle::orthonormal(rng, 4, 2) * oracle::orthonormal(rng, 4, 2).transpose()};
  const TransitionSample exact = exact_transitions(truth, 200, rng);
  FitConfig cfg;
  cfg.eta = 0.05;
  cfg.max_iter = 5000;
  cfg.rel_tol = 1e-14;
  cfg.init_ridge = 0.0;
  const CoefPair est = fit_rrmar(exact, 2, 2, cfg);
  CHECK(std::abs(est.A1.norm() - est.A2.norm()) < 1e-12 * est.A1.norm());
  CHECK(oracle::kron_error(est, truth) < 1e-6);

  const TransitionSample s = oracle::random_sample(rng, 5, 4, 80);
  FitReport rep;
  const CoefPair noisy = fit_rrmar(LaggedMoments(s), 1, 2, FitConfig{}, &rep);
  CHECK(rep.theta_hat.dims() == StructuralDims{5, 4, 1, 2, 0, 0});
  Eigen::JacobiSVD<Matrix> sv(noisy.A1);
  CHECK(sv.singularValues()(1) < 1e-12 * sv.singularValues()(0));
  CHECK(std::abs(noisy.A1.norm() - noisy.A2.norm()) < 1e-12 * noisy.A1.norm());
}
