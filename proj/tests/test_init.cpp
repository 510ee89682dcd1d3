#include "oracles.hpp"

#include "marcf/init.hpp"
#include "marcf/simulate.hpp"

#include <doctest.h>

using namespace marcf;

TEST_CASE("least-squares Kronecker seed") {
  Rng rng(21);
  const CoefPair truth{rng.gaussian(4, 4) / 3.0, rng.gaussian(3, 3) / 2.0};
  const TransitionSample exact = exact_transitions(truth, 50, rng);
  const CoefPair est = nkp_seed(exact, 4, 3, 0.0);
  CHECK(oracle::kron_error(est, truth) < 1e-6);
  CHECK(std::abs(est.A1.norm() - est.A2.norm()) < 1e-12 * est.A1.norm());

  // Fewer transitions than p1 p2 columns: singular without a ridge.
  const TransitionSample few = exact_transitions(truth, 8, rng);
  CHECK_THROWS_AS(nkp_seed(few, 4, 3, 0.0), NumericalError);
  const CoefPair ridge = nkp_seed(few, 4, 3, 1e-2);
  CHECK(ridge.A1.allFinite());
  CHECK(ridge.A2.allFinite());

  CHECK_THROWS_AS(nkp_seed(exact, 5, 3, 0.0), ShapeError);
  CHECK_THROWS_AS(nkp_seed(exact, 2, 2, -1.0), ShapeError);

  // Truncation to the requested ranks.
  const CoefPair low = nkp_seed(exact, 2, 1, 0.0);
  Eigen::JacobiSVD<Matrix> s1(low.A1), s2(low.A2);
  CHECK(s1.singularValues()(2) < 1e-12);
  CHECK(s2.singularValues()(1) < 1e-12);
}

TEST_CASE("spectral split recovers an exact decomposition") {
  for (int k = 0; k < 10; ++k) {
    Rng rng = Rng::derive(22, k);
    StructuralDims dims = oracle::random_dims(rng, 4, 8, 1, 3);
    // [C R P] needs full column rank for the split to be unique.
    while (2 * dims.r1 - dims.d1 > dims.p1 || 2 * dims.r2 - dims.d2 > dims.p2)
      dims = oracle::random_dims(rng, 4, 8, 1, 3);
    const MarcfParams truth = rebalance(oracle::perturbed_params(rng, dims, 0.0), 1.0, false);
    const MarcfParams split = spectral_split(assemble(truth), dims, 1.0);
    CAPTURE(k);
    CHECK(theta_distance(split, truth) < 1e-6);
    CHECK(identification_defect(split) < 1e-10);
  }
}

TEST_CASE("spectral split degenerate overlaps") {
  Rng rng(23);
  for (int d : {0, 2}) {
    const StructuralDims dims{6, 5, 2, 2, d, d};
    const MarcfParams truth = oracle::perturbed_params(rng, dims, 0.0);
    const CoefPair c = assemble(truth);
    const MarcfParams split = spectral_split(c, dims, 1.5);
    CAPTURE(d);
    CHECK(oracle::kron_error(assemble(split), c) < 1e-10);
    CHECK(reg2(split, 1.5) < 1e-10);
    CHECK(split.dims() == dims);
  }
}

TEST_CASE("spectral split rejects rank-deficient input") {
  Rng rng(24);
  const Matrix u = oracle::orthonormal(rng, 5, 1);
  const CoefPair c{u * u.transpose(), Matrix::Identity(4, 4)};
  CHECK_THROWS_AS(spectral_split(c, StructuralDims{5, 4, 2, 2, 1, 1}, 1.0), NumericalError);
  CHECK_THROWS_AS(spectral_split(c, StructuralDims{4, 4, 1, 1, 1, 1}, 1.0), ShapeError);
}

TEST_CASE("specific spaces come from the cross projector") {
  // P_U (I - P_V) maps onto span(R) when U = [C R], V = [C P].
  Rng rng(25);
  const StructuralDims dims{7, 7, 3, 3, 1, 1};
  const MarcfParams th = oracle::perturbed_params(rng, dims, 0.0);
  const ModeBlocks& m = th.modes[0];
  const Matrix pu = projector(m.response_basis());
  const Matrix pv = projector(m.predictor_basis());
  const Matrix cross = pu * (Matrix::Identity(7, 7) - pv);
  CHECK((projector(m.R) * cross - cross).norm() < 1e-12);
  CHECK(leading_left_singular_vectors(cross, 2).cols() == 2);
  CHECK((projector(leading_left_singular_vectors(cross, 2)) - projector(m.R)).norm() < 1e-10);
}

TEST_CASE("initialization on noise-free data") {
  Rng rng(26);
  DgpSpec spec;
  spec.dims = {6, 5, 2, 2, 1, 1};
  const MarcfParams truth = draw_marcf_params(spec, rng);
  const TransitionSample exact = exact_transitions(assemble(truth), 300, rng);
  FitConfig cfg;
  cfg.eta = 0.05;
  cfg.max_iter = 3000;
  const MarcfParams a = initialize(exact, spec.dims, cfg);
  const MarcfParams b = initialize(exact, spec.dims, cfg);
  CHECK(oracle::kron_error(assemble(a), assemble(truth)) < 1e-2);
  CHECK(reg2(a, cfg.hp.b) < 1e-10);
  for (int m = 0; m < 2; ++m) {
    CHECK(a.modes[m].C == b.modes[m].C);
    CHECK(a.modes[m].D == b.modes[m].D);
  }
}
