#include "oracles.hpp"

#include "marcf/model.hpp"

#include <doctest.h>

using namespace marcf;

namespace {

MarcfParams identified(std::uint64_t seed, const StructuralDims& dims) {
  Rng rng(seed);
  return oracle::perturbed_params(rng, dims, 0.0);
}

Matrix sv_tail(const Matrix& a, int r) {
  Eigen::JacobiSVD<Matrix> svd(a);
  return svd.singularValues().tail(a.rows() - r);
}

}  // namespace

TEST_CASE("dims validation") {
  CHECK_NOTHROW(StructuralDims{20, 10, 3, 2, 1, 1}.validate());
  CHECK_THROWS_WITH_AS(StructuralDims({5, 5, 3, 2, 4, 0}).validate(), "d1 exceeds r1", ShapeError);
  CHECK_THROWS_AS(StructuralDims({5, 5, 6, 2, 0, 0}).validate(), ShapeError);
  CHECK_THROWS_AS(StructuralDims({5, 5, 2, 2, -1, 0}).validate(), ShapeError);
}

TEST_CASE("assemble") {
  MarcfParams id;
  for (int m = 0; m < 2; ++m)
    id.modes[m] = {Matrix::Identity(2, 2), Matrix(2, 0), Matrix(2, 0), Matrix::Identity(2, 2)};
  const CoefPair c = assemble(id);
  CHECK(c.A1 == Matrix::Identity(2, 2));
  CHECK(c.A2 == Matrix::Identity(2, 2));

  const MarcfParams rr = identified(1, {6, 5, 2, 2, 0, 0});
  const CoefPair c0 = assemble(rr);
  const auto& m1 = rr.modes[0];
  CHECK((c0.A1 - m1.R * m1.D * m1.P.transpose()).norm() < 1e-14);

  const MarcfParams th = identified(2, {8, 6, 3, 2, 1, 1});
  const CoefPair ct = assemble(th);
  CHECK(sv_tail(ct.A1, 3).maxCoeff() < 1e-8);
  CHECK(sv_tail(ct.A2, 2).maxCoeff() < 1e-8);
}

TEST_CASE("df_count") {
  CHECK(df_count({20, 10, 3, 2, 1, 1}) == 143);
  const StructuralDims rr{20, 10, 3, 2, 0, 0};
  CHECK(df_count(rr) == 2 * 20 * 3 + 2 * 10 * 2 + 9 + 4);
  for (int d1 = 0; d1 <= 3; ++d1)
    for (int d2 = 0; d2 <= 2; ++d2) {
      const StructuralDims d{20, 10, 3, 2, d1, d2};
      CHECK(df_count(rr) - df_count(d) == 20 * d1 + 10 * d2);
      if (d1 < 3) CHECK(df_count(d) - df_count({20, 10, 3, 2, d1 + 1, d2}) == 20);
    }
}

TEST_CASE("spectral radius") {
  CoefPair c{0.5 * Matrix::Identity(3, 3), 0.5 * Matrix::Identity(2, 2)};
  CHECK(spectral_radius_product(c) == doctest::Approx(0.25));
  CoefPair z{Matrix::Zero(3, 3), Matrix::Zero(2, 2)};
  CHECK(spectral_radius_product(z) == 0.0);
  Rng rng(3);
  CoefPair r{rng.gaussian(4, 4), rng.gaussian(3, 3)};
  CHECK(std::abs(spectral_radius(oracle::kron(r.A2, r.A1)) - spectral_radius_product(r)) < 1e-8);
}

TEST_CASE("rebalance") {
  const StructuralDims dims{7, 6, 3, 2, 1, 1};
  MarcfParams th = identified(4, dims);
  {
    // Equalize first so the fixed point check is not about norms.
    const MarcfParams eq = rebalance(th, 1.0);
    const MarcfParams again = rebalance(eq, 1.0);
    CHECK(theta_distance(eq, again) < 1e-8);
  }
  SUBCASE("scaling C keeps A") {
    MarcfParams scaled = th;
    scaled.modes[0].C *= 3.0;
    const CoefPair before = assemble(scaled);
    const MarcfParams out = rebalance(scaled, 1.0, false);
    const CoefPair after = assemble(out);
    CHECK((before.A1 - after.A1).norm() < 1e-10);
    CHECK((before.A2 - after.A2).norm() < 1e-10);
    CHECK(identification_defect(out) < 1e-10);
  }
  SUBCASE("norms are equalized") {
    MarcfParams t = th;
    const CoefPair c = assemble(t);
    t.modes[0].D *= 4.0 / c.A1.norm();
    t.modes[1].D *= 1.0 / c.A2.norm();
    const CoefPair after = assemble(rebalance(t, 1.0));
    CHECK(after.A1.norm() == doctest::Approx(2.0).epsilon(1e-10));
    CHECK(after.A2.norm() == doctest::Approx(2.0).epsilon(1e-10));
    const CoefPair before = assemble(t);
    CHECK((after.kron() - before.kron()).norm() < 1e-10 * before.kron().norm());
  }
  SUBCASE("target balance") {
    Rng rng(5);
    MarcfParams messy = oracle::perturbed_params(rng, dims, 0.3);
    const MarcfParams out = rebalance(messy, 2.5);
    CHECK(out.b == 2.5);
    CHECK(identification_defect(out) < 1e-9);
    for (const auto& blk : out.modes)
      CHECK(blk.response_basis().squaredNorm() == doctest::Approx(6.25 * blk.D.rows()).epsilon(1e-10));
  }
  SUBCASE("rank deficient input") {
    MarcfParams bad = th;
    bad.modes[0].R = bad.modes[0].C * Matrix::Ones(1, 2);
    CHECK_THROWS_AS(rebalance(bad, 1.0), NumericalError);
  }
}

TEST_CASE("signal strength") {
  MarcfParams id;
  for (int m = 0; m < 2; ++m)
    id.modes[m] = {Matrix::Identity(2, 2), Matrix(2, 0), Matrix(2, 0), Matrix::Identity(2, 2)};
  CHECK(signal_strength(id) == doctest::Approx(std::sqrt(2.0)));
  const MarcfParams eq = rebalance(identified(6, {5, 4, 2, 2, 1, 0}), 1.0);
  CHECK(std::abs(assemble(eq).A1.norm() - signal_strength(eq)) < 1e-10);
  CHECK(signal_strength(zero_params({3, 3, 1, 1, 0, 0})) == 0.0);
}

TEST_CASE("theta_distance") {
  const StructuralDims dims{8, 7, 4, 3, 2, 1};
  const MarcfParams a = identified(7, dims);
  CHECK(theta_distance(a, a) < 1e-12);

  Rng rng(8);
  MarcfParams rotated = a;
  for (int m = 0; m < 2; ++m) {
    const int d = dims.d(m), k = dims.r(m) - d;
    rotated.modes[m] = rotate_mode(a.modes[m], random_orthonormal(rng, d, d),
                                   random_orthonormal(rng, k, k), random_orthonormal(rng, k, k));
    CHECK((rotated.modes[m].assemble() - a.modes[m].assemble()).norm() < 1e-12);
  }
  CHECK(theta_distance(a, rotated) < 1e-6);

  const MarcfParams b = identified(9, dims);
  CHECK(std::abs(theta_distance(a, b) - theta_distance(b, a)) < 1e-8);
  CHECK(std::abs(theta_distance(rotated, b) - theta_distance(a, b)) < 1e-6);
  CHECK_THROWS_AS(theta_distance(a, identified(1, {8, 7, 4, 3, 1, 1})), ShapeError);
}

TEST_CASE("theta_distance matches sign brute force in one-dimensional blocks") {
  for (int k = 0; k < 50; ++k) {
    Rng rng = Rng::derive(10, k);
    const int d1 = k % 2, d2 = (k / 2) % 2;
    const StructuralDims dims{4, 3, d1 + 1, d2 + (d2 == 0 ? 1 : k % 3 == 0), d1, d2};
    const MarcfParams a = oracle::perturbed_params(rng, dims, 0.0);
    const MarcfParams b = oracle::perturbed_params(rng, dims, 0.0);
    CHECK(std::abs(theta_distance(a, b) - oracle::sign_brute_force_distance(a, b)) < 1e-8);
  }
}

TEST_CASE("identified bases have the trace identity") {
  const MarcfParams a = identified(11, {9, 6, 4, 3, 2, 1});
  for (const auto& blk : a.modes)
    CHECK(blk.response_basis().squaredNorm() == doctest::Approx(blk.D.rows()).epsilon(1e-12));
  CHECK(identification_defect(a) < 1e-12);
}

TEST_CASE("equalize_norms keeps the Kronecker product") {
  Rng rng(12);
  const CoefPair c{rng.gaussian(3, 3), 5.0 * rng.gaussian(2, 2)};
  const CoefPair e = equalize_norms(c);
  CHECK(e.A1.norm() == doctest::Approx(e.A2.norm()).epsilon(1e-12));
  CHECK((e.kron() - c.kron()).norm() < 1e-12 * c.kron().norm());
}
