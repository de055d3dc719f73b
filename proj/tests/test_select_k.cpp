#include "doctest.h"

#include <cmath>
#include <random>

#include "promises/errors.hpp"
#include "promises/select_k.hpp"
#include "promises/simgen.hpp"
#include "test_util.hpp"

using namespace promises;

TEST_CASE("select_k: singleton grid") {
  const testutil::Planted p = testutil::planted(4, 10, 5, 0.1, 307);
  const std::vector<double> grid{0.0};
  const KSelection s = select_k(p.data.Xs, grid, AlignmentConfig{});
  CHECK(s.k_best == 0.0);
  REQUIRE(s.table.size() == 1);
  CHECK(s.table[0].fold_scores.size() == 4);
  CHECK(std::isfinite(s.table[0].mean_score));
  CHECK_FALSE(s.criterion.empty());
}

TEST_CASE("select_k: pure noise gives finite scores for every candidate") {
  SimulationSpec spec{4, 5, 8, 1.0, {}, 311, {}};
  const SimulatedDataset d = simulate_dataset(spec, Matrix::Zero(5, 8));
  const std::vector<double> grid{0.0, 0.1, 1.0, 10.0};
  const KSelection s = select_k(d.Xs, grid, AlignmentConfig{});
  REQUIRE(s.table.size() == 4);
  for (const KScore& row : s.table) CHECK(std::isfinite(row.mean_score));
  const KSelection e = select_k(d.Xs, grid, AlignmentConfig{}, true);
  for (const KScore& row : e.table) CHECK(std::isfinite(row.mean_score));
}

TEST_CASE("select_k: validation") {
  const testutil::Planted p = testutil::planted(2, 6, 3, 0.1, 313);
  const std::vector<double> grid{0.0, 1.0};
  CHECK_THROWS_AS(select_k(p.data.Xs, grid, AlignmentConfig{}), ValidationError);
  const testutil::Planted q = testutil::planted(3, 6, 3, 0.1, 317);
  const std::vector<double> bad{-1.0};
  CHECK_THROWS_AS(select_k(q.data.Xs, bad, AlignmentConfig{}), ValidationError);
  const std::vector<double> none;
  CHECK_THROWS_AS(select_k(q.data.Xs, none, AlignmentConfig{}), ValidationError);
}

TEST_CASE("select_k: rotations planted near the prior mode favour a positive k") {
  const Index N = 6, n = 8, m = 6;
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    std::mt19937_64 rng(1000 + seed);
    const Matrix M = column_center(gaussian_matrix(n, m, rng));
    SimulationSpec spec;
    spec.N = N;
    spec.n = n;
    spec.m = m;
    spec.noise_sigma = 2.0;
    spec.seed = seed;
    // mode of F = I is the identity; plant rotations close to it
    for (Index i = 0; i < N; ++i) {
      const Matrix near = Matrix::Identity(m, m) + 0.02 * gaussian_matrix(m, m, rng);
      spec.planted_rotations.push_back(polar_orthogonal_factor(near).orthogonal);
    }
    const SimulatedDataset d = simulate_dataset(spec, M);
    const std::vector<double> grid{0.0, 0.1, 1.0, 10.0};
    AlignmentConfig config;
    config.prior = {0.0, IdentityLocation{}};
    const KSelection s = select_k(d.Xs, grid, config);
    CHECK(s.k_best > 0.0);
  }
}
