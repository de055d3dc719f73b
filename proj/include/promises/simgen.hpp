#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "promises/aligner.hpp"

namespace promises {

struct SimulationSpec {
  Index N = 2;
  Index n = 2;
  Index m = 2;
  double noise_sigma = 0.0;
  std::vector<double> scales; // empty means all 1
  std::uint64_t seed = 0;
  std::vector<Matrix> planted_rotations; // empty means Haar draws
};

struct SimulatedDataset {
  std::vector<Matrix> Xs; // column-centred
  std::vector<Matrix> rotations;
  std::vector<double> scales;
};

/// X_i = alpha_i (M + E_i) R_i^T with iid N(0, sigma^2) entries in E_i,
/// then column-centred. Deterministic in the seed.
SimulatedDataset simulate_dataset(const SimulationSpec& spec, const Matrix& M);

Matrix gaussian_matrix(Index rows, Index cols, std::mt19937_64& rng);

/// Haar draw: QR of a Gaussian matrix with the signs of diag(R) folded in.
Matrix random_orthogonal(Index m, std::mt19937_64& rng);
Matrix random_orthogonal(Index m, std::uint64_t seed);

struct GridOptimum {
  Matrix rotation;
  double trace = 0.0;
  double angle = 0.0;
  bool reflection = false;
};

/// Exhaustive scan of O(2) for the maximiser of tr(A^T R): rotations
/// [c -s; s c] and reflections [c s; s -c] for theta on a uniform grid in
/// [0, 2 pi). grid_step must be <= 1e-3.
GridOptimum oracle_best_rotation_2d(const Matrix& A, double grid_step);

/// Joint log-posterior kernel
///   -1/2 sum_i tr{Sm^-1 (X_i R_i / a_i - M)^T Sn^-1 (X_i R_i / a_i - M)}
///   + k sum_i tr(F^T R_i)
/// with all constants dropped. `F` may be empty when k == 0.
double joint_objective(std::span<const Matrix> Xs,
                       std::span<const Matrix> rotations,
                       std::span<const double> scales, const Matrix& M,
                       const CovariancePair& cov, double k, const Matrix& F);

} // namespace promises
