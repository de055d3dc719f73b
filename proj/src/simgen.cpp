#include "promises/simgen.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "internal.hpp"
#include "promises/errors.hpp"

namespace promises {

Matrix gaussian_matrix(Index rows, Index cols, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix out(rows, cols);
  // fill in row-major order so draws do not depend on storage order
  for (Index i = 0; i < rows; ++i) {
    for (Index j = 0; j < cols; ++j) out(i, j) = normal(rng);
  }
  return out;
}

Matrix random_orthogonal(Index m, std::mt19937_64& rng) {
  if (m < 1) throw DimensionError("random_orthogonal: m must be >= 1");
  const Matrix g = gaussian_matrix(m, m, rng);
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ() * Matrix::Identity(m, m);
  const Matrix& r = qr.matrixQR();
  for (Index j = 0; j < m; ++j) {
    if (r(j, j) < 0.0) q.col(j) *= -1.0;
  }
  return q;
}

Matrix random_orthogonal(Index m, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return random_orthogonal(m, rng);
}

SimulatedDataset simulate_dataset(const SimulationSpec& spec, const Matrix& M) {
  if (spec.N < 1 || spec.n < 1 || spec.m < 1) {
    throw ValidationError("simulation dimensions must be positive");
  }
  if (M.rows() != spec.n || M.cols() != spec.m) {
    throw DimensionError("shared matrix is " + std::to_string(M.rows()) + "x" +
                         std::to_string(M.cols()) + ", spec says " +
                         std::to_string(spec.n) + "x" + std::to_string(spec.m));
  }
  require_finite(M, "shared matrix");
  if (!(spec.noise_sigma >= 0.0) || !std::isfinite(spec.noise_sigma)) {
    throw ValidationError("noise_sigma must be finite and >= 0");
  }
  const auto N = static_cast<std::size_t>(spec.N);
  if (!spec.scales.empty() && spec.scales.size() != N) {
    throw ValidationError("expected " + std::to_string(N) + " scales, got " +
                          std::to_string(spec.scales.size()));
  }
  for (double a : spec.scales) {
    if (!(a > 0.0) || !std::isfinite(a)) {
      throw ValidationError("scales must be finite and > 0");
    }
  }
  if (!spec.planted_rotations.empty()) {
    if (spec.planted_rotations.size() != N) {
      throw ValidationError("expected " + std::to_string(N) +
                            " planted rotations, got " +
                            std::to_string(spec.planted_rotations.size()));
    }
    for (const Matrix& R : spec.planted_rotations) {
      if (R.rows() != spec.m || R.cols() != spec.m ||
          orthogonality_defect(R) > 1e-8) {
        throw ValidationError("planted rotations must be m x m orthogonal");
      }
    }
  }

  std::mt19937_64 rng(spec.seed);
  SimulatedDataset out;
  out.scales = spec.scales.empty() ? std::vector<double>(N, 1.0) : spec.scales;
  out.rotations = spec.planted_rotations;
  if (out.rotations.empty()) {
    for (std::size_t i = 0; i < N; ++i) {
      out.rotations.push_back(random_orthogonal(spec.m, rng));
    }
  }
  out.Xs.reserve(N);
  for (std::size_t i = 0; i < N; ++i) {
    Matrix noisy = M;
    if (spec.noise_sigma > 0.0) {
      noisy += spec.noise_sigma * gaussian_matrix(spec.n, spec.m, rng);
    }
    Matrix X = out.scales[i] * noisy * out.rotations[i].transpose();
    out.Xs.push_back(spec.n >= 2 ? column_center(X) : X);
  }
  return out;
}

GridOptimum oracle_best_rotation_2d(const Matrix& A, double grid_step) {
  if (A.rows() != 2 || A.cols() != 2) {
    throw DimensionError("oracle_best_rotation_2d needs a 2x2 matrix");
  }
  if (!(grid_step > 0.0) || grid_step > 1e-3) {
    throw ValidationError("grid_step must be in (0, 1e-3]");
  }
  const auto steps =
      static_cast<long>(std::ceil(2.0 * std::numbers::pi / grid_step));
  GridOptimum best;
  best.trace = -std::numeric_limits<double>::infinity();
  for (long s = 0; s < steps; ++s) {
    const double theta = static_cast<double>(s) * grid_step;
    const double c = std::cos(theta);
    const double sn = std::sin(theta);
    // tr(A^T R) = sum_ij A_ij R_ij
    const double rot = A(0, 0) * c - A(0, 1) * sn + A(1, 0) * sn + A(1, 1) * c;
    const double ref = A(0, 0) * c + A(0, 1) * sn + A(1, 0) * sn - A(1, 1) * c;
    if (rot > best.trace) {
      best.trace = rot;
      best.angle = theta;
      best.reflection = false;
    }
    if (ref > best.trace) {
      best.trace = ref;
      best.angle = theta;
      best.reflection = true;
    }
  }
  const double c = std::cos(best.angle);
  const double sn = std::sin(best.angle);
  best.rotation.resize(2, 2);
  if (best.reflection) {
    best.rotation << c, sn, sn, -c;
  } else {
    best.rotation << c, -sn, sn, c;
  }
  return best;
}

double joint_objective(std::span<const Matrix> Xs,
                       std::span<const Matrix> rotations,
                       std::span<const double> scales, const Matrix& M,
                       const CovariancePair& cov, double k, const Matrix& F) {
  if (Xs.size() != rotations.size() || Xs.size() != scales.size()) {
    throw DimensionError("joint_objective: subject, rotation and scale counts differ");
  }
  const Index n = M.rows();
  const Index m = M.cols();
  if (cov.sigma_n.rows() != n || cov.sigma_m.rows() != m) {
    throw DimensionError("joint_objective: covariance shapes do not match M");
  }
  if (k != 0.0 && (F.rows() != m || F.cols() != m)) {
    throw DimensionError("joint_objective: prior location must be m x m");
  }
  const detail::Precision precision = detail::Precision::from(cov);
  double residual = 0.0;
  double prior = 0.0;
  for (std::size_t i = 0; i < Xs.size(); ++i) {
    if (Xs[i].rows() != n || Xs[i].cols() != m || rotations[i].rows() != m ||
        rotations[i].cols() != m) {
      throw DimensionError("joint_objective: subject " + std::to_string(i + 1) +
                           " does not conform");
    }
    const Matrix E = Xs[i] * rotations[i] / scales[i] - M;
    residual += precision.identity
                    ? E.squaredNorm()
                    : precision.left(E).cwiseProduct(precision.right(E)).sum();
    if (k != 0.0) prior += F.cwiseProduct(rotations[i]).sum();
  }
  return -0.5 * residual + k * prior;
}

} // namespace promises
