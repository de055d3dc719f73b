#include "doctest.h"

#include <cmath>
#include <numbers>
#include <random>

#include "promises/aligner.hpp"
#include "promises/errors.hpp"
#include "promises/simgen.hpp"
#include "test_util.hpp"

using namespace promises;

namespace {

Matrix rotation_2d(double theta) {
  Matrix r(2, 2);
  r << std::cos(theta), -std::sin(theta), std::sin(theta), std::cos(theta);
  return r;
}

// independent polar factor through a different decomposition routine
Matrix jacobi_polar(const Matrix& a) {
  Eigen::JacobiSVD<Matrix> svd(a, Eigen::ComputeFullU | Eigen::ComputeFullV);
  return svd.matrixU() * svd.matrixV().transpose();
}

} // namespace

TEST_CASE("estimate_rotation: self-alignment gives the identity") {
  std::mt19937_64 rng(61);
  const Matrix M = gaussian_matrix(8, 4, rng);
  const RotationEstimate r =
      estimate_rotation(M, M, CovariancePair::identity(8, 4), PriorSpec{});
  CHECK((r.rotation - Matrix::Identity(4, 4)).norm() < 1e-12);
  CHECK(r.unique);
}

TEST_CASE("estimate_rotation: recovers a 30 degree rotation") {
  std::mt19937_64 rng(67);
  const Matrix M = gaussian_matrix(10, 2, rng);
  const Matrix R = rotation_2d(std::numbers::pi / 6.0);
  const Matrix X = M * R.transpose();
  const RotationEstimate est =
      estimate_rotation(X, M, CovariancePair::identity(10, 2), PriorSpec{});
  CHECK((est.rotation - R).norm() < 1e-8);
  const GridOptimum grid = oracle_best_rotation_2d(X.transpose() * M, 1e-4);
  CHECK_FALSE(grid.reflection);
  CHECK(std::abs(grid.angle - std::numbers::pi / 6.0) < 1e-4);
}

TEST_CASE("estimate_rotation: a huge concentration pins the identity") {
  std::mt19937_64 rng(71);
  const Matrix X = gaussian_matrix(7, 5, rng);
  const Matrix M = gaussian_matrix(7, 5, rng);
  const RotationEstimate est =
      estimate_rotation(X, M, CovariancePair::identity(7, 5), PriorSpec{1e9, IdentityLocation{}});
  const Matrix oracle = jacobi_polar(X.transpose() * M + 1e9 * Matrix::Identity(5, 5));
  CHECK((est.rotation - oracle).norm() < 1e-9);
  CHECK((est.rotation - Matrix::Identity(5, 5)).norm() < 1e-6);
}

TEST_CASE("estimate_rotation: whitened cross-product under general covariances") {
  std::mt19937_64 rng(73);
  const Index n = 6, m = 4;
  const Matrix X = gaussian_matrix(n, m, rng);
  const Matrix M = gaussian_matrix(n, m, rng);
  const Matrix An = gaussian_matrix(n, n, rng);
  const Matrix Am = gaussian_matrix(m, m, rng);
  CovariancePair cov{An * An.transpose() + Matrix::Identity(n, n),
                     Am * Am.transpose() + Matrix::Identity(m, m)};
  const Matrix F = gaussian_matrix(m, m, rng);
  const RotationEstimate est = estimate_rotation(X, M, cov, 0.5, F);
  const Matrix oracle = jacobi_polar(X.transpose() * cov.sigma_n.inverse() * M *
                                         cov.sigma_m.inverse() +
                                     0.5 * F);
  CHECK((est.rotation - oracle).norm() < 1e-9);
}

TEST_CASE("estimate_scale: closed forms") {
  std::mt19937_64 rng(79);
  const Matrix M = gaussian_matrix(9, 3, rng);
  const CovariancePair id = CovariancePair::identity(9, 3);
  const RotationEstimate self = estimate_rotation(M, M, id, PriorSpec{});
  CHECK(estimate_scale(M, self.rotation, id, self.singular_values).alpha ==
        doctest::Approx(1.0).epsilon(1e-12));

  const Matrix R = random_orthogonal(3, rng);
  const Matrix X = 2.0 * M * R.transpose();
  const RotationEstimate est = estimate_rotation(X, M, id, PriorSpec{});
  CHECK(std::abs(estimate_scale(X, est.rotation, id, est.singular_values).alpha - 2.0) <
        1e-10);
}

TEST_CASE("estimate_scale: matches the 1-D profile maximiser") {
  std::mt19937_64 rng(83);
  const Matrix M = gaussian_matrix(12, 4, rng);
  const Matrix X =
      1.7 * (M + 0.3 * gaussian_matrix(12, 4, rng)) * random_orthogonal(4, rng).transpose();
  const CovariancePair id = CovariancePair::identity(12, 4);
  const RotationEstimate est = estimate_rotation(X, M, id, PriorSpec{});
  const double alpha = estimate_scale(X, est.rotation, id, est.singular_values).alpha;
  const Matrix Y = X * est.rotation;
  const double step = 1e-5;
  double best_alpha = 0.0, best = -1e300;
  for (double a = 0.5; a < 4.0; a += step) {
    const double v = -0.5 * (Y / a - M).squaredNorm();
    if (v > best) {
      best = v;
      best_alpha = a;
    }
  }
  CHECK(std::abs(alpha - best_alpha) <= step);
}

TEST_CASE("estimate_scale: degenerate trace") {
  const CovariancePair id = CovariancePair::identity(3, 2);
  CHECK_THROWS_AS(estimate_scale(Matrix::Ones(3, 2), Matrix::Identity(2, 2), id,
                                 Vector::Zero(2)),
                  NumericError);
}

TEST_CASE("check_existence") {
  CHECK(check_existence(3, 10, 20));
  CHECK_FALSE(check_existence(2, 10, 20));
  CHECK(check_existence(1001, 200, 200000));
  CHECK_FALSE(check_existence(1000, 200, 200000));
  CHECK(check_existence(2, 5, 5));
}

TEST_CASE("estimate_covariances: hand fixed point") {
  std::vector<Matrix> Xs{Matrix::Identity(2, 2), -Matrix::Identity(2, 2)};
  AlignmentConfig config;
  config.covariance_mode = CovarianceMode::dutilleul;
  const CovariancePair cov = estimate_covariances(Xs, Matrix::Zero(2, 2), config);
  CHECK((cov.sigma_n - 0.5 * Matrix::Identity(2, 2)).norm() <= 1e-10);
  CHECK((cov.sigma_m - Matrix::Identity(2, 2)).norm() <= 1e-10);
  CHECK(cov.converged);
  CHECK_FALSE(cov.degenerate);
}

TEST_CASE("estimate_covariances: identity mode and degenerate residuals") {
  std::vector<Matrix> Xs{Matrix::Ones(2, 2), Matrix::Ones(2, 2)};
  AlignmentConfig config;
  const CovariancePair id = estimate_covariances(Xs, Matrix::Ones(2, 2), config);
  CHECK(id.is_identity());
  config.covariance_mode = CovarianceMode::dutilleul;
  const CovariancePair zero = estimate_covariances(Xs, Matrix::Ones(2, 2), config);
  CHECK(zero.degenerate);
  CHECK(zero.sigma_n.isZero(0.0));
  CHECK(zero.sigma_m.isZero(0.0));
}

TEST_CASE("estimate_covariances: existence gate") {
  std::mt19937_64 rng(89);
  AlignmentConfig config;
  config.covariance_mode = CovarianceMode::dutilleul;
  const Matrix M = gaussian_matrix(10, 20, rng);
  std::vector<Matrix> two{gaussian_matrix(10, 20, rng), gaussian_matrix(10, 20, rng)};
  CHECK_THROWS_AS(estimate_covariances(two, M, config), ExistenceError);
  try {
    estimate_covariances(two, M, config);
  } catch (const ExistenceError& e) {
    CHECK(std::string(e.what()).find("m/n + 1") != std::string::npos);
  }
  std::vector<Matrix> three = two;
  three.push_back(gaussian_matrix(10, 20, rng));
  const CovariancePair cov = estimate_covariances(three, M, config);
  CHECK((cov.sigma_n - cov.sigma_n.transpose()).norm() <= 1e-10);
  CHECK((cov.sigma_m - cov.sigma_m.transpose()).norm() <= 1e-10);
  CHECK(Eigen::SelfAdjointEigenSolver<Matrix>(cov.sigma_n).eigenvalues().minCoeff() >= -1e-10);
  CHECK(Eigen::SelfAdjointEigenSolver<Matrix>(cov.sigma_m).eigenvalues().minCoeff() >= -1e-10);
}

TEST_CASE("align: identical inputs") {
  std::mt19937_64 rng(97);
  const Matrix X = column_center(gaussian_matrix(8, 4, rng));
  const std::vector<Matrix> Xs{X, X, X};
  const AlignmentResult r = align(Xs, AlignmentConfig{});
  CHECK(r.iterations_run == 1);
  CHECK(r.converged);
  CHECK(r.dist_trace.size() == 1);
  CHECK(r.dist_trace[0] <= 1e-20); // exact up to rounding in the polar factor
  CHECK((r.reference - X).norm() < 1e-12);
  for (const Matrix& R : r.rotations) CHECK((R - Matrix::Identity(4, 4)).norm() < 1e-12);
  for (double a : r.scales) CHECK(a == 1.0);
}

TEST_CASE("align: planted recovery beats the unaligned error fivefold") {
  const testutil::Planted p = testutil::planted(5, 20, 10, 0.01, 101);
  const AlignmentResult r = align(p.data.Xs, AlignmentConfig{});
  CHECK(r.converged);
  double aligned = 0.0, raw = 0.0;
  for (std::size_t i = 0; i < 5; ++i) {
    // the reference is only defined up to a common orthogonal transform
    const testutil::SimilarityFit fit = testutil::similarity_fit(r.aligned[i], p.M);
    aligned += (r.aligned[i] - p.M * fit.Z).norm();
    raw += (p.data.Xs[i] - p.M).norm();
  }
  CHECK(aligned * 5.0 <= raw);
}

TEST_CASE("align: noise-free recovery of scales and the planted action") {
  const std::vector<double> alphas{1.0, 0.5, 2.0, 1.5, 0.8};
  const testutil::Planted p = testutil::planted(5, 20, 10, 0.0, 103, alphas);
  AlignmentConfig config;
  config.scaling_enabled = true;
  config.tol = 1e-20;
  config.max_iterations = 30;
  const AlignmentResult r = align(p.data.Xs, config);
  const double g_est = testutil::geometric_mean(r.scales);
  const double g_true = testutil::geometric_mean(alphas);
  for (std::size_t i = 0; i < 5; ++i) {
    CHECK(testutil::rel_diff(r.scales[i] / g_est, alphas[i] / g_true) <= 1e-8);
    const testutil::SimilarityFit fit = testutil::similarity_fit(r.aligned[i], p.M);
    CHECK(fit.residual <= 1e-8 * p.M.norm());
  }
}

TEST_CASE("align: scaled runs keep a unit geometric mean and converge under noise") {
  const testutil::Planted p = testutil::planted(5, 20, 10, 0.1, 131, {1.0, 0.7, 1.8, 1.2, 0.9});
  AlignmentConfig config;
  config.scaling_enabled = true;
  const AlignmentResult r = align(p.data.Xs, config);
  CHECK(r.converged);
  CHECK(std::abs(testutil::geometric_mean(r.scales) - 1.0) <= 1e-12);
  // the reference keeps the size of the data instead of shrinking
  double mean_norm = 0.0;
  for (const Matrix& X : p.data.Xs) mean_norm += X.norm() / 5.0;
  CHECK(r.reference.norm() > 0.5 * mean_norm);
}

TEST_CASE("align: scaling disabled pins every scale to 1") {
  const testutil::Planted p = testutil::planted(4, 12, 6, 0.1, 107, {1.0, 2.0, 3.0, 4.0});
  const AlignmentResult r = align(p.data.Xs, AlignmentConfig{});
  for (double a : r.scales) CHECK(a == 1.0);
}

TEST_CASE("align: common variable-space transform leaves the objective unchanged") {
  const testutil::Planted p = testutil::planted(4, 15, 6, 0.05, 109);
  std::mt19937_64 rng(113);
  const Matrix Z = random_orthogonal(6, rng);
  std::vector<Matrix> moved;
  for (const Matrix& X : p.data.Xs) moved.push_back(X * Z);
  AlignmentConfig config;
  const AlignmentResult a = align(p.data.Xs, config);
  const AlignmentResult b = align(moved, config);
  const CovariancePair id = CovariancePair::identity(15, 6);
  const double va = joint_objective(p.data.Xs, a.rotations, a.scales, a.reference, id, 0.0, Matrix{});
  const double vb = joint_objective(moved, b.rotations, b.scales, b.reference, id, 0.0, Matrix{});
  CHECK(testutil::rel_diff(va, vb) <= 1e-8);
}

TEST_CASE("align: subject update never lowers the objective at fixed reference") {
  const testutil::Planted p = testutil::planted(4, 10, 5, 0.2, 127);
  std::mt19937_64 rng(131);
  const Matrix F = gaussian_matrix(5, 5, rng);
  Matrix M0 = Matrix::Zero(10, 5);
  for (const Matrix& X : p.data.Xs) M0 += X;
  M0 /= 4.0;
  const CovariancePair id = CovariancePair::identity(10, 5);
  for (const Matrix& X : p.data.Xs) {
    const std::vector<Matrix> one{X};
    const RotationEstimate est = estimate_rotation(X, M0, id, 1.0, F);
    const std::vector<Matrix> start{Matrix::Identity(5, 5)};
    const std::vector<Matrix> after{est.rotation};
    const std::vector<double> unit{1.0};
    CHECK(joint_objective(one, after, unit, M0, id, 1.0, F) >=
          joint_objective(one, start, unit, M0, id, 1.0, F) - 1e-12);
    for (int t = 0; t < 20; ++t) {
      const std::vector<Matrix> other{random_orthogonal(5, rng)};
      CHECK(joint_objective(one, after, unit, M0, id, 1.0, F) >=
            joint_objective(one, other, unit, M0, id, 1.0, F) - 1e-12);
    }
  }
}

TEST_CASE("align: worker count does not change results") {
  const testutil::Planted p = testutil::planted(5, 12, 6, 0.1, 137);
  AlignmentConfig config;
  config.scaling_enabled = true;
  const AlignmentResult one = align(p.data.Xs, config);
  config.workers = 3;
  const AlignmentResult three = align(p.data.Xs, config);
  CHECK(one.dist_trace == three.dist_trace);
  for (std::size_t i = 0; i < 5; ++i) {
    CHECK((one.rotations[i] - three.rotations[i]).norm() == 0.0);
    CHECK(one.scales[i] == three.scales[i]);
  }
}

TEST_CASE("align: translations are the removed column means") {
  const testutil::Planted p = testutil::planted(3, 8, 4, 0.1, 139);
  std::vector<Matrix> shifted;
  Eigen::RowVectorXd t(4);
  t << 1, -2, 3, 0.5;
  for (const Matrix& X : p.data.Xs) shifted.push_back(X.rowwise() + t);
  const AlignmentResult r = align(shifted, AlignmentConfig{});
  for (const Vector& tr : r.translations) CHECK((tr.transpose() - t).norm() < 1e-12);
}

TEST_CASE("align: dutilleul mode produces symmetric covariances") {
  const testutil::Planted p = testutil::planted(6, 10, 4, 0.3, 149);
  AlignmentConfig config;
  config.covariance_mode = CovarianceMode::dutilleul;
  const AlignmentResult r = align(p.data.Xs, config);
  CHECK(r.iterations_run >= 1);
  CHECK((r.covariances.sigma_n - r.covariances.sigma_n.transpose()).norm() <= 1e-10);
  CHECK((r.covariances.sigma_m - r.covariances.sigma_m.transpose()).norm() <= 1e-10);
  for (const Matrix& R : r.rotations) CHECK(orthogonality_defect(R) <= 1e-8);
}

TEST_CASE("align: dutilleul mode checks existence up front") {
  const testutil::Planted p = testutil::planted(2, 10, 20, 0.3, 151);
  AlignmentConfig config;
  config.covariance_mode = CovarianceMode::dutilleul;
  CHECK_THROWS_AS(align(p.data.Xs, config), ExistenceError);
}

TEST_CASE("align: validation errors") {
  std::vector<Matrix> Xs{Matrix::Ones(3, 2), Matrix::Ones(3, 3)};
  CHECK_THROWS_AS(align(Xs, AlignmentConfig{}), ValidationError);
  std::vector<Matrix> one{Matrix::Ones(3, 2)};
  CHECK_THROWS_AS(align(one, AlignmentConfig{}), ValidationError);
  AlignmentConfig bad;
  bad.tol = 0.0;
  std::vector<Matrix> ok{Matrix::Ones(3, 2), Matrix::Ones(3, 2)};
  CHECK_THROWS_AS(align(ok, bad), ValidationError);
  bad = AlignmentConfig{};
  bad.max_iterations = 0;
  CHECK_THROWS_AS(align(ok, bad), ValidationError);
}
