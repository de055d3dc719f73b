#include "promises/aligner.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "internal.hpp"
#include "promises/errors.hpp"

namespace promises {

namespace detail {

Matrix symmetric_inverse(const Matrix& s, const char* what,
                         bool allow_constant_null) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(s);
  if (eig.info() != Eigen::Success) {
    throw NumericError(std::string("eigendecomposition of ") + what +
                       " failed");
  }
  const Vector& values = eig.eigenvalues(); // ascending
  const Index dim = values.size();
  const double largest = values(dim - 1);
  if (!(largest > 0.0)) {
    throw NumericError(std::string(what) + " is singular (no positive eigenvalue)");
  }
  const double cutoff = 1e-10 * largest;

  Index null_count = 0;
  for (Index i = 0; i < dim; ++i) {
    if (values(i) <= cutoff) ++null_count;
  }
  if (null_count > 0) {
    bool tolerated = false;
    if (allow_constant_null && null_count == 1) {
      // column-centred data leaves the constant vector in the null space
      const double alignment = std::abs(eig.eigenvectors().col(0).sum()) /
                               std::sqrt(static_cast<double>(dim));
      tolerated = alignment > 1.0 - 1e-6;
    }
    if (!tolerated) {
      throw NumericError(std::string(what) + " is singular (rank " +
                         std::to_string(dim - null_count) + " of " +
                         std::to_string(dim) + ")");
    }
  }

  Vector inv_values = Vector::Zero(dim);
  for (Index i = 0; i < dim; ++i) {
    if (values(i) > cutoff) inv_values(i) = 1.0 / values(i);
  }
  const Matrix& vecs = eig.eigenvectors();
  return vecs * inv_values.asDiagonal() * vecs.transpose();
}

Precision Precision::from(const CovariancePair& cov) {
  Precision p;
  if (cov.is_identity()) return p;
  p.identity = false;
  p.n_inv = symmetric_inverse(cov.sigma_n, "sigma_n", true);
  p.m_inv = symmetric_inverse(cov.sigma_m, "sigma_m", false);
  return p;
}

void check_same_shape(std::span<const Matrix> Xs, Index min_subjects) {
  if (static_cast<Index>(Xs.size()) < min_subjects) {
    throw ValidationError("need at least " + std::to_string(min_subjects) +
                          " subjects, got " + std::to_string(Xs.size()));
  }
  const Index n = Xs[0].rows();
  const Index m = Xs[0].cols();
  for (std::size_t i = 0; i < Xs.size(); ++i) {
    if (Xs[i].rows() != n || Xs[i].cols() != m) {
      throw ValidationError("subject " + std::to_string(i + 1) + " is " +
                            std::to_string(Xs[i].rows()) + "x" +
                            std::to_string(Xs[i].cols()) + ", expected " +
                            std::to_string(n) + "x" + std::to_string(m));
    }
    require_finite(Xs[i], "subject " + std::to_string(i + 1));
  }
}

namespace {

Matrix mean_of(std::span<const Matrix> Xs) {
  Matrix sum = Xs[0];
  for (std::size_t i = 1; i < Xs.size(); ++i) sum += Xs[i];
  return sum / static_cast<double>(Xs.size());
}

RotationEstimate rotation_step(const Matrix& X, const Matrix& whitened_M,
                               double k, const Matrix& F) {
  Matrix cross = X.transpose() * whitened_M;
  if (k != 0.0) cross = posterior_location(cross, k, F);
  PolarFactor polar = polar_orthogonal_factor(cross);
  return {std::move(polar.orthogonal), std::move(polar.singular_values),
          polar.unique};
}

ScaleEstimate scale_step(const Matrix& X, const Matrix& R,
                         const Precision& precision,
                         const Vector& singular_values) {
  const double trace_d = singular_values.sum();
  if (!(trace_d > 1e-300)) {
    throw NumericError("scale estimate undefined: tr(D) = " +
                       std::to_string(trace_d));
  }
  const Matrix Y = X * R;
  const double whitened =
      precision.identity ? Y.squaredNorm()
                         : precision.left(Y).cwiseProduct(precision.right(Y)).sum();
  ScaleEstimate out;
  out.alpha = whitened / trace_d;
  out.weak_condition = trace_d * trace_d < 10.0 * whitened;
  if (!(out.alpha > 0.0) || !std::isfinite(out.alpha)) {
    throw NumericError("scale estimate is not positive: " +
                       std::to_string(out.alpha));
  }
  return out;
}

} // namespace

AlignmentResult run_alignment(std::span<const Matrix> centred,
                              std::span<const Matrix> priors, double k,
                              const AlignmentConfig& config) {
  validate_config(config);
  check_same_shape(centred, 2);
  const std::size_t N = centred.size();
  const Index n = centred[0].rows();
  const Index m = centred[0].cols();

  if (k != 0.0) {
    if (priors.size() != 1 && priors.size() != N) {
      throw ValidationError("prior locations: expected 1 or " +
                            std::to_string(N) + ", got " +
                            std::to_string(priors.size()));
    }
    for (const Matrix& F : priors) {
      if (F.rows() != m || F.cols() != m) {
        throw DimensionError("prior location is " + std::to_string(F.rows()) +
                             "x" + std::to_string(F.cols()) + ", expected " +
                             std::to_string(m) + "x" + std::to_string(m));
      }
    }
  }
  if (config.covariance_mode == CovarianceMode::dutilleul &&
      !check_existence(N, n, m)) {
    throw ExistenceError("covariance estimation needs N >= m/n + 1; got N=" +
                         std::to_string(N) + ", n=" + std::to_string(n) +
                         ", m=" + std::to_string(m));
  }

  static const Matrix kNoPrior;
  auto prior_for = [&](std::size_t i) -> const Matrix& {
    if (k == 0.0) return kNoPrior;
    return priors.size() == 1 ? priors[0] : priors[i];
  };

  AlignmentResult result;
  result.rotations.assign(N, Matrix::Identity(m, m));
  result.scales.assign(N, 1.0);
  result.aligned.assign(centred.begin(), centred.end());
  result.covariances = CovariancePair::identity(n, m);
  Matrix M = mean_of(centred);
  Precision precision;

  std::vector<RotationEstimate> rotations(N);
  std::vector<ScaleEstimate> scales(N);

  for (int count = 0; count < config.max_iterations; ++count) {
    const Matrix whitened_M = precision.right(precision.left(M));
    parallel_for(N, config.workers, [&](std::size_t i) {
      rotations[i] = rotation_step(centred[i], whitened_M, k, prior_for(i));
      Matrix Y = centred[i] * rotations[i].rotation;
      if (config.scaling_enabled) {
        scales[i] = scale_step(centred[i], rotations[i].rotation, precision,
                               rotations[i].singular_values);
        Y /= scales[i].alpha;
      }
      result.aligned[i] = std::move(Y);
    });

    if (config.scaling_enabled) {
      // scales are identified only up to a common factor; without pinning
      // it the reference shrinks a little on every pass under noise
      double log_sum = 0.0;
      for (const ScaleEstimate& s : scales) log_sum += std::log(s.alpha);
      const double g = std::exp(log_sum / static_cast<double>(N));
      for (std::size_t i = 0; i < N; ++i) {
        scales[i].alpha /= g;
        result.aligned[i] *= g;
      }
    }

    const Matrix M_old = M;
    M = mean_of(result.aligned);

    if (config.covariance_mode == CovarianceMode::dutilleul) {
      CovariancePair next =
          estimate_covariances(result.aligned, M, config, &result.covariances);
      if (next.degenerate) {
        result.warnings.push_back("iteration " + std::to_string(count + 1) +
                                  ": zero residuals, covariances kept");
      } else {
        if (!next.converged) {
          result.warnings.push_back(
              "iteration " + std::to_string(count + 1) +
              ": covariance iteration hit its cap");
        }
        precision = Precision::from(next);
        result.covariances = std::move(next);
      }
    }

    const double dist = (M - M_old).squaredNorm();
    result.dist_trace.push_back(dist);
    result.iterations_run = count + 1;
    if (!std::isfinite(dist)) {
      throw NumericError("reference update diverged at iteration " +
                         std::to_string(count + 1));
    }
    if (dist < config.tol) {
      result.converged = true;
      break;
    }
  }

  result.unique = true;
  result.min_crossprod_singular_value = std::numeric_limits<double>::infinity();
  int weak = 0;
  for (std::size_t i = 0; i < N; ++i) {
    result.rotations[i] = std::move(rotations[i].rotation);
    result.unique = result.unique && rotations[i].unique;
    const Vector& d = rotations[i].singular_values;
    result.min_crossprod_singular_value =
        std::min(result.min_crossprod_singular_value, d(d.size() - 1));
    if (config.scaling_enabled) {
      result.scales[i] = scales[i].alpha;
      if (scales[i].weak_condition) ++weak;
    }
  }
  if (weak > 0) {
    result.warnings.push_back(
        std::to_string(weak) +
        " subject(s): tr(D)^2 < 10 x whitened norm, scale closed form is "
        "outside its derivation regime");
  }
  if (!result.unique) {
    result.warnings.push_back(
        "augmented cross-product rank-deficient: rotations are not unique");
  }
  result.reference = std::move(M);
  return result;
}

} // namespace detail

void validate_config(const AlignmentConfig& config) {
  if (!(config.tol > 0.0)) throw ValidationError("tol must be > 0");
  if (config.max_iterations < 1) {
    throw ValidationError("max_iterations must be >= 1");
  }
  if (!(config.epsilon1 > 0.0) || !(config.epsilon2 > 0.0)) {
    throw ValidationError("epsilon1 and epsilon2 must be > 0");
  }
  if (config.max_covariance_iterations < 1) {
    throw ValidationError("max_covariance_iterations must be >= 1");
  }
  validate_prior(config.prior);
}

CovariancePair CovariancePair::identity(Index n, Index m) {
  return {Matrix::Identity(n, n), Matrix::Identity(m, m)};
}

bool CovariancePair::is_identity() const {
  return sigma_n.isIdentity(0.0) && sigma_m.isIdentity(0.0);
}

RotationEstimate estimate_rotation(const Matrix& X, const Matrix& M,
                                   const CovariancePair& cov, double k,
                                   const Matrix& F) {
  if (X.rows() != M.rows() || X.cols() != M.cols()) {
    throw DimensionError("estimate_rotation: X and M shapes differ");
  }
  if (cov.sigma_n.rows() != X.rows() || cov.sigma_m.rows() != X.cols()) {
    throw DimensionError("estimate_rotation: covariance shapes do not match data");
  }
  if (k != 0.0 && (F.rows() != X.cols() || F.cols() != X.cols())) {
    throw DimensionError("estimate_rotation: prior location must be m x m");
  }
  const detail::Precision precision = detail::Precision::from(cov);
  return detail::rotation_step(X, precision.right(precision.left(M)), k, F);
}

RotationEstimate estimate_rotation(const Matrix& X, const Matrix& M,
                                   const CovariancePair& cov,
                                   const PriorSpec& prior) {
  validate_prior(prior);
  if (prior.k == 0.0) return estimate_rotation(X, M, cov, 0.0, Matrix{});
  const PriorLocation location = build_prior_location(prior, X.cols());
  return estimate_rotation(X, M, cov, prior.k, location.F);
}

ScaleEstimate estimate_scale(const Matrix& X, const Matrix& R,
                             const CovariancePair& cov,
                             const Vector& singular_values) {
  if (R.rows() != X.cols() || R.cols() != X.cols()) {
    throw DimensionError("estimate_scale: R must be m x m");
  }
  return detail::scale_step(X, R, detail::Precision::from(cov),
                            singular_values);
}

bool check_existence(std::uint64_t N, std::uint64_t n, std::uint64_t m) {
  // N >= m/n + 1  <=>  N n >= m + n
  using wide = unsigned __int128;
  return static_cast<wide>(N) * n >= static_cast<wide>(m) + n;
}

CovariancePair estimate_covariances(std::span<const Matrix> Xs,
                                    const Matrix& M,
                                    const AlignmentConfig& config,
                                    const CovariancePair* start) {
  detail::check_same_shape(Xs, 1);
  const Index n = Xs[0].rows();
  const Index m = Xs[0].cols();
  if (M.rows() != n || M.cols() != m) {
    throw DimensionError("estimate_covariances: reference shape differs from data");
  }
  if (config.covariance_mode == CovarianceMode::identity) {
    return CovariancePair::identity(n, m);
  }
  const std::size_t N = Xs.size();
  if (!check_existence(N, n, m)) {
    const auto needed = static_cast<double>(m) / static_cast<double>(n) + 1.0;
    throw ExistenceError("covariance estimation needs N >= m/n + 1 = " +
                         std::to_string(needed) + ", got N=" +
                         std::to_string(N));
  }

  std::vector<Matrix> residuals;
  residuals.reserve(N);
  bool all_zero = true;
  for (const Matrix& X : Xs) {
    residuals.push_back(X - M);
    all_zero = all_zero && residuals.back().isZero(0.0);
  }
  if (all_zero) {
    CovariancePair zero{Matrix::Zero(n, n), Matrix::Zero(m, m)};
    zero.degenerate = true;
    return zero;
  }

  const double Nm = static_cast<double>(N) * static_cast<double>(m);
  auto stage_n = [&](const Matrix& sigma_m) {
    const Matrix m_inv = detail::symmetric_inverse(sigma_m, "sigma_m", false);
    Matrix acc = Matrix::Zero(n, n);
    for (const Matrix& E : residuals) acc += E * m_inv * E.transpose();
    acc /= Nm;
    return Matrix(0.5 * (acc + acc.transpose()));
  };
  auto stage_m = [&](const Matrix& sigma_n) {
    const Matrix n_inv = detail::symmetric_inverse(sigma_n, "sigma_n", true);
    Matrix acc = Matrix::Zero(m, m);
    for (const Matrix& E : residuals) acc += E.transpose() * n_inv * E;
    // centred rows span n - 1 directions; dividing by n would shrink
    // sigma_m by (n-1)/n on every pass
    const double rank = std::round((n_inv * sigma_n).trace());
    acc /= static_cast<double>(N) * rank;
    return Matrix(0.5 * (acc + acc.transpose()));
  };

  CovariancePair old = start ? *start : CovariancePair::identity(n, m);
  CovariancePair cur;
  cur.sigma_n = stage_n(old.sigma_m);
  cur.sigma_m = stage_m(cur.sigma_n);
  cur.iterations = 1;
  cur.converged = false;
  while (cur.iterations < config.max_covariance_iterations) {
    if ((cur.sigma_n - old.sigma_n).squaredNorm() <= config.epsilon1 &&
        (cur.sigma_m - old.sigma_m).squaredNorm() <= config.epsilon2) {
      cur.converged = true;
      break;
    }
    old.sigma_n = cur.sigma_n;
    old.sigma_m = cur.sigma_m;
    cur.sigma_n = stage_n(old.sigma_m);
    cur.sigma_m = stage_m(cur.sigma_n);
    ++cur.iterations;
  }
  if (!cur.converged &&
      (cur.sigma_n - old.sigma_n).squaredNorm() <= config.epsilon1 &&
      (cur.sigma_m - old.sigma_m).squaredNorm() <= config.epsilon2) {
    cur.converged = true;
  }
  return cur;
}

AlignmentResult align(std::span<const Matrix> Xs,
                      const AlignmentConfig& config) {
  validate_config(config);
  detail::check_same_shape(Xs, 2);

  std::vector<Matrix> centred;
  std::vector<Vector> translations;
  centred.reserve(Xs.size());
  for (const Matrix& X : Xs) {
    translations.push_back(column_means(X));
    centred.push_back(column_center(X));
  }

  std::vector<Matrix> priors;
  if (config.prior.k != 0.0) {
    priors.push_back(build_prior_location(config.prior, Xs[0].cols()).F);
  }
  AlignmentResult result =
      detail::run_alignment(centred, priors, config.prior.k, config);
  result.translations = std::move(translations);
  return result;
}

} // namespace promises
