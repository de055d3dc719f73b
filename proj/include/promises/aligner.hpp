#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "promises/matkernels.hpp"
#include "promises/vmf_prior.hpp"

namespace promises {

enum class CovarianceMode { identity, dutilleul };

struct AlignmentConfig {
  double tol = 1e-6; // threshold on ||M - M_old||^2
  int max_iterations = 30;
  bool scaling_enabled = false;
  CovarianceMode covariance_mode = CovarianceMode::identity;
  double epsilon1 = 1e-8; // ||Sigma_n - Sigma_n,old||^2
  double epsilon2 = 1e-8; // ||Sigma_m - Sigma_m,old||^2
  int max_covariance_iterations = 500;
  PriorSpec prior;
  int workers = 1;
};

void validate_config(const AlignmentConfig& config);

/// Row (n x n) and column (m x m) scale matrices of the matrix-normal error.
struct CovariancePair {
  Matrix sigma_n;
  Matrix sigma_m;
  bool degenerate = false; // all residuals were zero
  bool converged = true;
  int iterations = 0;

  static CovariancePair identity(Index n, Index m);
  bool is_identity() const;
};

struct RotationEstimate {
  Matrix rotation;
  Vector singular_values; // of X^T Sn^-1 M Sm^-1 + kF
  bool unique = true;
};

struct ScaleEstimate {
  double alpha = 1.0;
  // tr(D)^2 < 10 ||Sm^-1/2 R^T X^T Sn^-1/2||^2: the closed form was derived
  // assuming this ratio is large
  bool weak_condition = false;
};

/// Closed-form MAP rotation: polar factor of X^T Sn^-1 M Sm^-1 + kF.
/// `F` may be empty when k == 0.
RotationEstimate estimate_rotation(const Matrix& X, const Matrix& M,
                                   const CovariancePair& cov, double k,
                                   const Matrix& F);

RotationEstimate estimate_rotation(const Matrix& X, const Matrix& M,
                                   const CovariancePair& cov,
                                   const PriorSpec& prior);

ScaleEstimate estimate_scale(const Matrix& X, const Matrix& R,
                             const CovariancePair& cov,
                             const Vector& singular_values);

/// N >= m/n + 1, compared exactly.
bool check_existence(std::uint64_t N, std::uint64_t n, std::uint64_t m);

/// Two-stage (flip-flop) estimate from residuals X_i - M. Identity mode
/// returns identities. `start` seeds Sigma_m; identity when null.
CovariancePair estimate_covariances(std::span<const Matrix> Xs,
                                    const Matrix& M,
                                    const AlignmentConfig& config,
                                    const CovariancePair* start = nullptr);

struct AlignmentResult {
  std::vector<Matrix> rotations;
  std::vector<double> scales;
  Matrix reference; // n x m group mean of the aligned matrices
  CovariancePair covariances;
  std::vector<Matrix> aligned;
  std::vector<Vector> translations; // column means removed on ingestion
  int iterations_run = 0;
  std::vector<double> dist_trace;
  bool converged = false;
  // every augmented cross-product was full rank in the final iteration
  bool unique = true;
  double min_crossprod_singular_value = 0.0;
  std::vector<std::string> warnings;

  // efficient path only
  std::vector<ThinFactor> bases;
  Matrix reduced_reference;
};

/// Generalised Procrustes loop with the von Mises-Fisher augmented SVD step.
/// Inputs are column-centred internally.
AlignmentResult align(std::span<const Matrix> Xs,
                      const AlignmentConfig& config);

namespace detail {

/// The outer loop on already-centred matrices. `priors` holds zero (k == 0),
/// one shared, or one per-subject location matrix.
AlignmentResult run_alignment(std::span<const Matrix> centred,
                              std::span<const Matrix> priors, double k,
                              const AlignmentConfig& config);

void check_same_shape(std::span<const Matrix> Xs, Index min_subjects);

} // namespace detail

} // namespace promises
