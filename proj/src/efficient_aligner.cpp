#include "promises/efficient_aligner.hpp"

#include <string>

#include "internal.hpp"
#include "promises/errors.hpp"

namespace promises {

ReducedProblem project_subjects(std::span<const Matrix> Xs) {
  detail::check_same_shape(Xs, 1);
  if (Xs[0].rows() >= Xs[0].cols()) {
    throw DimensionError("efficient path needs n < m, got n=" +
                         std::to_string(Xs[0].rows()) + ", m=" +
                         std::to_string(Xs[0].cols()) +
                         "; use the full aligner");
  }
  ReducedProblem out;
  out.bases.resize(Xs.size());
  out.reduced_matrices.resize(Xs.size());
  for (std::size_t i = 0; i < Xs.size(); ++i) {
    out.bases[i] = thin_svd(Xs[i]);
    out.reduced_matrices[i] = Xs[i] * out.bases[i].Q;
    out.rank_deficient = out.rank_deficient || out.bases[i].rank_deficient();
  }
  return out;
}

Matrix reduce_prior(const Matrix& F, const Matrix& Qi, const Matrix& Qj) {
  if (F.rows() != F.cols() || Qi.rows() != F.rows() || Qj.rows() != F.rows() ||
      Qi.cols() != Qj.cols()) {
    throw DimensionError("reduce_prior: F is " + std::to_string(F.rows()) +
                         "x" + std::to_string(F.cols()) + ", bases are " +
                         std::to_string(Qi.rows()) + "x" +
                         std::to_string(Qi.cols()) + " and " +
                         std::to_string(Qj.rows()) + "x" +
                         std::to_string(Qj.cols()));
  }
  return Qi.transpose() * (F * Qj);
}

Matrix reduce_prior(const PriorSpec& prior, const Matrix& Qi,
                    const Matrix& Qj) {
  if (Qi.rows() != Qj.rows() || Qi.cols() != Qj.cols()) {
    throw DimensionError("reduce_prior: bases differ in shape");
  }
  const Index m = Qi.rows();
  if (std::holds_alternative<IdentityLocation>(prior.location)) {
    return Qi.transpose() * Qj;
  }
  if (const auto* e = std::get_if<EuclideanKernelLocation>(&prior.location)) {
    if (e->coordinates.rows() != m) {
      throw DimensionError("coordinates have " +
                           std::to_string(e->coordinates.rows()) +
                           " rows, data has " + std::to_string(m) +
                           " variables");
    }
    return Qi.transpose() * euclidean_kernel_times(e->coordinates, Qj);
  }
  const Matrix& F = std::get<CustomLocation>(prior.location).F;
  require_finite(F, "custom prior location");
  return reduce_prior(F, Qi, Qj);
}

AlignmentResult align_efficient(std::span<const Matrix> Xs,
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

  const Index n = centred[0].rows();
  const Index m = centred[0].cols();
  const std::size_t N = centred.size();
  ReducedProblem problem = project_subjects(centred);
  centred = {};

  std::vector<Matrix> priors;
  if (config.prior.k != 0.0) {
    priors.resize(N);
    detail::parallel_for(N, config.workers, [&](std::size_t i) {
      priors[i] = reduce_prior(config.prior, problem.bases[i].Q,
                               problem.bases[i].Q);
    });
  }

  AlignmentResult result = detail::run_alignment(
      problem.reduced_matrices, priors, config.prior.k, config);
  // centring already costs one rank
  for (std::size_t i = 0; i < N; ++i) {
    if (problem.bases[i].rank < n - 1) {
      result.warnings.push_back("subject " + std::to_string(i + 1) +
                                " has rank " +
                                std::to_string(problem.bases[i].rank) +
                                " < n - 1; its basis is padded with null "
                                "directions");
    }
  }

  result.reduced_reference = std::move(result.reference);
  result.reference = Matrix::Zero(n, m);
  for (std::size_t i = 0; i < N; ++i) {
    result.aligned[i] = result.aligned[i] * problem.bases[i].Q.transpose();
    result.reference += result.aligned[i];
  }
  result.reference /= static_cast<double>(N);
  result.bases = std::move(problem.bases);
  result.translations = std::move(translations);
  return result;
}

Matrix implied_transform(const Matrix& Q, const Matrix& reduced_rotation) {
  if (reduced_rotation.rows() != Q.cols() ||
      reduced_rotation.cols() != Q.cols()) {
    throw DimensionError("implied_transform: rotation must be n x n");
  }
  return Q * reduced_rotation * Q.transpose();
}

} // namespace promises
