#include "promises/select_k.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "internal.hpp"
#include "promises/efficient_aligner.hpp"
#include "promises/errors.hpp"

namespace promises {

KSelection select_k(std::span<const Matrix> Xs, std::span<const double> candidates,
                    const AlignmentConfig& config, bool efficient) {
  validate_config(config);
  if (Xs.size() < 3) {
    throw ValidationError("cross-validation needs at least 3 subjects, got " +
                          std::to_string(Xs.size()));
  }
  detail::check_same_shape(Xs, 3);
  if (candidates.empty()) throw ValidationError("no candidate k values");
  for (double k : candidates) {
    if (!std::isfinite(k) || k < 0.0) {
      throw ValidationError("candidate k must be finite and >= 0");
    }
  }
  const std::size_t N = Xs.size();
  const bool any_prior = std::any_of(candidates.begin(), candidates.end(),
                                     [](double k) { return k != 0.0; });

  // working matrices and per-subject prior locations for the chosen space
  std::vector<Matrix> work;
  std::vector<Matrix> locations;
  for (const Matrix& X : Xs) work.push_back(column_center(X));
  if (efficient) {
    ReducedProblem problem = project_subjects(work);
    work = std::move(problem.reduced_matrices);
    if (any_prior) {
      for (const ThinFactor& basis : problem.bases) {
        locations.push_back(reduce_prior(config.prior, basis.Q, basis.Q));
      }
    }
  } else if (any_prior) {
    locations.push_back(build_prior_location(config.prior, Xs[0].cols()).F);
  }
  auto location_for = [&](std::size_t i) -> const Matrix& {
    return locations.size() == 1 ? locations[0] : locations[i];
  };

  KSelection out;
  out.criterion = "leave-one-subject-out held-out Frobenius alignment error";
  for (double k : candidates) {
    AlignmentConfig fold_config = config;
    fold_config.prior.k = k;
    KScore score{k, 0.0, {}};
    for (std::size_t held = 0; held < N; ++held) {
      std::vector<Matrix> train;
      std::vector<Matrix> train_priors;
      for (std::size_t i = 0; i < N; ++i) {
        if (i == held) continue;
        train.push_back(work[i]);
        if (k != 0.0 && efficient) train_priors.push_back(location_for(i));
      }
      if (k != 0.0 && !efficient) train_priors.push_back(locations[0]);

      const AlignmentResult fit =
          detail::run_alignment(train, train_priors, k, fold_config);
      static const Matrix kNoPrior;
      const Matrix& F = k != 0.0 ? location_for(held) : kNoPrior;
      const RotationEstimate rot =
          estimate_rotation(work[held], fit.reference, fit.covariances, k, F);
      Matrix Y = work[held] * rot.rotation;
      if (config.scaling_enabled) {
        Y /= estimate_scale(work[held], rot.rotation, fit.covariances,
                            rot.singular_values)
                 .alpha;
      }
      score.fold_scores.push_back((Y - fit.reference).norm());
    }
    double sum = 0.0;
    for (double s : score.fold_scores) sum += s;
    score.mean_score = sum / static_cast<double>(N);
    out.table.push_back(std::move(score));
  }

  const auto best = std::min_element(
      out.table.begin(), out.table.end(),
      [](const KScore& a, const KScore& b) { return a.mean_score < b.mean_score; });
  out.k_best = best->k;
  return out;
}

} // namespace promises
