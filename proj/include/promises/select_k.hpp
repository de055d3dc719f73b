#pragma once

#include <span>
#include <string>
#include <vector>

#include "promises/aligner.hpp"

namespace promises {

struct KScore {
  double k = 0.0;
  double mean_score = 0.0;
  std::vector<double> fold_scores; // one per held-out subject
};

struct KSelection {
  double k_best = 0.0;
  std::vector<KScore> table; // candidate order
  std::string criterion;
};

/// Leave-one-subject-out choice of the prior concentration.
///
/// For every candidate k the remaining N-1 subjects are aligned with that k,
/// the held-out subject is rotated (and scaled, when enabled) onto the
/// training reference by the closed-form MAP step, and the fold score is
/// ||X_held - M||_F after that transform. The candidate with the lowest mean
/// wins; ties go to the earlier candidate. With `efficient` set the folds
/// run on the reduced n x n problem.
KSelection select_k(std::span<const Matrix> Xs, std::span<const double> candidates,
                    const AlignmentConfig& config, bool efficient = false);

} // namespace promises
