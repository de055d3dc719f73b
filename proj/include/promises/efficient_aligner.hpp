#pragma once

#include <span>
#include <vector>

#include "promises/aligner.hpp"

namespace promises {

/// Subjects projected onto their own row spaces: X_i Q_i is n x n.
struct ReducedProblem {
  std::vector<Matrix> reduced_matrices;
  std::vector<ThinFactor> bases;
  bool rank_deficient = false; // some subject has rank < n
};

/// Thin SVD per subject. Requires n < m.
ReducedProblem project_subjects(std::span<const Matrix> Xs);

/// Q_i^T F Q_j
Matrix reduce_prior(const Matrix& F, const Matrix& Qi, const Matrix& Qj);

/// Q_i^T F Q_j for a prior spec; identity and Euclidean locations are
/// reduced without forming the m x m matrix.
Matrix reduce_prior(const PriorSpec& prior, const Matrix& Qi, const Matrix& Qj);

/// Alignment in the n x n reduced space, then back-projection
/// X_i -> alpha_i^-1 X_i Q_i R*_i Q_i^T.
///
/// The result holds the n x n rotations R*_i, the bases Q_i, the n x n
/// reduced reference, and the n x m mean of the back-projected matrices as
/// `reference`. No m x m matrix is allocated.
AlignmentResult align_efficient(std::span<const Matrix> Xs,
                                const AlignmentConfig& config);

/// Q R* Q^T. Materialises an m x m matrix; intended for small m.
Matrix implied_transform(const Matrix& Q, const Matrix& reduced_rotation);

} // namespace promises
