#pragma once

#include <string_view>

#include <Eigen/Dense>

namespace promises {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// A singular value counts as zero below this fraction of the largest one.
inline constexpr double kRankTolerance = 1e-12;

struct SvdTriple {
  Matrix U;
  Vector D; // descending, non-negative
  Matrix V;
  Index rank = 0;

  bool rank_deficient() const { return rank < D.size(); }
};

/// Thin factorisation X = L diag(S) Q^T of a wide matrix; Q is m x n.
struct ThinFactor {
  Matrix L;
  Vector S;
  Matrix Q;
  Index rank = 0;

  bool rank_deficient() const { return rank < S.size(); }
};

struct PolarFactor {
  Matrix orthogonal;
  Vector singular_values;
  // false when the input is rank-deficient and the maximiser of tr(A^T R)
  // over O(m) is not unique
  bool unique = true;
};

void require_finite(const Matrix& a, std::string_view what);

/// Number of singular values above kRankTolerance * max.
Index numerical_rank(const Vector& singular_values);

/// Full SVD with canonical signs: the largest-magnitude entry of every left
/// singular vector is positive, and the paired right vector follows it.
SvdTriple svd_full(const Matrix& a);

/// Thin SVD of an n x m matrix with n < m. Throws DimensionError otherwise.
ThinFactor thin_svd(const Matrix& x);

/// Orthogonal factor U V^T of a square matrix, the maximiser of tr(A^T R)
/// over O(m).
///
/// When A is rank-deficient the maximiser is only fixed on the range of A.
/// On the null spaces the map is chosen to maximise tr(R), i.e. the
/// maximiser closest to the identity, so a symmetric positive semi-definite
/// input always yields I regardless of how the SVD orders its null vectors.
PolarFactor polar_orthogonal_factor(const Matrix& a);

Vector column_means(const Matrix& x);

/// (I - J/n) X. Throws ValidationError for single-row input.
Matrix column_center(const Matrix& x);

double frobenius_inner(const Matrix& a, const Matrix& b);

/// ||R^T R - I||_F
double orthogonality_defect(const Matrix& r);

} // namespace promises
