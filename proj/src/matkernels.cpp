#include "promises/matkernels.hpp"

#include <string>

#include "promises/errors.hpp"

namespace promises {

namespace {

void canonicalize_signs(Matrix& u, Matrix& v) {
  const Index cols = std::min(u.cols(), v.cols());
  for (Index j = 0; j < cols; ++j) {
    Index pivot = 0;
    u.col(j).cwiseAbs().maxCoeff(&pivot);
    if (u(pivot, j) < 0.0) {
      u.col(j) *= -1.0;
      v.col(j) *= -1.0;
    }
  }
}

void check_svd(Eigen::ComputationInfo info, const Vector& d, Index rows,
               Index cols) {
  if (info != Eigen::Success || !d.allFinite()) {
    throw NumericError("SVD of " + std::to_string(rows) + "x" +
                       std::to_string(cols) +
                       " matrix did not converge (status " +
                       std::to_string(static_cast<int>(info)) + ")");
  }
}

} // namespace

void require_finite(const Matrix& a, std::string_view what) {
  if (a.size() == 0) {
    throw ValidationError(std::string(what) + ": empty matrix");
  }
  if (!a.allFinite()) {
    throw ValidationError(std::string(what) + ": non-finite entries");
  }
}

Index numerical_rank(const Vector& singular_values) {
  if (singular_values.size() == 0) return 0;
  const double largest = singular_values.maxCoeff();
  if (!(largest > 0.0)) return 0;
  const double cutoff = kRankTolerance * largest;
  Index rank = 0;
  for (Index i = 0; i < singular_values.size(); ++i) {
    if (singular_values(i) > cutoff) ++rank;
  }
  return rank;
}

SvdTriple svd_full(const Matrix& a) {
  require_finite(a, "svd_full");
  Eigen::BDCSVD<Matrix> svd(a, Eigen::ComputeFullU | Eigen::ComputeFullV);
  check_svd(svd.info(), svd.singularValues(), a.rows(), a.cols());

  SvdTriple out{svd.matrixU(), svd.singularValues(), svd.matrixV(), 0};
  canonicalize_signs(out.U, out.V);
  out.rank = numerical_rank(out.D);
  return out;
}

ThinFactor thin_svd(const Matrix& x) {
  if (x.rows() >= x.cols()) {
    throw DimensionError("thin_svd needs rows < cols, got " +
                         std::to_string(x.rows()) + "x" +
                         std::to_string(x.cols()) + "; use svd_full");
  }
  require_finite(x, "thin_svd");
  Eigen::BDCSVD<Matrix> svd(x, Eigen::ComputeThinU | Eigen::ComputeThinV);
  check_svd(svd.info(), svd.singularValues(), x.rows(), x.cols());

  ThinFactor out{svd.matrixU(), svd.singularValues(), svd.matrixV(), 0};
  canonicalize_signs(out.L, out.Q);
  out.rank = numerical_rank(out.S);
  return out;
}

PolarFactor polar_orthogonal_factor(const Matrix& a) {
  if (a.rows() != a.cols()) {
    throw DimensionError("polar factor needs a square matrix, got " +
                         std::to_string(a.rows()) + "x" +
                         std::to_string(a.cols()));
  }
  const SvdTriple svd = svd_full(a);
  const Index m = a.rows();
  const Index r = svd.rank;

  PolarFactor out;
  out.singular_values = svd.D;
  out.unique = (r == m);
  out.orthogonal = svd.U.leftCols(r) * svd.V.leftCols(r).transpose();
  if (r < m) {
    const auto un = svd.U.rightCols(m - r);
    const auto vn = svd.V.rightCols(m - r);
    // maximise tr(U_n G V_n^T) = <G, U_n^T V_n> over orthogonal G
    const Matrix overlap = un.transpose() * vn;
    Eigen::JacobiSVD<Matrix> inner(overlap,
                                   Eigen::ComputeFullU | Eigen::ComputeFullV);
    const Matrix g = inner.matrixU() * inner.matrixV().transpose();
    out.orthogonal += un * g * vn.transpose();
  }
  return out;
}

Vector column_means(const Matrix& x) { return x.colwise().mean().transpose(); }

Matrix column_center(const Matrix& x) {
  if (x.rows() < 2) {
    throw ValidationError("column centering needs at least 2 rows, got " +
                          std::to_string(x.rows()));
  }
  return x.rowwise() - x.colwise().mean();
}

double frobenius_inner(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw DimensionError("frobenius_inner: shape mismatch");
  }
  return a.cwiseProduct(b).sum();
}

double orthogonality_defect(const Matrix& r) {
  return (r.transpose() * r - Matrix::Identity(r.cols(), r.cols())).norm();
}

} // namespace promises
