#include "promises/vmf_prior.hpp"

#include <cmath>
#include <string>

#include "promises/errors.hpp"

namespace promises {

namespace {

void check_coordinates(const Matrix& coordinates) {
  if (coordinates.cols() != 3) {
    throw DimensionError("coordinates need exactly 3 columns, got " +
                         std::to_string(coordinates.cols()));
  }
  require_finite(coordinates, "prior coordinates");
}

} // namespace

void validate_prior(const PriorSpec& spec) {
  if (!std::isfinite(spec.k) || spec.k < 0.0) {
    throw ValidationError("prior concentration k must be finite and >= 0");
  }
}

Matrix euclidean_kernel(const Matrix& coordinates) {
  check_coordinates(coordinates);
  const Index m = coordinates.rows();
  Matrix F(m, m);
  for (Index i = 0; i < m; ++i) {
    F(i, i) = 1.0;
    for (Index j = i + 1; j < m; ++j) {
      const double w =
          std::exp(-(coordinates.row(i) - coordinates.row(j)).norm());
      F(i, j) = w;
      F(j, i) = w;
    }
  }
  return F;
}

Matrix euclidean_kernel_times(const Matrix& coordinates, const Matrix& b) {
  check_coordinates(coordinates);
  const Index m = coordinates.rows();
  if (b.rows() != m) {
    throw DimensionError("euclidean_kernel_times: operand has " +
                         std::to_string(b.rows()) + " rows, kernel is " +
                         std::to_string(m) + "x" + std::to_string(m));
  }
  Matrix out = Matrix::Zero(m, b.cols());
  Vector weights(m);
  for (Index i = 0; i < m; ++i) {
    for (Index j = 0; j < m; ++j) {
      weights(j) = std::exp(-(coordinates.row(i) - coordinates.row(j)).norm());
    }
    out.row(i) = weights.transpose() * b;
  }
  return out;
}

PriorLocation build_prior_location(const PriorSpec& spec, Index m) {
  if (m < 1) throw DimensionError("prior dimension must be >= 1");
  validate_prior(spec);

  PriorLocation out;
  if (std::holds_alternative<IdentityLocation>(spec.location)) {
    out.F = Matrix::Identity(m, m);
  } else if (const auto* e =
                 std::get_if<EuclideanKernelLocation>(&spec.location)) {
    if (e->coordinates.rows() != m) {
      throw DimensionError("coordinates have " +
                           std::to_string(e->coordinates.rows()) +
                           " rows, data has " + std::to_string(m) +
                           " variables");
    }
    out.F = euclidean_kernel(e->coordinates);
  } else {
    const auto& F = std::get<CustomLocation>(spec.location).F;
    if (F.rows() != m || F.cols() != m) {
      throw DimensionError("custom location is " + std::to_string(F.rows()) +
                           "x" + std::to_string(F.cols()) + ", expected " +
                           std::to_string(m) + "x" + std::to_string(m));
    }
    require_finite(F, "custom prior location");
    out.F = F;
  }

  const PolarFactor polar = polar_orthogonal_factor(out.F);
  out.diagnostics.largest_singular_value = polar.singular_values(0);
  out.diagnostics.smallest_singular_value =
      polar.singular_values(polar.singular_values.size() - 1);
  out.diagnostics.full_rank = polar.unique;
  out.diagnostics.mode = polar.orthogonal;
  return out;
}

double vmf_log_kernel(const Matrix& R, const Matrix& F, double k) {
  if (R.rows() != R.cols() || F.rows() != R.rows() || F.cols() != R.cols()) {
    throw DimensionError("vmf_log_kernel: R and F must be the same square size");
  }
  if (k == 0.0) return 0.0;
  return k * F.cwiseProduct(R).sum();
}

Matrix posterior_location(const Matrix& crossprod, double k, const Matrix& F) {
  if (crossprod.rows() != crossprod.cols() || F.rows() != crossprod.rows() ||
      F.cols() != crossprod.cols()) {
    throw DimensionError(
        "posterior_location: crossprod and F must be the same square size");
  }
  return crossprod + k * F;
}

} // namespace promises
