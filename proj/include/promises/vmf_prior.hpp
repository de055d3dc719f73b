#pragma once

#include <variant>

#include "promises/matkernels.hpp"

namespace promises {

// Location matrix choices for the von Mises-Fisher prior on O(m).

/// F = I_m
struct IdentityLocation {};

/// F[i][j] = exp(-||c_i - c_j||) from m x 3 coordinates, in their native units.
struct EuclideanKernelLocation {
  Matrix coordinates;
};

/// Caller-supplied m x m location matrix.
struct CustomLocation {
  Matrix F;
};

using LocationKind =
    std::variant<IdentityLocation, EuclideanKernelLocation, CustomLocation>;

struct PriorSpec {
  double k = 0.0; // concentration
  LocationKind location = IdentityLocation{};
};

struct PriorDiagnostics {
  double smallest_singular_value = 0.0;
  double largest_singular_value = 0.0;
  bool full_rank = false;
  Matrix mode; // orthogonal factor P of F = PK
};

struct PriorLocation {
  Matrix F;
  PriorDiagnostics diagnostics;
};

/// Throws ValidationError for negative or non-finite k.
void validate_prior(const PriorSpec& spec);

/// Materialises F (m x m) and its polar diagnostics.
PriorLocation build_prior_location(const PriorSpec& spec, Index m);

Matrix euclidean_kernel(const Matrix& coordinates);

/// F * B for the Euclidean kernel without forming F; O(m^2 cols(B)) time,
/// O(m cols(B)) memory.
Matrix euclidean_kernel_times(const Matrix& coordinates, const Matrix& b);

/// k tr(F^T R): the prior log-density up to -log C(F, k).
double vmf_log_kernel(const Matrix& R, const Matrix& F, double k);

/// Conjugate posterior location F* = crossprod + k F.
Matrix posterior_location(const Matrix& crossprod, double k, const Matrix& F);

} // namespace promises
