#include "promises/connectivity.hpp"

#include <algorithm>
#include <string>

#include "promises/errors.hpp"

namespace promises {

namespace {

/// Centred, unit-norm copy of `x`, or nullopt for a constant series.
std::optional<Vector> standardize(const Vector& x) {
  Vector c = x.array() - x.mean();
  const double norm = c.norm();
  // relative to the raw scale so a large offset does not hide rounding noise
  if (!(norm > 1e-12 * std::max(x.norm(), 1e-300))) return std::nullopt;
  return Vector(c / norm);
}

double clamp_unit(double r) { return std::clamp(r, -1.0, 1.0); }

void check_reference(const Matrix& reference) {
  if (reference.rows() < 3) {
    throw ValidationError("correlation needs at least 3 time points, got " +
                          std::to_string(reference.rows()));
  }
  require_finite(reference, "reference matrix");
}

} // namespace

std::vector<std::optional<double>> seed_correlation(const Matrix& reference,
                                                    Index seed_column) {
  check_reference(reference);
  if (seed_column < 0 || seed_column >= reference.cols()) {
    throw ValidationError("seed column " + std::to_string(seed_column) +
                          " out of range [0, " +
                          std::to_string(reference.cols()) + ")");
  }
  const auto seed = standardize(reference.col(seed_column));
  if (!seed) {
    throw ValidationError("seed column " + std::to_string(seed_column) +
                          " has zero variance");
  }
  std::vector<std::optional<double>> out(reference.cols());
  for (Index j = 0; j < reference.cols(); ++j) {
    if (j == seed_column) {
      out[j] = 1.0;
      continue;
    }
    if (const auto col = standardize(reference.col(j))) {
      out[j] = clamp_unit(seed->dot(*col));
    }
  }
  return out;
}

RoiCorrelation roi_correlation(const Matrix& reference, const RoiLabels& rois) {
  check_reference(reference);
  if (static_cast<Index>(rois.labels.size()) != reference.cols()) {
    throw ValidationError("ROI labels: " + std::to_string(rois.labels.size()) +
                          " entries for " + std::to_string(reference.cols()) +
                          " columns");
  }

  std::map<int, std::vector<Index>> members;
  for (const auto& [id, name] : rois.region_names) members[id];
  for (Index j = 0; j < reference.cols(); ++j) {
    members[rois.labels[static_cast<std::size_t>(j)]].push_back(j);
  }
  if (members.empty()) throw ValidationError("ROI labels define no region");

  std::string empty;
  for (const auto& [id, cols] : members) {
    if (cols.empty()) {
      if (!empty.empty()) empty += ", ";
      empty += std::to_string(id);
      if (auto it = rois.region_names.find(id); it != rois.region_names.end()) {
        empty += " (" + it->second + ")";
      }
    }
  }
  if (!empty.empty()) throw ValidationError("empty ROI region(s): " + empty);

  RoiCorrelation out;
  std::vector<Vector> series;
  for (const auto& [id, cols] : members) {
    Vector mean = Vector::Zero(reference.rows());
    for (Index j : cols) mean += reference.col(j);
    mean /= static_cast<double>(cols.size());
    auto standardized = standardize(mean);
    if (!standardized) {
      throw NumericError("ROI region " + std::to_string(id) +
                         " has a constant mean series");
    }
    out.region_ids.push_back(id);
    series.push_back(std::move(*standardized));
  }

  const auto K = static_cast<Index>(series.size());
  out.matrix = Matrix::Identity(K, K);
  for (Index a = 0; a < K; ++a) {
    for (Index b = a + 1; b < K; ++b) {
      const double r = clamp_unit(series[a].dot(series[b]));
      out.matrix(a, b) = r;
      out.matrix(b, a) = r;
    }
  }
  return out;
}

} // namespace promises
