#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "promises/matkernels.hpp"

namespace promises {

struct RoiLabels {
  std::vector<int> labels; // one region id per column
  // optional; a named region with no member columns is an error
  std::map<int, std::string> region_names;
};

/// Pearson correlation of the seed column with every column. A column with
/// zero variance has no defined correlation and is reported as nullopt.
std::vector<std::optional<double>> seed_correlation(const Matrix& reference,
                                                    Index seed_column);

struct RoiCorrelation {
  std::vector<int> region_ids; // ascending; row/column order of `matrix`
  Matrix matrix;
};

/// Correlations among region series, each the unweighted mean of its member
/// columns.
RoiCorrelation roi_correlation(const Matrix& reference, const RoiLabels& rois);

} // namespace promises
