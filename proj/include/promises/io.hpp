#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "promises/connectivity.hpp"
#include "promises/matkernels.hpp"
#include "promises/vmf_prior.hpp"

namespace promises::io {

enum class MatrixFormat { csv, raw_binary };

/// `.bin` and `.raw` are binary, anything else CSV.
MatrixFormat format_from_path(const std::filesystem::path& path);

/// CSV: comma-separated numbers, one row per line, optional single header
/// row (detected by a non-numeric first row). Errors name the line.
Matrix parse_csv_matrix(std::string_view text, std::string_view source = "csv");

/// 17 significant digits, so values survive a round trip exactly.
std::string format_csv_matrix(const Matrix& a);

/// Raw binary: rows and cols as little-endian uint64, then rows*cols
/// little-endian float64 values in row-major order.
Matrix parse_binary_matrix(std::string_view bytes,
                           std::string_view source = "binary");
std::string format_binary_matrix(const Matrix& a);

Matrix load_matrix(const std::filesystem::path& path, MatrixFormat format);
Matrix load_matrix(const std::filesystem::path& path);
void save_matrix(const std::filesystem::path& path, const Matrix& a,
                 MatrixFormat format);
void save_matrix(const std::filesystem::path& path, const Matrix& a);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view contents);

/// Matrix files in a directory, or the matches of a filename glob
/// (`*`, `?`) such as `data/sub-*.csv`. Sorted by name.
std::vector<std::filesystem::path> list_subject_files(const std::string& spec);

/// m x 3 coordinate table.
Matrix load_coordinates(const std::filesystem::path& path);

/// One integer label per line, optional header; an optional second column
/// carries the region name.
RoiLabels parse_roi_labels(std::string_view text, std::string_view source = "labels");
RoiLabels load_roi_labels(const std::filesystem::path& path);

/// `identity`, `euclidean:<coords.csv>` or `custom:<F.csv>`.
PriorSpec parse_prior_option(const std::string& option, double k);

/// FNV-1a 64-bit digest of the file bytes, as 16 hex digits.
std::string file_checksum(const std::filesystem::path& path);

} // namespace promises::io
