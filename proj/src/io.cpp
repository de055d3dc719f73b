#include "promises/io.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "promises/errors.hpp"

namespace promises::io {

namespace fs = std::filesystem;

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() &&
         (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(sep, start);
    out.push_back(trim(line.substr(start, pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

bool parse_double(std::string_view cell, double& value) {
  if (cell.empty()) return false;
  if (cell.front() == '+') cell.remove_prefix(1);
  const auto [ptr, ec] =
      std::from_chars(cell.data(), cell.data() + cell.size(), value);
  return ec == std::errc() && ptr == cell.data() + cell.size();
}

struct Line {
  std::size_t number;
  std::string_view text;
};

/// Non-blank lines with their 1-based line numbers.
std::vector<Line> lines_of(std::string_view text) {
  std::vector<Line> out;
  std::size_t number = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    ++number;
    const std::string_view line = trim(text.substr(start, end - start));
    if (!line.empty()) out.push_back({number, line});
    start = end + 1;
  }
  return out;
}

std::string at(std::string_view source, std::size_t line) {
  return std::string(source) + ":" + std::to_string(line) + ": ";
}

[[maybe_unused]] std::uint64_t swap_bytes(std::uint64_t v) {
  std::uint64_t out = 0;
  for (int i = 0; i < 8; ++i) {
    out = (out << 8) | (v & 0xff);
    v >>= 8;
  }
  return out;
}

template <typename T>
T read_le(const char* p) {
  T value;
  std::memcpy(&value, p, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) {
    value = std::bit_cast<T>(swap_bytes(std::bit_cast<std::uint64_t>(value)));
  }
  return value;
}

template <typename T>
void append_le(std::string& out, T value) {
  if constexpr (std::endian::native == std::endian::big) {
    value = std::bit_cast<T>(swap_bytes(std::bit_cast<std::uint64_t>(value)));
  }
  char buf[sizeof(T)];
  std::memcpy(buf, &value, sizeof(T));
  out.append(buf, sizeof(T));
}

bool glob_match(std::string_view pattern, std::string_view name) {
  // iterative wildcard match with single-star backtracking
  std::size_t p = 0, n = 0, star = std::string_view::npos, mark = 0;
  while (n < name.size()) {
    if (p < pattern.size() && (pattern[p] == '?' || pattern[p] == name[n])) {
      ++p;
      ++n;
    } else if (p < pattern.size() && pattern[p] == '*') {
      star = p++;
      mark = n;
    } else if (star != std::string_view::npos) {
      p = star + 1;
      n = ++mark;
    } else {
      return false;
    }
  }
  while (p < pattern.size() && pattern[p] == '*') ++p;
  return p == pattern.size();
}

bool is_matrix_file(const fs::path& p) {
  const std::string ext = p.extension().string();
  return ext == ".csv" || ext == ".bin" || ext == ".raw";
}

} // namespace

MatrixFormat format_from_path(const fs::path& path) {
  const std::string ext = path.extension().string();
  return (ext == ".bin" || ext == ".raw") ? MatrixFormat::raw_binary
                                          : MatrixFormat::csv;
}

Matrix parse_csv_matrix(std::string_view text, std::string_view source) {
  std::vector<Line> lines = lines_of(text);
  if (lines.empty()) throw ParseError(std::string(source) + ": no data rows");

  // a first row with any non-numeric cell is a header
  {
    double dummy = 0.0;
    const auto cells = split(lines.front().text, ',');
    const bool numeric = std::all_of(cells.begin(), cells.end(),
                                     [&](std::string_view c) {
                                       return parse_double(c, dummy);
                                     });
    if (!numeric) lines.erase(lines.begin());
  }
  if (lines.empty()) {
    throw ParseError(std::string(source) + ": header only, no data rows");
  }

  const std::size_t cols = split(lines.front().text, ',').size();
  Matrix out(static_cast<Index>(lines.size()), static_cast<Index>(cols));
  for (std::size_t r = 0; r < lines.size(); ++r) {
    const auto cells = split(lines[r].text, ',');
    if (cells.size() != cols) {
      throw ParseError(at(source, lines[r].number) + "row " +
                       std::to_string(r + 1) + " has " +
                       std::to_string(cells.size()) + " cells, expected " +
                       std::to_string(cols));
    }
    for (std::size_t c = 0; c < cols; ++c) {
      double value = 0.0;
      if (!parse_double(cells[c], value)) {
        throw ParseError(at(source, lines[r].number) + "column " +
                         std::to_string(c + 1) + ": '" + std::string(cells[c]) +
                         "' is not a number");
      }
      out(static_cast<Index>(r), static_cast<Index>(c)) = value;
    }
  }
  return out;
}

std::string format_csv_matrix(const Matrix& a) {
  std::string out;
  out.reserve(static_cast<std::size_t>(a.size()) * 24);
  char buf[32];
  for (Index i = 0; i < a.rows(); ++i) {
    for (Index j = 0; j < a.cols(); ++j) {
      if (j > 0) out.push_back(',');
      const int len = std::snprintf(buf, sizeof buf, "%.17g", a(i, j));
      out.append(buf, static_cast<std::size_t>(len));
    }
    out.push_back('\n');
  }
  return out;
}

Matrix parse_binary_matrix(std::string_view bytes, std::string_view source) {
  constexpr std::size_t header = 2 * sizeof(std::uint64_t);
  if (bytes.size() < header) {
    throw ParseError(std::string(source) + ": truncated header (" +
                     std::to_string(bytes.size()) + " of " +
                     std::to_string(header) + " bytes)");
  }
  const auto rows = read_le<std::uint64_t>(bytes.data());
  const auto cols = read_le<std::uint64_t>(bytes.data() + 8);
  if (rows == 0 || cols == 0 || rows > (1ull << 40) / cols) {
    throw ParseError(std::string(source) + ": implausible dimensions " +
                     std::to_string(rows) + "x" + std::to_string(cols));
  }
  const std::size_t expected = header + rows * cols * sizeof(double);
  if (bytes.size() != expected) {
    throw ParseError(std::string(source) + ": expected " +
                     std::to_string(expected) + " bytes for " +
                     std::to_string(rows) + "x" + std::to_string(cols) +
                     ", data ends at offset " + std::to_string(bytes.size()));
  }
  Matrix out(static_cast<Index>(rows), static_cast<Index>(cols));
  const char* p = bytes.data() + header;
  for (Index i = 0; i < out.rows(); ++i) {
    for (Index j = 0; j < out.cols(); ++j, p += sizeof(double)) {
      out(i, j) = read_le<double>(p);
    }
  }
  return out;
}

std::string format_binary_matrix(const Matrix& a) {
  std::string out;
  out.reserve(16 + static_cast<std::size_t>(a.size()) * sizeof(double));
  append_le<std::uint64_t>(out, static_cast<std::uint64_t>(a.rows()));
  append_le<std::uint64_t>(out, static_cast<std::uint64_t>(a.cols()));
  for (Index i = 0; i < a.rows(); ++i) {
    for (Index j = 0; j < a.cols(); ++j) append_le<double>(out, a(i, j));
  }
  return out;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, std::string_view contents) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
  if (!out) throw Error("write failed: " + path.string());
}

Matrix load_matrix(const fs::path& path, MatrixFormat format) {
  const std::string bytes = read_file(path);
  return format == MatrixFormat::csv ? parse_csv_matrix(bytes, path.string())
                                     : parse_binary_matrix(bytes, path.string());
}

Matrix load_matrix(const fs::path& path) {
  return load_matrix(path, format_from_path(path));
}

void save_matrix(const fs::path& path, const Matrix& a, MatrixFormat format) {
  write_file(path, format == MatrixFormat::csv ? format_csv_matrix(a)
                                               : format_binary_matrix(a));
}

void save_matrix(const fs::path& path, const Matrix& a) {
  save_matrix(path, a, format_from_path(path));
}

std::vector<fs::path> list_subject_files(const std::string& spec) {
  std::vector<fs::path> out;
  const fs::path p(spec);
  if (fs::is_directory(p)) {
    for (const auto& entry : fs::directory_iterator(p)) {
      if (entry.is_regular_file() && is_matrix_file(entry.path())) {
        out.push_back(entry.path());
      }
    }
  } else {
    const fs::path dir = p.has_parent_path() ? p.parent_path() : fs::path(".");
    const std::string pattern = p.filename().string();
    if (!fs::is_directory(dir)) {
      throw ParseError("input directory does not exist: " + dir.string());
    }
    for (const auto& entry : fs::directory_iterator(dir)) {
      if (entry.is_regular_file() &&
          glob_match(pattern, entry.path().filename().string())) {
        out.push_back(entry.path());
      }
    }
  }
  std::sort(out.begin(), out.end());
  if (out.empty()) throw ParseError("no matrix files match " + spec);
  return out;
}

Matrix load_coordinates(const fs::path& path) {
  Matrix c = load_matrix(path);
  if (c.cols() != 3) {
    throw DimensionError(path.string() + ": coordinates need 3 columns, got " +
                         std::to_string(c.cols()));
  }
  return c;
}

RoiLabels parse_roi_labels(std::string_view text, std::string_view source) {
  std::vector<Line> lines = lines_of(text);
  RoiLabels out;
  bool first = true;
  for (const Line& line : lines) {
    const auto cells = split(line.text, ',');
    int label = 0;
    const auto [ptr, ec] = std::from_chars(
        cells[0].data(), cells[0].data() + cells[0].size(), label);
    if (ec != std::errc() || ptr != cells[0].data() + cells[0].size()) {
      if (first) {
        first = false;
        continue; // header
      }
      throw ParseError(at(source, line.number) + "'" + std::string(cells[0]) +
                       "' is not an integer label");
    }
    first = false;
    if (cells.size() > 2) {
      throw ParseError(at(source, line.number) +
                       "expected 'label' or 'label,name'");
    }
    out.labels.push_back(label);
    if (cells.size() == 2 && !cells[1].empty()) {
      out.region_names[label] = std::string(cells[1]);
    }
  }
  if (out.labels.empty()) throw ParseError(std::string(source) + ": no labels");
  return out;
}

RoiLabels load_roi_labels(const fs::path& path) {
  return parse_roi_labels(read_file(path), path.string());
}

PriorSpec parse_prior_option(const std::string& option, double k) {
  PriorSpec spec;
  spec.k = k;
  if (option == "identity") {
    spec.location = IdentityLocation{};
  } else if (option.starts_with("euclidean:")) {
    spec.location = EuclideanKernelLocation{load_coordinates(option.substr(10))};
  } else if (option.starts_with("custom:")) {
    spec.location = CustomLocation{load_matrix(option.substr(7))};
  } else {
    throw ValidationError("unknown prior '" + option +
                          "', expected identity, euclidean:<file> or "
                          "custom:<file>");
  }
  validate_prior(spec);
  return spec;
}

std::string file_checksum(const fs::path& path) {
  const std::string bytes = read_file(path);
  std::uint64_t hash = 0xcbf29ce484222325ull;
  for (unsigned char c : bytes) {
    hash ^= c;
    hash *= 0x100000001b3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(hash));
  return buf;
}

} // namespace promises::io
