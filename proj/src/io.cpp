#include "sd/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <vector>

#include "sd/error.hpp"

namespace sd {

std::string format_double(double value) {
  if (std::isnan(value)) return "nan";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

double parse_double(std::string_view token) {
  while (!token.empty() && (token.front() == ' ' || token.front() == '\t')) token.remove_prefix(1);
  while (!token.empty() && (token.back() == ' ' || token.back() == '\t' || token.back() == '\r')) {
    token.remove_suffix(1);
  }
  if (!token.empty() && token.front() == '+') token.remove_prefix(1);
  double value = 0.0;
  const auto res = std::from_chars(token.data(), token.data() + token.size(), value);
  if (res.ec != std::errc() || res.ptr != token.data() + token.size()) {
    throw IoError("cannot parse number '" + std::string(token) + "'");
  }
  return value;
}

namespace {

std::string header_for(Eigen::Index dim) {
  static const char* kNames[] = {"x", "y", "z"};
  std::string header;
  for (Eigen::Index a = 0; a < dim; ++a) {
    if (a > 0) header += ',';
    header += dim <= 3 ? std::string(kNames[a]) : "x" + std::to_string(a);
  }
  return header;
}

}  // namespace

void write_points_csv(std::ostream& out, const Eigen::Ref<const Eigen::MatrixXd>& points) {
  out << header_for(points.cols()) << '\n';
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    for (Eigen::Index a = 0; a < points.cols(); ++a) {
      if (a > 0) out << ',';
      out << format_double(points(i, a));
    }
    out << '\n';
  }
}

void write_points_csv(const std::filesystem::path& path,
                      const Eigen::Ref<const Eigen::MatrixXd>& points) {
  auto out = open_output(path);
  write_points_csv(out, points);
}

Eigen::MatrixXd read_points_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw IoError("points CSV: missing header");
  const auto dim = static_cast<Eigen::Index>(std::count(line.begin(), line.end(), ',') + 1);
  std::vector<double> values;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    std::string_view rest(line);
    Eigen::Index fields = 0;
    while (true) {
      const auto comma = rest.find(',');
      values.push_back(parse_double(rest.substr(0, comma)));
      ++fields;
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    if (fields != dim) {
      throw IoError("points CSV line " + std::to_string(line_no) + ": expected " +
                    std::to_string(dim) + " fields");
    }
  }
  if (values.empty()) throw IoError("points CSV: no points");
  const auto n = static_cast<Eigen::Index>(values.size()) / dim;
  return Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
      values.data(), n, dim);
}

Eigen::MatrixXd read_points_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  return read_points_csv(in);
}

std::ofstream open_output(const std::filesystem::path& path) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  return out;
}

}  // namespace sd
