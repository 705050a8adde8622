#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>

#include <Eigen/Dense>

namespace sd {

/// Shortest round-trip decimal form, independent of the global locale. NaN prints as "nan".
std::string format_double(double value);

/// Parses a complete decimal token; throws IoError on trailing garbage.
double parse_double(std::string_view token);

/// Point-cloud CSV: header "x" (d=1), "x,y" (d=2), "x,y,z" (d=3) or x0..x{d-1},
/// then one point per line.
void write_points_csv(std::ostream& out, const Eigen::Ref<const Eigen::MatrixXd>& points);
void write_points_csv(const std::filesystem::path& path,
                      const Eigen::Ref<const Eigen::MatrixXd>& points);
Eigen::MatrixXd read_points_csv(std::istream& in);
Eigen::MatrixXd read_points_csv(const std::filesystem::path& path);

/// Opens a file for writing, creating parent directories; throws IoError on failure.
std::ofstream open_output(const std::filesystem::path& path);

}  // namespace sd
