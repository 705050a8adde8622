#include "sd/datasets.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "sd/error.hpp"
#include "sd/io.hpp"

namespace sd {

ImageBuffer::ImageBuffer(int width, int height, std::vector<double> rgb)
    : width_(width), height_(height), rgb_(std::move(rgb)) {
  if (width_ < 1 || height_ < 1) throw ParameterError("ImageBuffer: empty image");
  if (rgb_.size() != static_cast<std::size_t>(width_) * height_ * 3) {
    throw ParameterError("ImageBuffer: expected width * height RGB triples");
  }
  for (double& v : rgb_) {
    if (std::isnan(v)) throw ParameterError("ImageBuffer: NaN channel");
    v = std::clamp(v, 0.0, 1.0);
  }
}

ShapeMask::ShapeMask(int width, int height, std::vector<std::uint8_t> occupied)
    : width_(width), height_(height), cells_(std::move(occupied)) {
  if (width_ < 1 || height_ < 1) throw ParameterError("ShapeMask: empty grid");
  if (cells_.size() != static_cast<std::size_t>(width_) * height_) {
    throw ParameterError("ShapeMask: expected width * height cells");
  }
}

std::size_t ShapeMask::count() const {
  return static_cast<std::size_t>(std::count_if(cells_.begin(), cells_.end(),
                                                [](std::uint8_t c) { return c != 0; }));
}

ParticleSet sample_gauss1d(double mean, double stddev, Eigen::Index n, std::uint64_t seed,
                           Stream stream) {
  if (!(stddev > 0.0)) throw ParameterError("sample_gauss1d: stddev must be > 0");
  if (n < 1) throw ParameterError("sample_gauss1d: n must be >= 1");
  Rng rng(seed, stream);
  Eigen::MatrixXd points(n, 1);
  for (Eigen::Index i = 0; i < n; ++i) points(i, 0) = rng.normal(mean, stddev);
  return ParticleSet(std::move(points));
}

ParticleSet image_to_particles(const ImageBuffer& img) {
  const Eigen::Index n = static_cast<Eigen::Index>(img.width()) * img.height();
  Eigen::MatrixXd points(n, 3);
  const auto& rgb = img.rgb();
  for (Eigen::Index i = 0; i < n; ++i) {
    for (int c = 0; c < 3; ++c) points(i, c) = rgb[static_cast<std::size_t>(i) * 3 + c];
  }
  return ParticleSet(std::move(points));
}

ImageBuffer particles_to_image(const ParticleSet& particles, int width, int height) {
  if (particles.dim() != 3) throw ParameterError("particles_to_image: particles must be 3-d");
  if (width < 1 || height < 1 || particles.size() != static_cast<Eigen::Index>(width) * height) {
    throw ParameterError("particles_to_image: particle count must equal width * height");
  }
  std::vector<double> rgb(static_cast<std::size_t>(particles.size()) * 3);
  for (Eigen::Index i = 0; i < particles.size(); ++i) {
    for (int c = 0; c < 3; ++c) rgb[static_cast<std::size_t>(i) * 3 + c] = particles.points()(i, c);
  }
  return ImageBuffer(width, height, std::move(rgb));
}

ParticleSet shape_to_particles(const ShapeMask& mask, Eigen::Index n, std::uint64_t seed,
                               Stream stream) {
  if (n < 1) throw ParameterError("shape_to_particles: n must be >= 1");
  std::vector<std::pair<int, int>> cells;
  for (int row = 0; row < mask.height(); ++row) {
    for (int col = 0; col < mask.width(); ++col) {
      if (mask.occupied(col, row)) cells.emplace_back(col, row);
    }
  }
  if (cells.empty()) throw ParameterError("shape_to_particles: mask has no occupied cell");

  const double side = std::max(mask.width(), mask.height());
  Rng rng(seed, stream);
  Eigen::MatrixXd points(n, 2);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto [col, row] = cells[rng.index(cells.size())];
    const double jx = rng.uniform();
    const double jy = rng.uniform();
    points(i, 0) = (2.0 * (col + jx) - mask.width()) / side;
    points(i, 1) = (mask.height() - 2.0 * (row + jy)) / side;
  }
  return ParticleSet(std::move(points));
}

Eigen::VectorXd kde1d(const Eigen::Ref<const Eigen::VectorXd>& points, double bandwidth,
                      const Eigen::Ref<const Eigen::VectorXd>& grid) {
  if (points.size() == 0) throw ParameterError("kde1d: no points");
  if (!(bandwidth > 0.0)) throw ParameterError("kde1d: bandwidth must be > 0");
  const double norm =
      1.0 / (static_cast<double>(points.size()) * bandwidth * std::sqrt(2.0 * std::numbers::pi));
  Eigen::VectorXd density(grid.size());
  for (Eigen::Index g = 0; g < grid.size(); ++g) {
    const Eigen::ArrayXd z = (points.array() - grid(g)) / bandwidth;
    density(g) = norm * (-0.5 * z.square()).exp().sum();
  }
  return density;
}

double silverman_bandwidth(const Eigen::Ref<const Eigen::VectorXd>& points) {
  const Eigen::Index n = points.size();
  if (n < 2) throw ParameterError("silverman_bandwidth: need at least two points");
  const double mean = points.mean();
  const double sd = std::sqrt((points.array() - mean).square().sum() / static_cast<double>(n - 1));
  std::vector<double> sorted(points.data(), points.data() + n);
  std::sort(sorted.begin(), sorted.end());
  auto quantile = [&](double q) {
    const double pos = q * static_cast<double>(n - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
  };
  const double iqr = quantile(0.75) - quantile(0.25);
  double spread = iqr > 0.0 ? std::min(sd, iqr / 1.34) : sd;
  if (!(spread > 0.0)) throw ParameterError("silverman_bandwidth: points have zero spread");
  return 0.9 * spread * std::pow(static_cast<double>(n), -0.2);
}

ImageBuffer read_png(const std::filesystem::path& path) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&image, path.string().c_str())) {
    throw IoError("cannot read PNG " + path.string() + ": " + image.message);
  }
  image.format = PNG_FORMAT_RGB;
  std::vector<png_byte> buffer(PNG_IMAGE_SIZE(image));
  png_color white{255, 255, 255};
  if (!png_image_finish_read(&image, &white, buffer.data(), 0, nullptr)) {
    const std::string message = image.message;
    png_image_free(&image);
    throw IoError("cannot decode PNG " + path.string() + ": " + message);
  }
  std::vector<double> rgb(buffer.size());
  std::transform(buffer.begin(), buffer.end(), rgb.begin(),
                 [](png_byte v) { return static_cast<double>(v) / 255.0; });
  return ImageBuffer(static_cast<int>(image.width), static_cast<int>(image.height), std::move(rgb));
}

void write_png(const std::filesystem::path& path, const ImageBuffer& img) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  std::vector<png_byte> buffer(img.rgb().size());
  // nearbyint honours the default round-to-nearest-even mode.
  std::transform(img.rgb().begin(), img.rgb().end(), buffer.begin(),
                 [](double v) { return static_cast<png_byte>(std::nearbyint(v * 255.0)); });
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(img.width());
  image.height = static_cast<png_uint_32>(img.height());
  image.format = PNG_FORMAT_RGB;
  if (!png_image_write_to_file(&image, path.string().c_str(), 0, buffer.data(), 0, nullptr)) {
    throw IoError("cannot write PNG " + path.string() + ": " + image.message);
  }
}

ShapeMask mask_from_image(const ImageBuffer& img) {
  std::vector<std::uint8_t> cells(static_cast<std::size_t>(img.width()) * img.height());
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      const double luma = 0.299 * img.at(x, y, 0) + 0.587 * img.at(x, y, 1) + 0.114 * img.at(x, y, 2);
      cells[static_cast<std::size_t>(y) * img.width() + x] = luma < 0.5 ? 1 : 0;
    }
  }
  return ShapeMask(img.width(), img.height(), std::move(cells));
}

namespace {

bool inside_shape(const std::string& name, double u, double v) {
  const double r = std::hypot(u, v);
  if (name == "disk") return r < 0.8;
  if (name == "ring") return r > 0.45 && r < 0.85;
  if (name == "square") return std::abs(u) < 0.7 && std::abs(v) < 0.7;
  if (name == "cross") {
    return (std::abs(u) < 0.25 && std::abs(v) < 0.8) || (std::abs(v) < 0.25 && std::abs(u) < 0.8);
  }
  if (name == "heart") {
    const double x = 1.4 * u;
    const double y = 1.4 * v + 0.15;
    const double a = x * x + y * y - 1.0;
    return a * a * a - x * x * y * y * y <= 0.0;
  }
  if (name == "star") {
    const double theta = std::atan2(v, u) - std::numbers::pi / 2.0;
    return r < 0.55 + 0.3 * std::cos(5.0 * theta);
  }
  if (name == "triangle") return v > -0.6 && v < 0.8 - 2.0 * std::abs(u) * 0.9 && v < 0.8;
  throw ParameterError("unknown builtin shape '" + name + "'");
}

}  // namespace

ShapeMask builtin_shape(const std::string& name, int resolution) {
  if (resolution < 2) throw ParameterError("builtin_shape: resolution must be >= 2");
  std::vector<std::uint8_t> cells(static_cast<std::size_t>(resolution) * resolution);
  for (int row = 0; row < resolution; ++row) {
    for (int col = 0; col < resolution; ++col) {
      const double u = 2.0 * (col + 0.5) / resolution - 1.0;
      const double v = 1.0 - 2.0 * (row + 0.5) / resolution;
      cells[static_cast<std::size_t>(row) * resolution + col] = inside_shape(name, u, v) ? 1 : 0;
    }
  }
  return ShapeMask(resolution, resolution, std::move(cells));
}

std::vector<std::string> builtin_shape_names() {
  return {"disk", "ring", "square", "cross", "heart", "star", "triangle"};
}

ImageBuffer builtin_image(const std::string& name, int width, int height) {
  if (width < 1 || height < 1) throw ParameterError("builtin_image: empty size");
  std::vector<double> rgb(static_cast<std::size_t>(width) * height * 3);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const double u = (x + 0.5) / width;
      const double v = (y + 0.5) / height;
      const double ripple = 0.5 + 0.5 * std::sin(9.0 * u + 4.0 * std::cos(7.0 * v));
      double r, g, b;
      if (name == "sunset") {
        r = 0.95 - 0.35 * v + 0.05 * ripple;
        g = 0.25 + 0.45 * (1.0 - v) * ripple;
        b = 0.15 + 0.55 * v * v;
      } else if (name == "ocean") {
        r = 0.05 + 0.2 * ripple * u;
        g = 0.35 + 0.35 * v + 0.1 * ripple;
        b = 0.55 + 0.4 * (1.0 - v) * (0.6 + 0.4 * ripple);
      } else if (name == "forest") {
        r = 0.15 + 0.3 * ripple * v;
        g = 0.4 + 0.4 * u * (0.5 + 0.5 * ripple);
        b = 0.1 + 0.2 * (1.0 - u);
      } else {
        throw ParameterError("unknown builtin image '" + name + "'");
      }
      const std::size_t k = (static_cast<std::size_t>(y) * width + x) * 3;
      rgb[k] = r;
      rgb[k + 1] = g;
      rgb[k + 2] = b;
    }
  }
  return ImageBuffer(width, height, std::move(rgb));
}

std::vector<std::string> builtin_image_names() { return {"sunset", "ocean", "forest"}; }

}  // namespace sd
