#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sd/embeddings.hpp"
#include "sd/rng.hpp"

namespace sd {

/// Row-major RGB image with channels in [0, 1]; out-of-range inputs are clamped.
class ImageBuffer {
 public:
  ImageBuffer(int width, int height, std::vector<double> rgb);

  int width() const { return width_; }
  int height() const { return height_; }
  const std::vector<double>& rgb() const { return rgb_; }
  double at(int x, int y, int channel) const {
    return rgb_[(static_cast<std::size_t>(y) * width_ + x) * 3 + channel];
  }

  friend bool operator==(const ImageBuffer&, const ImageBuffer&) = default;

 private:
  int width_;
  int height_;
  std::vector<double> rgb_;
};

/// Occupancy grid; row 0 is the top of the picture.
class ShapeMask {
 public:
  ShapeMask(int width, int height, std::vector<std::uint8_t> occupied);

  int width() const { return width_; }
  int height() const { return height_; }
  bool occupied(int col, int row) const {
    return cells_[static_cast<std::size_t>(row) * width_ + col] != 0;
  }
  std::size_t count() const;

 private:
  int width_;
  int height_;
  std::vector<std::uint8_t> cells_;
};

/// n draws from N(mean, stddev^2) in one dimension.
ParticleSet sample_gauss1d(double mean, double stddev, Eigen::Index n, std::uint64_t seed,
                           Stream stream = Stream::kSource);

/// One 3-d particle per pixel, row-major.
ParticleSet image_to_particles(const ImageBuffer& img);
/// Inverse of image_to_particles; channels are clamped to [0, 1].
ImageBuffer particles_to_image(const ParticleSet& particles, int width, int height);

/// n points uniform over the occupied cells (uniform jitter inside each cell),
/// scaled so the longer side of the grid spans [-1, 1], y pointing up.
ParticleSet shape_to_particles(const ShapeMask& mask, Eigen::Index n, std::uint64_t seed,
                               Stream stream = Stream::kShapeJitter);

/// Gaussian kernel density estimate of 1-d points evaluated on `grid`.
Eigen::VectorXd kde1d(const Eigen::Ref<const Eigen::VectorXd>& points, double bandwidth,
                      const Eigen::Ref<const Eigen::VectorXd>& grid);

/// Silverman's rule of thumb 0.9 * min(sd, IQR / 1.34) * n^(-1/5).
double silverman_bandwidth(const Eigen::Ref<const Eigen::VectorXd>& points);

/// 8-bit PNG I/O. Reading converts any PNG to RGB (alpha composited on white);
/// writing quantizes each channel with round-half-to-even of v * 255.
ImageBuffer read_png(const std::filesystem::path& path);
void write_png(const std::filesystem::path& path, const ImageBuffer& img);

/// Mask from an image: luma (Rec. 601) below 0.5 is occupied.
ShapeMask mask_from_image(const ImageBuffer& img);

/// Procedural shapes: disk, ring, square, cross, heart, star, triangle.
ShapeMask builtin_shape(const std::string& name, int resolution = 128);
std::vector<std::string> builtin_shape_names();

/// Procedural test images: sunset, ocean, forest.
ImageBuffer builtin_image(const std::string& name, int width = 64, int height = 64);
std::vector<std::string> builtin_image_names();

}  // namespace sd
