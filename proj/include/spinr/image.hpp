#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Dense>

namespace spinr {

/// H x W RGB raster with real-valued samples, stored row-major with
/// interleaved channels. Samples are nominally in [0, 1]; renders may leave
/// that range until they are clamped for display or export.
class Image {
 public:
  static constexpr int kChannels = 3;
  using PixelMatrix = Eigen::Matrix<double, kChannels, Eigen::Dynamic>;

  Image() = default;
  Image(int height, int width, double fill = 0.0);
  Image(int height, int width, std::vector<double> samples);

  /// Builds an image from a 3 x (H*W) matrix whose columns are pixels in
  /// row-major order.
  static Image from_pixels(int height, int width, const Eigen::MatrixXd& pixels);

  int height() const { return height_; }
  int width() const { return width_; }
  std::size_t pixel_count() const {
    return static_cast<std::size_t>(height_) * static_cast<std::size_t>(width_);
  }
  bool empty() const { return samples_.empty(); }

  double& at(int row, int col, int channel) {
    return samples_[index(row, col, channel)];
  }
  double at(int row, int col, int channel) const {
    return samples_[index(row, col, channel)];
  }

  const std::vector<double>& samples() const { return samples_; }
  std::vector<double>& samples() { return samples_; }

  /// Column view: one pixel per column, in row-major pixel order.
  Eigen::Map<const PixelMatrix> pixels() const {
    return {samples_.data(), kChannels, static_cast<Eigen::Index>(pixel_count())};
  }

  Image clamped() const;
  Image flipped_vertically() const;

  bool same_shape(const Image& other) const {
    return height_ == other.height_ && width_ == other.width_;
  }

  friend bool operator==(const Image&, const Image&) = default;

 private:
  std::size_t index(int row, int col, int channel) const {
    return (static_cast<std::size_t>(row) * static_cast<std::size_t>(width_) +
            static_cast<std::size_t>(col)) * kChannels +
           static_cast<std::size_t>(channel);
  }

  int height_ = 0;
  int width_ = 0;
  std::vector<double> samples_;
};

}  // namespace spinr
