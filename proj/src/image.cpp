#include "spinr/image.hpp"

#include <algorithm>
#include <stdexcept>

namespace spinr {

Image::Image(int height, int width, double fill)
    : height_(height),
      width_(width),
      samples_(static_cast<std::size_t>(height) * static_cast<std::size_t>(width) *
                   kChannels,
               fill) {
  if (height < 1 || width < 1) throw std::invalid_argument("Image: empty shape");
}

Image::Image(int height, int width, std::vector<double> samples)
    : height_(height), width_(width), samples_(std::move(samples)) {
  if (height < 1 || width < 1) throw std::invalid_argument("Image: empty shape");
  if (samples_.size() != pixel_count() * kChannels)
    throw std::invalid_argument("Image: sample count does not match shape");
}

Image Image::from_pixels(int height, int width, const Eigen::MatrixXd& pixels) {
  if (pixels.rows() != kChannels ||
      pixels.cols() != static_cast<Eigen::Index>(height) * width)
    throw std::invalid_argument("Image::from_pixels: shape mismatch");
  std::vector<double> s(pixels.data(), pixels.data() + pixels.size());
  return Image(height, width, std::move(s));
}

Image Image::clamped() const {
  Image out = *this;
  for (double& v : out.samples_) v = std::clamp(v, 0.0, 1.0);
  return out;
}

Image Image::flipped_vertically() const {
  Image out = *this;
  const std::size_t row_len = static_cast<std::size_t>(width_) * kChannels;
  for (int r = 0; r < height_; ++r)
    std::copy_n(samples_.begin() + static_cast<std::ptrdiff_t>(r * row_len), row_len,
                out.samples_.begin() +
                    static_cast<std::ptrdiff_t>((height_ - 1 - r) * row_len));
  return out;
}

}  // namespace spinr
