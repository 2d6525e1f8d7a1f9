#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>

#include <Eigen/Dense>

#include "spinr/image.hpp"
#include "spinr/nn.hpp"

namespace spinr {

enum class Family : std::uint8_t { kSiren = 0, kFourier = 1 };

std::string_view to_string(Family family);
Family parse_family(std::string_view name);

/// Architecture of a coordinate MLP: L0 maps the (encoded) coordinate to
/// `width` units, `hidden_layers` width x width layers follow, and the
/// output layer maps to RGB. Layer indices are 0 .. hidden_layers + 1.
struct ModelSpec {
  static constexpr int kOutputDim = 3;
  static constexpr int kCoordDim = 2;

  Family family = Family::kSiren;
  int width = 128;
  int hidden_layers = 4;
  double omega0 = 30.0;        // siren
  int fourier_features = 128;  // fourier: rows of B
  double fourier_sigma = 10.0; // fourier: std of B entries

  static ModelSpec siren(int width, int hidden_layers, double omega0 = 30.0);
  static ModelSpec fourier(int width, int hidden_layers, int features = 128,
                           double sigma = 10.0);

  void validate() const;

  std::size_t layer_count() const { return static_cast<std::size_t>(hidden_layers) + 2; }
  std::size_t output_index() const { return static_cast<std::size_t>(hidden_layers) + 1; }
  /// Width of the vector fed into L0.
  int input_features() const;
  /// Parameters of L0..L_out.
  std::size_t trainable_param_count() const;
  /// trainable_param_count() plus the entries of B.
  std::size_t param_count() const;

  friend bool operator==(const ModelSpec&, const ModelSpec&) = default;
};

/// Normalized pixel-center coordinates for an H x W raster. Pixel (i, j)
/// maps to (2(j + 0.5)/W - 1, 2(i + 0.5)/H - 1); columns are in row-major
/// pixel order.
class CoordGrid {
 public:
  CoordGrid(int height, int width);

  int height() const { return height_; }
  int width() const { return width_; }
  std::size_t size() const { return static_cast<std::size_t>(coords_.cols()); }
  const Eigen::MatrixXd& coords() const { return coords_; }
  Eigen::Vector2d at(int row, int col) const {
    return coords_.col(static_cast<Eigen::Index>(row) * width_ + col);
  }

  /// The same grid with its rows listed bottom-to-top.
  CoordGrid with_rows_reversed() const;

 private:
  int height_;
  int width_;
  Eigen::MatrixXd coords_;  // 2 x (H*W)
};

/// [sin(2 pi B x); cos(2 pi B x)] for one coordinate x; B is m x 2.
Eigen::VectorXd fourier_encode(const Eigen::MatrixXd& b, const Eigen::Vector2d& x);

/// Draws the initial parameters for `spec` from the seed's init substream.
///
/// siren: L0 weights ~ U(-1/in, 1/in), later weights ~ U(-sqrt(6/in)/omega0,
/// +sqrt(6/in)/omega0), biases ~ U(-1/sqrt(in), 1/sqrt(in)); sine on
/// L0..Ln, identity output.
/// fourier: B ~ N(0, sigma^2) (frozen), weights and biases ~
/// U(-1/sqrt(in), 1/sqrt(in)); relu on L0..Ln, identity output.
ParamSet build_model(const ModelSpec& spec, std::uint64_t seed);

/// Reads the architecture back off a parameter set.
ModelSpec infer_spec(const ParamSet& model);

/// Evaluates the model at every grid coordinate. Values are not clamped.
Image render(const ParamSet& model, const CoordGrid& grid, const LayerSet& active);
Image render(const ParamSet& model, const CoordGrid& grid);

}  // namespace spinr
