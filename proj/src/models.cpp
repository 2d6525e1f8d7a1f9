#include "spinr/models.hpp"

#include <cmath>
#include <stdexcept>

#include "spinr/kernels.hpp"
#include "spinr/rng.hpp"

namespace spinr {

std::string_view to_string(Family family) {
  switch (family) {
    case Family::kSiren:
      return "siren";
    case Family::kFourier:
      return "fourier";
  }
  return "unknown";
}

Family parse_family(std::string_view name) {
  if (name == "siren") return Family::kSiren;
  if (name == "fourier") return Family::kFourier;
  throw std::invalid_argument("unknown model family '" + std::string(name) + "'");
}

ModelSpec ModelSpec::siren(int width, int hidden_layers, double omega0) {
  ModelSpec s;
  s.family = Family::kSiren;
  s.width = width;
  s.hidden_layers = hidden_layers;
  s.omega0 = omega0;
  return s;
}

ModelSpec ModelSpec::fourier(int width, int hidden_layers, int features, double sigma) {
  ModelSpec s;
  s.family = Family::kFourier;
  s.width = width;
  s.hidden_layers = hidden_layers;
  s.fourier_features = features;
  s.fourier_sigma = sigma;
  return s;
}

void ModelSpec::validate() const {
  if (width < 1) throw std::invalid_argument("ModelSpec: width must be >= 1");
  if (hidden_layers < 1) throw std::invalid_argument("ModelSpec: need >= 1 hidden layer");
  if (family == Family::kSiren && !(omega0 > 0.0))
    throw std::invalid_argument("ModelSpec: omega0 must be positive");
  if (family == Family::kFourier) {
    if (fourier_features < 1)
      throw std::invalid_argument("ModelSpec: fourier_features must be >= 1");
    if (!(fourier_sigma >= 0.0))
      throw std::invalid_argument("ModelSpec: fourier_sigma must be >= 0");
  }
}

int ModelSpec::input_features() const {
  return family == Family::kFourier ? 2 * fourier_features : kCoordDim;
}

std::size_t ModelSpec::trainable_param_count() const {
  const std::size_t h = static_cast<std::size_t>(width);
  const std::size_t in = static_cast<std::size_t>(input_features());
  return h * (in + 1) + static_cast<std::size_t>(hidden_layers) * h * (h + 1) +
         kOutputDim * (h + 1);
}

std::size_t ModelSpec::param_count() const {
  std::size_t n = trainable_param_count();
  if (family == Family::kFourier)
    n += static_cast<std::size_t>(fourier_features) * kCoordDim;
  return n;
}

CoordGrid::CoordGrid(int height, int width)
    : height_(height), width_(width), coords_(2, static_cast<Eigen::Index>(height) * width) {
  if (height < 1 || width < 1) throw std::invalid_argument("CoordGrid: empty shape");
  for (int i = 0; i < height; ++i)
    for (int j = 0; j < width; ++j) {
      const Eigen::Index k = static_cast<Eigen::Index>(i) * width + j;
      coords_(0, k) = 2.0 * (j + 0.5) / width - 1.0;
      coords_(1, k) = 2.0 * (i + 0.5) / height - 1.0;
    }
}

CoordGrid CoordGrid::with_rows_reversed() const {
  CoordGrid out = *this;
  for (int i = 0; i < height_; ++i)
    out.coords_.middleCols(static_cast<Eigen::Index>(i) * width_, width_) =
        coords_.middleCols(static_cast<Eigen::Index>(height_ - 1 - i) * width_, width_);
  return out;
}

Eigen::VectorXd fourier_encode(const Eigen::MatrixXd& b, const Eigen::Vector2d& x) {
  if (b.cols() != 2) throw std::invalid_argument("fourier_encode: B must be m x 2");
  const Eigen::Index m = b.rows();
  Eigen::VectorXd projected = b * x;
  Eigen::VectorXd out(2 * m);
  kernels::sin_cos_2pi(projected.data(), out.data(), out.data() + m,
                       static_cast<std::size_t>(m));
  return out;
}

namespace {

void fill_uniform(Eigen::MatrixXd& m, double bound, Rng& rng) {
  // Column-major fill order is part of the seeded reproducibility contract.
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(-bound, bound);
}

void fill_uniform(Eigen::VectorXd& v, double bound, Rng& rng) {
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = rng.uniform(-bound, bound);
}

}  // namespace

ParamSet build_model(const ModelSpec& spec, std::uint64_t seed) {
  spec.validate();
  Rng rng(seed, RngStream::kInit);
  ParamSet model;
  const bool siren = spec.family == Family::kSiren;
  const Activation hidden_act = siren ? Activation::kSine : Activation::kRelu;

  if (!siren) {
    model.encoding.resize(spec.fourier_features, ModelSpec::kCoordDim);
    for (Eigen::Index i = 0; i < model.encoding.size(); ++i)
      model.encoding.data()[i] = rng.normal(0.0, spec.fourier_sigma);
  }

  auto add_layer = [&](int in, int out, Activation act, bool first) {
    DenseLayer layer(in, out, act, spec.omega0);
    const double fan_in = static_cast<double>(in);
    double weight_bound = 1.0 / std::sqrt(fan_in);
    if (siren)
      weight_bound = first ? 1.0 / fan_in : std::sqrt(6.0 / fan_in) / spec.omega0;
    fill_uniform(layer.weights, weight_bound, rng);
    fill_uniform(layer.bias, 1.0 / std::sqrt(fan_in), rng);
    model.layers.push_back(std::move(layer));
  };

  add_layer(spec.input_features(), spec.width, hidden_act, true);
  for (int i = 0; i < spec.hidden_layers; ++i)
    add_layer(spec.width, spec.width, hidden_act, false);
  add_layer(spec.width, ModelSpec::kOutputDim, Activation::kIdentity, false);
  return model;
}

ModelSpec infer_spec(const ParamSet& model) {
  model.validate();
  ModelSpec spec;
  spec.width = static_cast<int>(model.layers.front().out_dim());
  spec.hidden_layers = static_cast<int>(model.layers.size()) - 2;
  if (model.has_encoding()) {
    spec.family = Family::kFourier;
    spec.fourier_features = static_cast<int>(model.encoding.rows());
  } else {
    spec.family = Family::kSiren;
    spec.omega0 = model.layers.front().omega0;
  }
  return spec;
}

Image render(const ParamSet& model, const CoordGrid& grid, const LayerSet& active) {
  Eigen::MatrixXd out = forward_batch(model, grid.coords(), active);
  if (out.rows() != Image::kChannels)
    throw std::invalid_argument("render: model does not produce RGB");
  return Image::from_pixels(grid.height(), grid.width(), out);
}

Image render(const ParamSet& model, const CoordGrid& grid) {
  return render(model, grid, LayerSet::all(model.layer_count()));
}

}  // namespace spinr
