#include "spinr/nn.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "spinr/errors.hpp"
#include "spinr/kernels.hpp"

namespace spinr {

namespace {

void apply_activation(const DenseLayer& layer, const Eigen::MatrixXd& z,
                      Eigen::MatrixXd& out) {
  out.resize(z.rows(), z.cols());
  switch (layer.activation) {
    case Activation::kSine:
      kernels::sine(z.data(), out.data(), static_cast<std::size_t>(z.size()),
                    layer.omega0);
      break;
    case Activation::kRelu:
      out = z.cwiseMax(0.0);
      break;
    case Activation::kIdentity:
      out = z;
      break;
  }
}

// dz = upstream * act'(z), in place on `upstream`.
void activation_backward(const DenseLayer& layer, const Eigen::MatrixXd& z,
                         Eigen::MatrixXd& upstream) {
  switch (layer.activation) {
    case Activation::kSine:
      kernels::sine_backward(z.data(), upstream.data(), upstream.data(),
                             static_cast<std::size_t>(z.size()), layer.omega0);
      break;
    case Activation::kRelu:
      upstream = (z.array() > 0.0).select(upstream, 0.0);
      break;
    case Activation::kIdentity:
      break;
  }
}

bool all_finite(const Eigen::MatrixXd& m) { return m.allFinite(); }

}  // namespace

DenseLayer::DenseLayer(Eigen::Index in_dim, Eigen::Index out_dim, Activation act,
                       double omega)
    : weights(Eigen::MatrixXd::Zero(out_dim, in_dim)),
      bias(Eigen::VectorXd::Zero(out_dim)),
      activation(act),
      omega0(omega) {}

void DenseLayer::validate() const {
  if (bias.size() != weights.rows())
    throw std::invalid_argument("DenseLayer: bias length " +
                                std::to_string(bias.size()) + " != out_dim " +
                                std::to_string(weights.rows()));
  if (weights.rows() == 0 || weights.cols() == 0)
    throw std::invalid_argument("DenseLayer: empty weight matrix");
  if (activation == Activation::kSine && !(omega0 > 0.0))
    throw std::invalid_argument("DenseLayer: sine activation needs omega0 > 0");
  if (!weights.allFinite() || !bias.allFinite())
    throw std::invalid_argument("DenseLayer: non-finite parameter");
}

Eigen::Index ParamSet::input_dim() const {
  return has_encoding() ? encoding.cols() : layers.front().in_dim();
}

std::size_t ParamSet::param_count() const {
  return trainable_param_count() + static_cast<std::size_t>(encoding.size());
}

std::size_t ParamSet::trainable_param_count() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += l.param_count();
  return n;
}

ParamSet ParamSet::zeros_like() const {
  ParamSet z;
  z.layers.reserve(layers.size());
  for (const auto& l : layers)
    z.layers.emplace_back(l.in_dim(), l.out_dim(), l.activation, l.omega0);
  z.encoding = Eigen::MatrixXd::Zero(encoding.rows(), encoding.cols());
  return z;
}

void ParamSet::validate() const {
  if (layers.size() < 2)
    throw std::invalid_argument("ParamSet: need at least an input and output layer");
  for (const auto& l : layers) l.validate();
  if (has_encoding() && layers.front().in_dim() != 2 * encoding.rows())
    throw std::invalid_argument("ParamSet: L0 input does not match encoding width");
  for (std::size_t i = 1; i < layers.size(); ++i)
    if (layers[i].in_dim() != layers[i - 1].out_dim())
      throw std::invalid_argument("ParamSet: layer " + std::to_string(i) +
                                  " does not compose with its predecessor");
  if (!encoding.allFinite())
    throw std::invalid_argument("ParamSet: non-finite encoding entry");
}

bool operator==(const ParamSet& a, const ParamSet& b) {
  if (a.layers.size() != b.layers.size()) return false;
  if (a.encoding.rows() != b.encoding.rows() || a.encoding.cols() != b.encoding.cols())
    return false;
  if (a.encoding != b.encoding) return false;
  for (std::size_t i = 0; i < a.layers.size(); ++i) {
    const auto& x = a.layers[i];
    const auto& y = b.layers[i];
    if (x.activation != y.activation || x.omega0 != y.omega0) return false;
    if (x.weights.rows() != y.weights.rows() || x.weights.cols() != y.weights.cols())
      return false;
    if (x.weights != y.weights || x.bias != y.bias) return false;
  }
  return true;
}

LayerSet::LayerSet(std::initializer_list<std::size_t> indices)
    : LayerSet(std::vector<std::size_t>(indices)) {}

LayerSet::LayerSet(std::vector<std::size_t> indices) : indices_(std::move(indices)) {
  std::sort(indices_.begin(), indices_.end());
  indices_.erase(std::unique(indices_.begin(), indices_.end()), indices_.end());
}

LayerSet LayerSet::all(std::size_t layer_count) {
  std::vector<std::size_t> idx(layer_count);
  for (std::size_t i = 0; i < layer_count; ++i) idx[i] = i;
  return LayerSet(std::move(idx));
}

bool LayerSet::contains(std::size_t index) const {
  return std::binary_search(indices_.begin(), indices_.end(), index);
}

void LayerSet::insert(std::size_t index) {
  auto it = std::lower_bound(indices_.begin(), indices_.end(), index);
  if (it == indices_.end() || *it != index) indices_.insert(it, index);
}

Eigen::VectorXd layer_forward(const DenseLayer& layer, const Eigen::VectorXd& x) {
  if (x.size() != layer.in_dim())
    throw std::invalid_argument("layer_forward: input length " +
                                std::to_string(x.size()) + " != in_dim " +
                                std::to_string(layer.in_dim()));
  return layer_forward_batch(layer, x);
}

Eigen::MatrixXd layer_forward_batch(const DenseLayer& layer,
                                    const Eigen::MatrixXd& inputs) {
  if (inputs.rows() != layer.in_dim())
    throw std::invalid_argument("layer_forward: input rows " +
                                std::to_string(inputs.rows()) + " != in_dim " +
                                std::to_string(layer.in_dim()));
  Eigen::MatrixXd z(layer.out_dim(), inputs.cols());
  z.noalias() = layer.weights * inputs;
  z.colwise() += layer.bias;
  Eigen::MatrixXd out;
  apply_activation(layer, z, out);
  return out;
}

Eigen::MatrixXd encode_inputs(const ParamSet& model, const Eigen::MatrixXd& coords) {
  if (coords.rows() != model.input_dim())
    throw std::invalid_argument("encode_inputs: coordinate dimension mismatch");
  if (!model.has_encoding()) return coords;
  const Eigen::Index m = model.encoding.rows();
  Eigen::MatrixXd projected = model.encoding * coords;  // m x P
  Eigen::MatrixXd out(2 * m, coords.cols());
  Eigen::MatrixXd s(m, coords.cols()), c(m, coords.cols());
  kernels::sin_cos_2pi(projected.data(), s.data(), c.data(),
                       static_cast<std::size_t>(projected.size()));
  out.topRows(m) = s;
  out.bottomRows(m) = c;
  return out;
}

void check_composable(const ParamSet& model, const LayerSet& active) {
  if (model.layers.empty()) throw std::invalid_argument("forward: empty model");
  if (active.empty() || active.indices().front() != 0 ||
      active.indices().back() != model.output_index())
    throw std::invalid_argument(
        "forward: active set must start at L0 and end at the output layer");
  Eigen::Index dim = model.layers.front().in_dim();
  for (std::size_t idx : active) {
    const auto& layer = model.layers[idx];
    if (layer.in_dim() != dim)
      throw std::invalid_argument("forward: active layer " + std::to_string(idx) +
                                  " expects " + std::to_string(layer.in_dim()) +
                                  " inputs but receives " + std::to_string(dim));
    dim = layer.out_dim();
  }
}

Eigen::VectorXd forward(const ParamSet& model, const Eigen::VectorXd& x,
                        const LayerSet& active) {
  return forward_batch(model, x, active);
}

Eigen::VectorXd forward(const ParamSet& model, const Eigen::VectorXd& x) {
  return forward(model, x, LayerSet::all(model.layer_count()));
}

Eigen::MatrixXd forward_batch(const ParamSet& model, const Eigen::MatrixXd& coords,
                              const LayerSet& active) {
  check_composable(model, active);
  Eigen::MatrixXd h = encode_inputs(model, coords);
  for (std::size_t idx : active) h = layer_forward_batch(model.layers[idx], h);
  return h;
}

Eigen::MatrixXd forward_batch(const ParamSet& model, const Eigen::MatrixXd& coords) {
  return forward_batch(model, coords, LayerSet::all(model.layer_count()));
}

LossGradient backward(const ParamSet& model, const Eigen::MatrixXd& coords,
                      const Eigen::MatrixXd& targets, const LayerSet& active,
                      const LayerSet& trainable, BackwardWorkspace& ws) {
  check_composable(model, active);
  if (coords.cols() == 0) throw std::invalid_argument("backward: empty batch");
  if (targets.rows() != model.output_dim() || targets.cols() != coords.cols())
    throw std::invalid_argument("backward: target shape mismatch");
  for (std::size_t idx : trainable)
    if (!active.contains(idx))
      throw std::invalid_argument("backward: trainable layer " + std::to_string(idx) +
                                  " is not on the active path");

  const auto& path = active.indices();
  const std::size_t depth = path.size();
  const Eigen::Index batch = coords.cols();

  // inputs[k] feeds path[k]; pre[k] is its pre-activation.
  ws.inputs_.resize(depth + 1);
  ws.pre_.resize(depth);
  auto same = [](const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    return a.rows() == b.rows() && a.cols() == b.cols() && a == b;
  };
  if (!same(ws.encoded_coords_, coords) || !same(ws.encoded_b_, model.encoding) ||
      ws.inputs_[0].cols() != batch) {
    ws.inputs_[0] = encode_inputs(model, coords);
    ws.encoded_coords_ = coords;
    ws.encoded_b_ = model.encoding;
  }
  for (std::size_t k = 0; k < depth; ++k) {
    const auto& layer = model.layers[path[k]];
    ws.pre_[k].resize(layer.out_dim(), batch);
    ws.pre_[k].noalias() = layer.weights * ws.inputs_[k];
    ws.pre_[k].colwise() += layer.bias;
    apply_activation(layer, ws.pre_[k], ws.inputs_[k + 1]);
  }

  LossGradient result;
  result.gradient = model.zeros_like();
  result.gradient.encoding.resize(0, 0);

  Eigen::MatrixXd& upstream = ws.upstream_;
  upstream.resize(model.output_dim(), batch);
  upstream.noalias() = ws.inputs_[depth] - targets;
  result.loss = upstream.squaredNorm();
  upstream *= 2.0;

  // Position of the lowest trainable layer on the path; nothing below it
  // needs a gradient.
  std::size_t lowest = depth;
  for (std::size_t k = 0; k < depth; ++k)
    if (trainable.contains(path[k])) {
      lowest = k;
      break;
    }
  if (lowest == depth) return result;

  for (std::size_t k = depth; k-- > lowest;) {
    const auto& layer = model.layers[path[k]];
    activation_backward(layer, ws.pre_[k], upstream);
    if (trainable.contains(path[k])) {
      auto& g = result.gradient.layers[path[k]];
      g.weights.noalias() = upstream * ws.inputs_[k].transpose();
      g.bias = upstream.rowwise().sum();
    }
    if (k > lowest) {
      ws.scratch_.resize(layer.in_dim(), batch);
      ws.scratch_.noalias() = layer.weights.transpose() * upstream;
      upstream.swap(ws.scratch_);
    }
  }
  return result;
}

LossGradient backward(const ParamSet& model, const Eigen::MatrixXd& coords,
                      const Eigen::MatrixXd& targets, const LayerSet& active,
                      const LayerSet& trainable) {
  BackwardWorkspace ws;
  return backward(model, coords, targets, active, trainable, ws);
}

LossGradient backward(const ParamSet& model, const Eigen::MatrixXd& coords,
                      const Eigen::MatrixXd& targets, const LayerSet& active) {
  return backward(model, coords, targets, active, active);
}

AdamState AdamState::for_model(const ParamSet& model, const AdamConfig& config) {
  AdamState s;
  s.config = config;
  s.first_moment = model.zeros_like();
  s.second_moment = model.zeros_like();
  s.first_moment.encoding.resize(0, 0);
  s.second_moment.encoding.resize(0, 0);
  return s;
}

void adam_step(ParamSet& params, const ParamSet& grads, AdamState& state,
               const LayerSet& trainable) {
  if (grads.layers.size() != params.layers.size() ||
      state.first_moment.layers.size() != params.layers.size())
    throw std::invalid_argument("adam_step: layer count mismatch");
  for (std::size_t idx : trainable) {
    const auto& g = grads.layers.at(idx);
    const auto& p = params.layers.at(idx);
    if (g.weights.rows() != p.weights.rows() || g.weights.cols() != p.weights.cols() ||
        g.bias.size() != p.bias.size())
      throw std::invalid_argument("adam_step: gradient shape mismatch in layer " +
                                  std::to_string(idx));
    if (!all_finite(g.weights) || !g.bias.allFinite())
      throw TrainingError("non-finite gradient in layer " + std::to_string(idx),
                          state.step);
  }

  const auto& c = state.config;
  state.step += 1;
  const double t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(c.beta1, t);
  const double correction2 = 1.0 - std::pow(c.beta2, t);

  auto update = [&](auto& param, const auto& grad, auto& m, auto& v) {
    m = c.beta1 * m + (1.0 - c.beta1) * grad;
    v = c.beta2 * v + (1.0 - c.beta2) * grad.cwiseProduct(grad);
    param.array() -= c.learning_rate * (m.array() / correction1) /
                     ((v.array() / correction2).sqrt() + c.epsilon);
  };

  for (std::size_t idx : trainable) {
    auto& p = params.layers[idx];
    const auto& g = grads.layers[idx];
    auto& m = state.first_moment.layers[idx];
    auto& v = state.second_moment.layers[idx];
    update(p.weights, g.weights, m.weights, v.weights);
    update(p.bias, g.bias, m.bias, v.bias);
  }
}

}  // namespace spinr
