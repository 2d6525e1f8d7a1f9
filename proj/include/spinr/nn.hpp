#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <vector>

#include <Eigen/Dense>

namespace spinr {

enum class Activation : std::uint8_t { kSine, kRelu, kIdentity };

/// One affine map followed by a pointwise nonlinearity:
/// y = act(W x + b), where the sine activation is sin(omega0 * z).
struct DenseLayer {
  Eigen::MatrixXd weights;  // out_dim x in_dim
  Eigen::VectorXd bias;     // out_dim
  Activation activation = Activation::kIdentity;
  double omega0 = 30.0;

  DenseLayer() = default;
  DenseLayer(Eigen::Index in_dim, Eigen::Index out_dim, Activation act,
             double omega0 = 30.0);

  Eigen::Index in_dim() const { return weights.cols(); }
  Eigen::Index out_dim() const { return weights.rows(); }
  std::size_t param_count() const {
    return static_cast<std::size_t>(weights.size() + bias.size());
  }

  /// Throws std::invalid_argument when shapes disagree, omega0 is not
  /// positive for a sine layer, or any entry is non-finite.
  void validate() const;
};

/// The full parameter set theta of a coordinate network: layers L0..L_out
/// plus, for Fourier-feature models, the frozen encoding matrix B (m x 2).
struct ParamSet {
  std::vector<DenseLayer> layers;
  Eigen::MatrixXd encoding;

  bool has_encoding() const { return encoding.size() > 0; }
  std::size_t layer_count() const { return layers.size(); }
  std::size_t output_index() const { return layers.size() - 1; }

  /// Dimension of the raw coordinate fed to the network.
  Eigen::Index input_dim() const;
  Eigen::Index output_dim() const { return layers.back().out_dim(); }

  /// Sum of out*(in+1) over layers, plus the entries of B.
  std::size_t param_count() const;
  /// param_count() without B.
  std::size_t trainable_param_count() const;

  /// A zero-filled copy with identical shapes and activations.
  ParamSet zeros_like() const;

  void validate() const;

  friend bool operator==(const ParamSet& a, const ParamSet& b);
};

/// Sorted set of layer indices, used both for the forward path (active set)
/// and for the layers an optimizer may touch (trainable set).
class LayerSet {
 public:
  LayerSet() = default;
  LayerSet(std::initializer_list<std::size_t> indices);
  explicit LayerSet(std::vector<std::size_t> indices);

  static LayerSet all(std::size_t layer_count);

  bool contains(std::size_t index) const;
  void insert(std::size_t index);
  bool empty() const { return indices_.empty(); }
  std::size_t size() const { return indices_.size(); }
  const std::vector<std::size_t>& indices() const { return indices_; }
  auto begin() const { return indices_.begin(); }
  auto end() const { return indices_.end(); }

  friend bool operator==(const LayerSet&, const LayerSet&) = default;

 private:
  std::vector<std::size_t> indices_;
};

/// y = act(W x + b) for a single input vector.
Eigen::VectorXd layer_forward(const DenseLayer& layer, const Eigen::VectorXd& x);

/// Batched layer_forward; each column of `inputs` is one sample.
Eigen::MatrixXd layer_forward_batch(const DenseLayer& layer,
                                    const Eigen::MatrixXd& inputs);

/// Applies the model's input encoding (identity when there is none).
/// `coords` is 2 x P.
Eigen::MatrixXd encode_inputs(const ParamSet& model, const Eigen::MatrixXd& coords);

/// Checks that `active` starts at L0, ends at the output layer, and that the
/// dimensions of consecutive active layers compose.
void check_composable(const ParamSet& model, const LayerSet& active);

/// Composes the active layers in ascending index order.
Eigen::VectorXd forward(const ParamSet& model, const Eigen::VectorXd& x,
                        const LayerSet& active);
Eigen::VectorXd forward(const ParamSet& model, const Eigen::VectorXd& x);

/// Batched forward; `coords` is 2 x P, result is out_dim x P.
Eigen::MatrixXd forward_batch(const ParamSet& model, const Eigen::MatrixXd& coords,
                              const LayerSet& active);
Eigen::MatrixXd forward_batch(const ParamSet& model, const Eigen::MatrixXd& coords);

struct LossGradient {
  double loss = 0.0;
  ParamSet gradient;  // shaped like the model, no encoding
};

/// Activation buffers reused across backward() calls with the same batch
/// shape, so a training loop does not reallocate them every step.
class BackwardWorkspace {
 public:
  BackwardWorkspace() = default;

 private:
  friend LossGradient backward(const ParamSet&, const Eigen::MatrixXd&, const Eigen::MatrixXd&,
                               const LayerSet&, const LayerSet&, BackwardWorkspace&);
  std::vector<Eigen::MatrixXd> inputs_;
  std::vector<Eigen::MatrixXd> pre_;
  Eigen::MatrixXd upstream_;
  Eigen::MatrixXd scratch_;
  // Encoded batch, valid while the coordinates and B it came from match.
  Eigen::MatrixXd encoded_coords_;
  Eigen::MatrixXd encoded_b_;
};

/// Sum-of-squares loss sum ||prediction - target||^2 over the batch and its
/// exact gradient for every layer in `trainable`. Gradients of layers
/// outside `trainable` are zero. `trainable` must be a subset of `active`.
LossGradient backward(const ParamSet& model, const Eigen::MatrixXd& coords,
                      const Eigen::MatrixXd& targets, const LayerSet& active,
                      const LayerSet& trainable, BackwardWorkspace& workspace);
LossGradient backward(const ParamSet& model, const Eigen::MatrixXd& coords,
                      const Eigen::MatrixXd& targets, const LayerSet& active,
                      const LayerSet& trainable);
LossGradient backward(const ParamSet& model, const Eigen::MatrixXd& coords,
                      const Eigen::MatrixXd& targets, const LayerSet& active);

struct AdamConfig {
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  AdamConfig config;
  ParamSet first_moment;
  ParamSet second_moment;
  std::uint64_t step = 0;

  static AdamState for_model(const ParamSet& model, const AdamConfig& config);
};

/// One bias-corrected Adam update of the layers in `trainable`. Layers
/// outside it are not read or written. Throws TrainingError (carrying the
/// optimizer step) on a non-finite gradient.
void adam_step(ParamSet& params, const ParamSet& grads, AdamState& state,
               const LayerSet& trainable);

}  // namespace spinr
