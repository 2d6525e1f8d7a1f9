#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "spinr/image.hpp"
#include "spinr/models.hpp"
#include "spinr/nn.hpp"

namespace spinr {

/// Family-specific constant learning rate used when TrainConfig leaves it
/// unset: 1e-4 for siren, 1e-3 for fourier.
double default_learning_rate(Family family);

struct TrainConfig {
  int total_steps = 2000;
  double learning_rate = 0.0;  // <= 0 selects default_learning_rate()
  std::uint64_t seed = 0;
  int eval_every = 0;          // 0 disables the progress callback
  std::function<void(int step, double loss)> on_eval;

  double resolved_learning_rate(Family family) const;
  void validate() const;
};

/// One SPINR stage: which layers are optimized, which layers form the
/// forward path, and for how many steps.
struct Stage {
  LayerSet trainable;
  LayerSet active;
  int steps = 0;
};

class StageSchedule {
 public:
  /// n + 1 stages. Stage 1 trains {L0, L_out} through that two-layer path;
  /// stage s > 1 trains L_{s-1} through {L0..L_{s-1}, L_out}. Each stage
  /// gets total_steps / (n + 1) steps, the remainder going to the last.
  static StageSchedule equal_split(const ModelSpec& spec, int total_steps);

  explicit StageSchedule(std::vector<Stage> stages);

  const std::vector<Stage>& stages() const { return stages_; }
  std::size_t size() const { return stages_.size(); }
  int total_steps() const;

  /// Every hidden layer must be trained in exactly one stage, each active
  /// path must be composable, and trainable layers must be active.
  void validate(const ModelSpec& spec) const;

 private:
  std::vector<Stage> stages_;
};

struct L2Loss {
  double loss = 0.0;
  Eigen::MatrixXd gradient;  // 2 (prediction - target), same shape
};

/// Sum over pixels and channels of the squared error.
L2Loss l2_loss(const Eigen::MatrixXd& prediction, const Eigen::MatrixXd& target);
L2Loss l2_loss(const Image& prediction, const Image& target);

struct FitResult {
  ParamSet model;
  std::vector<double> loss_curve;  // loss before each update
};

/// Trains all layers of a freshly initialized model for total_steps
/// full-batch Adam steps. B is never trained.
FitResult fit(const ModelSpec& spec, const Image& image, const TrainConfig& config);

/// As above, starting from the given parameters.
FitResult fit(ParamSet initial, const Image& image, const TrainConfig& config);

struct SpinrResult {
  ParamSet model;
  std::vector<double> loss_curve;
  std::vector<Image> stage_renders;  // raw render after each stage
  std::vector<LayerSet> stage_active;
};

/// Multi-stage progressive training. The optimizer state is reset at the
/// start of every stage.
SpinrResult fit_spinr(const ModelSpec& spec, const Image& image, const TrainConfig& config,
                      const StageSchedule& schedule);
SpinrResult fit_spinr(const ModelSpec& spec, const Image& image, const TrainConfig& config);

}  // namespace spinr
