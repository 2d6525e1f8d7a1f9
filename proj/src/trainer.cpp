#include "spinr/trainer.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "spinr/errors.hpp"

namespace spinr {

double default_learning_rate(Family family) {
  return family == Family::kFourier ? 1e-3 : 1e-4;
}

double TrainConfig::resolved_learning_rate(Family family) const {
  return learning_rate > 0.0 ? learning_rate : default_learning_rate(family);
}

void TrainConfig::validate() const {
  if (total_steps < 0) throw std::invalid_argument("TrainConfig: total_steps must be >= 0");
  if (eval_every < 0) throw std::invalid_argument("TrainConfig: eval_every must be >= 0");
}

StageSchedule::StageSchedule(std::vector<Stage> stages) : stages_(std::move(stages)) {}

StageSchedule StageSchedule::equal_split(const ModelSpec& spec, int total_steps) {
  spec.validate();
  if (total_steps < 0) throw std::invalid_argument("StageSchedule: negative step budget");
  const int count = spec.hidden_layers + 1;
  const int per_stage = total_steps / count;
  const std::size_t out = spec.output_index();

  std::vector<Stage> stages;
  LayerSet active{0, out};
  for (int s = 1; s <= count; ++s) {
    Stage stage;
    if (s == 1) {
      stage.trainable = active;
    } else {
      active.insert(static_cast<std::size_t>(s - 1));
      stage.trainable = LayerSet{static_cast<std::size_t>(s - 1)};
    }
    stage.active = active;
    stage.steps = per_stage + (s == count ? total_steps - per_stage * count : 0);
    stages.push_back(std::move(stage));
  }
  return StageSchedule(std::move(stages));
}

int StageSchedule::total_steps() const {
  int total = 0;
  for (const auto& s : stages_) total += s.steps;
  return total;
}

void StageSchedule::validate(const ModelSpec& spec) const {
  if (stages_.empty()) throw std::invalid_argument("StageSchedule: no stages");
  const std::size_t out = spec.output_index();
  std::vector<int> trained(spec.layer_count(), 0);
  for (std::size_t i = 0; i < stages_.size(); ++i) {
    const auto& st = stages_[i];
    if (st.steps < 0) throw std::invalid_argument("StageSchedule: negative stage budget");
    if (st.active.empty() || st.active.indices().front() != 0 ||
        st.active.indices().back() != out)
      throw std::invalid_argument("StageSchedule: stage " + std::to_string(i + 1) +
                                  " path must run from L0 to the output layer");
    for (std::size_t idx : st.trainable) {
      if (!st.active.contains(idx))
        throw std::invalid_argument("StageSchedule: stage " + std::to_string(i + 1) +
                                    " trains an inactive layer");
      if (idx >= trained.size())
        throw std::invalid_argument("StageSchedule: layer index out of range");
      ++trained[idx];
    }
  }
  for (std::size_t idx = 1; idx < out; ++idx)
    if (trained[idx] != 1)
      throw std::invalid_argument("StageSchedule: hidden layer " + std::to_string(idx) +
                                  " must be trained in exactly one stage");
}

L2Loss l2_loss(const Eigen::MatrixXd& prediction, const Eigen::MatrixXd& target) {
  if (prediction.rows() != target.rows() || prediction.cols() != target.cols())
    throw std::invalid_argument("l2_loss: shape mismatch");
  L2Loss out;
  out.gradient = prediction - target;
  out.loss = out.gradient.squaredNorm();
  out.gradient *= 2.0;
  return out;
}

L2Loss l2_loss(const Image& prediction, const Image& target) {
  if (!prediction.same_shape(target)) throw std::invalid_argument("l2_loss: shape mismatch");
  return l2_loss(Eigen::MatrixXd(prediction.pixels()), Eigen::MatrixXd(target.pixels()));
}

namespace {

// Runs `steps` Adam updates on `trainable` through `active`, appending
// per-step losses. `step_offset` keeps step indices global across stages.
void optimize(ParamSet& model, const Eigen::MatrixXd& coords, const Eigen::MatrixXd& targets,
              const LayerSet& active, const LayerSet& trainable, int steps,
              const AdamConfig& adam, const TrainConfig& config, std::vector<double>& curve) {
  AdamState state = AdamState::for_model(model, adam);
  BackwardWorkspace workspace;
  for (int i = 0; i < steps; ++i) {
    const std::size_t step = curve.size();
    LossGradient lg = backward(model, coords, targets, active, trainable, workspace);
    if (!std::isfinite(lg.loss)) throw TrainingError("non-finite loss", step);
    curve.push_back(lg.loss);
    if (config.eval_every > 0 && config.on_eval &&
        (step % static_cast<std::size_t>(config.eval_every) == 0))
      config.on_eval(static_cast<int>(step), lg.loss);
    try {
      adam_step(model, lg.gradient, state, trainable);
    } catch (const TrainingError&) {
      throw TrainingError("non-finite gradient", step);
    }
  }
}

}  // namespace

FitResult fit(ParamSet initial, const Image& image, const TrainConfig& config) {
  config.validate();
  initial.validate();
  const CoordGrid grid(image.height(), image.width());
  const Eigen::MatrixXd targets = image.pixels();
  const Family family = initial.has_encoding() ? Family::kFourier : Family::kSiren;
  AdamConfig adam;
  adam.learning_rate = config.resolved_learning_rate(family);

  FitResult result{std::move(initial), {}};
  result.loss_curve.reserve(static_cast<std::size_t>(config.total_steps));
  const LayerSet all = LayerSet::all(result.model.layer_count());
  optimize(result.model, grid.coords(), targets, all, all, config.total_steps, adam, config,
           result.loss_curve);
  return result;
}

FitResult fit(const ModelSpec& spec, const Image& image, const TrainConfig& config) {
  return fit(build_model(spec, config.seed), image, config);
}

SpinrResult fit_spinr(const ModelSpec& spec, const Image& image, const TrainConfig& config,
                      const StageSchedule& schedule) {
  config.validate();
  schedule.validate(spec);
  const CoordGrid grid(image.height(), image.width());
  const Eigen::MatrixXd targets = image.pixels();
  AdamConfig adam;
  adam.learning_rate = config.resolved_learning_rate(spec.family);

  SpinrResult result;
  result.model = build_model(spec, config.seed);
  result.loss_curve.reserve(static_cast<std::size_t>(schedule.total_steps()));
  for (const Stage& stage : schedule.stages()) {
    optimize(result.model, grid.coords(), targets, stage.active, stage.trainable, stage.steps,
             adam, config, result.loss_curve);
    result.stage_renders.push_back(render(result.model, grid, stage.active));
    result.stage_active.push_back(stage.active);
  }
  return result;
}

SpinrResult fit_spinr(const ModelSpec& spec, const Image& image, const TrainConfig& config) {
  return fit_spinr(spec, image, config, StageSchedule::equal_split(spec, config.total_steps));
}

}  // namespace spinr
