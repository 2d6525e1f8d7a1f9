#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "spinr/image.hpp"
#include "spinr/metrics.hpp"
#include "spinr/nn.hpp"
#include "spinr/rng.hpp"

namespace spinr {

/// How a lost neuron is silenced. kIncoming zeroes the unit's weight row
/// and bias so it emits act(0); kOutgoing zeroes the column that reads it
/// in the next layer.
enum class NeuronLoss { kIncoming, kOutgoing };

struct AttackSpec {
  enum class Kind { kParamNoise, kLoseNeurons, kCorruptLayer };

  Kind kind = Kind::kParamNoise;
  double sigma = 0.0;         // kParamNoise
  std::size_t neurons = 0;    // kLoseNeurons
  std::size_t layer = 0;      // kCorruptLayer
  int trials = 10;
  std::uint64_t seed = 0;
  NeuronLoss neuron_loss = NeuronLoss::kIncoming;

  static AttackSpec param_noise(double sigma, int trials = 10, std::uint64_t seed = 0);
  static AttackSpec lose_neurons(std::size_t k, int trials = 10, std::uint64_t seed = 0);
  static AttackSpec corrupt_layer(std::size_t index, std::uint64_t seed = 0);

  /// "noise@1e-04", "L@5", "corrupt@L2".
  std::string label() const;
  void validate(const ParamSet& model) const;
};

/// Copy of `model` with N(0, sigma^2) added to every weight and bias; the
/// encoding matrix is left alone.
ParamSet add_param_noise(const ParamSet& model, double sigma, Rng& rng);

/// Number of units in layers L1..Ln, the pool lose_neurons() samples from.
std::size_t hidden_neuron_count(const ParamSet& model);

/// Copy of `model` with k distinct hidden units, drawn uniformly from the
/// union of L1..Ln, silenced per `mode`.
ParamSet lose_neurons(const ParamSet& model, std::size_t k, Rng& rng,
                      NeuronLoss mode = NeuronLoss::kIncoming);

/// Copy of `model` with every weight and bias of one layer set to zero.
ParamSet corrupt_layer(const ParamSet& model, std::size_t index);

struct AttackResult {
  AttackSpec spec;
  Fidelity base;
  std::vector<Fidelity> trials;
  MetricSummary psnr;
  std::optional<MetricSummary> ssim;

  AttackSummary summary() const;
};

/// Applies `attack` spec.trials times, trial t drawing from substream t of
/// the attack stream for spec.seed, and scores each render against `target`.
AttackResult run_trials(const ParamSet& model, const Image& target, const AttackSpec& attack);

}  // namespace spinr
