#include "spinr/robustness.hpp"

#include <algorithm>
#include <cstdio>
#include <stdexcept>

#include "spinr/models.hpp"

namespace spinr {

AttackSpec AttackSpec::param_noise(double sigma, int trials, std::uint64_t seed) {
  AttackSpec a;
  a.kind = Kind::kParamNoise;
  a.sigma = sigma;
  a.trials = trials;
  a.seed = seed;
  return a;
}

AttackSpec AttackSpec::lose_neurons(std::size_t k, int trials, std::uint64_t seed) {
  AttackSpec a;
  a.kind = Kind::kLoseNeurons;
  a.neurons = k;
  a.trials = trials;
  a.seed = seed;
  return a;
}

AttackSpec AttackSpec::corrupt_layer(std::size_t index, std::uint64_t seed) {
  AttackSpec a;
  a.kind = Kind::kCorruptLayer;
  a.layer = index;
  a.trials = 1;
  a.seed = seed;
  return a;
}

std::string AttackSpec::label() const {
  char buf[64];
  switch (kind) {
    case Kind::kParamNoise:
      std::snprintf(buf, sizeof buf, "noise@%.0e", sigma);
      return buf;
    case Kind::kLoseNeurons:
      return "L@" + std::to_string(neurons);
    case Kind::kCorruptLayer:
      return "corrupt@L" + std::to_string(layer);
  }
  return "unknown";
}

void AttackSpec::validate(const ParamSet& model) const {
  if (trials < 1) throw std::invalid_argument("AttackSpec: trials must be >= 1");
  switch (kind) {
    case Kind::kParamNoise:
      if (!(sigma >= 0.0)) throw std::invalid_argument("AttackSpec: sigma must be >= 0");
      break;
    case Kind::kLoseNeurons:
      if (neurons > hidden_neuron_count(model))
        throw std::invalid_argument("AttackSpec: cannot lose " + std::to_string(neurons) +
                                    " of " + std::to_string(hidden_neuron_count(model)) +
                                    " hidden neurons");
      break;
    case Kind::kCorruptLayer:
      if (layer >= model.layer_count())
        throw std::invalid_argument("AttackSpec: no layer " + std::to_string(layer));
      break;
  }
}

ParamSet add_param_noise(const ParamSet& model, double sigma, Rng& rng) {
  if (!(sigma >= 0.0)) throw std::invalid_argument("add_param_noise: sigma must be >= 0");
  ParamSet out = model;
  if (sigma == 0.0) return out;
  for (auto& layer : out.layers) {
    for (Eigen::Index i = 0; i < layer.weights.size(); ++i)
      layer.weights.data()[i] += rng.normal(0.0, sigma);
    for (Eigen::Index i = 0; i < layer.bias.size(); ++i) layer.bias[i] += rng.normal(0.0, sigma);
  }
  return out;
}

std::size_t hidden_neuron_count(const ParamSet& model) {
  std::size_t n = 0;
  for (std::size_t i = 1; i + 1 < model.layers.size(); ++i)
    n += static_cast<std::size_t>(model.layers[i].out_dim());
  return n;
}

ParamSet lose_neurons(const ParamSet& model, std::size_t k, Rng& rng, NeuronLoss mode) {
  const std::size_t pool = hidden_neuron_count(model);
  if (k > pool)
    throw std::invalid_argument("lose_neurons: k=" + std::to_string(k) + " exceeds " +
                                std::to_string(pool) + " hidden neurons");
  ParamSet out = model;
  if (k == 0) return out;

  std::vector<std::size_t> ids(pool);
  for (std::size_t i = 0; i < pool; ++i) ids[i] = i;
  std::shuffle(ids.begin(), ids.end(), rng.engine());
  ids.resize(k);

  for (std::size_t id : ids) {
    std::size_t layer = 1;
    while (id >= static_cast<std::size_t>(out.layers[layer].out_dim())) {
      id -= static_cast<std::size_t>(out.layers[layer].out_dim());
      ++layer;
    }
    const auto unit = static_cast<Eigen::Index>(id);
    if (mode == NeuronLoss::kIncoming) {
      out.layers[layer].weights.row(unit).setZero();
      out.layers[layer].bias[unit] = 0.0;
    } else {
      out.layers[layer + 1].weights.col(unit).setZero();
    }
  }
  return out;
}

ParamSet corrupt_layer(const ParamSet& model, std::size_t index) {
  if (index >= model.layers.size())
    throw std::invalid_argument("corrupt_layer: no layer " + std::to_string(index));
  ParamSet out = model;
  out.layers[index].weights.setZero();
  out.layers[index].bias.setZero();
  return out;
}

AttackSummary AttackResult::summary() const {
  AttackSummary s;
  for (const auto& t : trials) {
    s.psnr.push_back(t.psnr);
    if (t.ssim) s.ssim.push_back(*t.ssim);
  }
  return s;
}

AttackResult run_trials(const ParamSet& model, const Image& target, const AttackSpec& attack) {
  attack.validate(model);
  const CoordGrid grid(target.height(), target.width());
  AttackResult result;
  result.spec = attack;
  result.base = evaluate(render(model, grid), target);

  std::vector<double> psnrs, ssims;
  for (int t = 0; t < attack.trials; ++t) {
    Rng rng(attack.seed, RngStream::kAttack, static_cast<std::uint64_t>(t));
    ParamSet attacked;
    switch (attack.kind) {
      case AttackSpec::Kind::kParamNoise:
        attacked = add_param_noise(model, attack.sigma, rng);
        break;
      case AttackSpec::Kind::kLoseNeurons:
        attacked = lose_neurons(model, attack.neurons, rng, attack.neuron_loss);
        break;
      case AttackSpec::Kind::kCorruptLayer:
        attacked = corrupt_layer(model, attack.layer);
        break;
    }
    Fidelity f = evaluate(render(attacked, grid), target);
    psnrs.push_back(f.psnr);
    if (f.ssim) ssims.push_back(*f.ssim);
    result.trials.push_back(f);
  }
  result.psnr = summarize(psnrs);
  if (!ssims.empty()) result.ssim = summarize(ssims);
  return result;
}

}  // namespace spinr
