#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "spinr/image.hpp"

namespace spinr {

/// 10 log10(1 / MSE) with peak 1.0; +inf for identical images.
double psnr(const Image& a, const Image& b);

/// Mean squared error over all pixels and channels.
double mse(const Image& a, const Image& b);

struct SsimOptions {
  int window = 11;
  double sigma = 1.5;
  double k1 = 0.01;
  double k2 = 0.03;
  double data_range = 1.0;
};

/// Mean structural similarity over every fully contained window position
/// (no padding), per channel, averaged over channels and positions.
double ssim(const Image& a, const Image& b, const SsimOptions& options = {});

/// ssim() when the image is at least one window large, nullopt otherwise.
std::optional<double> ssim_if_defined(const Image& a, const Image& b);

/// H * W * 3, the size of the raw 8-bit image.
std::size_t raw_image_bytes(int height, int width);

/// image_bytes / model_bytes.
double compression_factor(std::size_t image_bytes, std::size_t model_bytes);

/// Clamps `render` to [0,1] and scores it against `target`.
struct Fidelity {
  double psnr = 0.0;
  std::optional<double> ssim;
};
Fidelity evaluate(const Image& render, const Image& target);

struct AttackSummary {
  std::vector<double> psnr;  // per trial
  std::vector<double> ssim;  // per trial; empty when undefined
};

struct TrialReport {
  std::string method;
  std::uint64_t seed = 0;
  std::size_t param_count = 0;
  double psnr = 0.0;
  std::optional<double> ssim;
  double cf = 0.0;
  std::map<std::string, AttackSummary> attacks;  // keyed by attack label
};

struct MetricSummary {
  double mean = std::numeric_limits<double>::quiet_NaN();
  double std_sample = 0.0;      // n - 1 denominator, 0 when n == 1
  double std_population = 0.0;  // n denominator
  std::size_t count = 0;        // finite values used
  std::size_t excluded = 0;     // infinite values left out
};

/// Mean and spread of the finite values; infinities are counted in
/// `excluded`. Throws on an empty input.
MetricSummary summarize(std::span<const double> values);

struct AggregateReport {
  std::string method;
  std::size_t runs = 0;
  MetricSummary psnr;
  MetricSummary ssim;
  MetricSummary cf;
  std::map<std::string, MetricSummary> attacks;  // mean trial PSNR per run
};

/// Requires a nonempty list of reports sharing one method id.
AggregateReport aggregate(std::span<const TrialReport> reports);

}  // namespace spinr
