#include "spinr/metrics.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace spinr {

double mse(const Image& a, const Image& b) {
  if (!a.same_shape(b)) throw std::invalid_argument("mse: shape mismatch");
  double sum = 0.0;
  const auto& x = a.samples();
  const auto& y = b.samples();
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = x[i] - y[i];
    sum += d * d;
  }
  return sum / static_cast<double>(x.size());
}

double psnr(const Image& a, const Image& b) {
  const double e = mse(a, b);
  if (e == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(1.0 / e);
}

namespace {

std::vector<double> gaussian_taps(int size, double sigma) {
  std::vector<double> taps(static_cast<std::size_t>(size));
  const double center = (size - 1) / 2.0;
  double total = 0.0;
  for (int i = 0; i < size; ++i) {
    const double d = i - center;
    taps[static_cast<std::size_t>(i)] = std::exp(-(d * d) / (2.0 * sigma * sigma));
    total += taps[static_cast<std::size_t>(i)];
  }
  for (double& t : taps) t /= total;
  return taps;
}

// Valid-mode separable filter of one H x W plane.
Eigen::MatrixXd filter_valid(const Eigen::MatrixXd& plane, const std::vector<double>& taps) {
  const Eigen::Index k = static_cast<Eigen::Index>(taps.size());
  const Eigen::Index out_rows = plane.rows() - k + 1;
  const Eigen::Index out_cols = plane.cols() - k + 1;
  Eigen::MatrixXd rows_done = Eigen::MatrixXd::Zero(plane.rows(), out_cols);
  for (Eigen::Index t = 0; t < k; ++t)
    rows_done += taps[static_cast<std::size_t>(t)] * plane.middleCols(t, out_cols);
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(out_rows, out_cols);
  for (Eigen::Index t = 0; t < k; ++t)
    out += taps[static_cast<std::size_t>(t)] * rows_done.middleRows(t, out_rows);
  return out;
}

Eigen::MatrixXd channel_plane(const Image& img, int channel) {
  Eigen::MatrixXd plane(img.height(), img.width());
  for (int r = 0; r < img.height(); ++r)
    for (int c = 0; c < img.width(); ++c) plane(r, c) = img.at(r, c, channel);
  return plane;
}

}  // namespace

double ssim(const Image& a, const Image& b, const SsimOptions& options) {
  if (!a.same_shape(b)) throw std::invalid_argument("ssim: shape mismatch");
  if (a.height() < options.window || a.width() < options.window)
    throw std::invalid_argument("ssim: image smaller than the " +
                                std::to_string(options.window) + "x" +
                                std::to_string(options.window) + " window");
  const auto taps = gaussian_taps(options.window, options.sigma);
  const double c1 = std::pow(options.k1 * options.data_range, 2);
  const double c2 = std::pow(options.k2 * options.data_range, 2);

  double total = 0.0;
  Eigen::Index positions = 0;
  for (int ch = 0; ch < Image::kChannels; ++ch) {
    const Eigen::MatrixXd x = channel_plane(a, ch);
    const Eigen::MatrixXd y = channel_plane(b, ch);
    const Eigen::MatrixXd mu_x = filter_valid(x, taps);
    const Eigen::MatrixXd mu_y = filter_valid(y, taps);
    const Eigen::MatrixXd xx = filter_valid(x.cwiseProduct(x), taps);
    const Eigen::MatrixXd yy = filter_valid(y.cwiseProduct(y), taps);
    const Eigen::MatrixXd xy = filter_valid(x.cwiseProduct(y), taps);

    const auto mx = mu_x.array();
    const auto my = mu_y.array();
    const auto var_x = xx.array() - mx * mx;
    const auto var_y = yy.array() - my * my;
    const auto cov = xy.array() - mx * my;
    const Eigen::ArrayXXd map = ((2.0 * mx * my + c1) * (2.0 * cov + c2)) /
                                ((mx * mx + my * my + c1) * (var_x + var_y + c2));
    total += map.sum();
    positions += map.size();
  }
  return total / static_cast<double>(positions);
}

std::optional<double> ssim_if_defined(const Image& a, const Image& b) {
  const SsimOptions defaults;
  if (a.height() < defaults.window || a.width() < defaults.window) return std::nullopt;
  return ssim(a, b, defaults);
}

std::size_t raw_image_bytes(int height, int width) {
  if (height < 1 || width < 1) throw std::invalid_argument("raw_image_bytes: empty image");
  return static_cast<std::size_t>(height) * static_cast<std::size_t>(width) * 3;
}

double compression_factor(std::size_t image_bytes, std::size_t model_bytes) {
  if (image_bytes == 0 || model_bytes == 0)
    throw std::invalid_argument("compression_factor: sizes must be positive");
  return static_cast<double>(image_bytes) / static_cast<double>(model_bytes);
}

Fidelity evaluate(const Image& render, const Image& target) {
  const Image shown = render.clamped();
  return {psnr(shown, target), ssim_if_defined(shown, target)};
}

MetricSummary summarize(std::span<const double> values) {
  if (values.empty()) throw std::invalid_argument("summarize: no values");
  MetricSummary s;
  double sum = 0.0;
  for (double v : values) {
    if (std::isinf(v)) {
      ++s.excluded;
      continue;
    }
    sum += v;
    ++s.count;
  }
  if (s.count == 0) return s;
  s.mean = sum / static_cast<double>(s.count);
  double sq = 0.0;
  for (double v : values)
    if (!std::isinf(v)) sq += (v - s.mean) * (v - s.mean);
  s.std_population = std::sqrt(sq / static_cast<double>(s.count));
  s.std_sample = s.count > 1 ? std::sqrt(sq / static_cast<double>(s.count - 1)) : 0.0;
  return s;
}

AggregateReport aggregate(std::span<const TrialReport> reports) {
  if (reports.empty()) throw std::invalid_argument("aggregate: no reports");
  AggregateReport out;
  out.method = reports.front().method;
  out.runs = reports.size();
  std::vector<double> psnrs, ssims, cfs;
  std::map<std::string, std::vector<double>> attack_means;
  for (const auto& r : reports) {
    if (r.method != out.method)
      throw std::invalid_argument("aggregate: mixed methods '" + out.method + "' and '" +
                                  r.method + "'");
    psnrs.push_back(r.psnr);
    if (r.ssim) ssims.push_back(*r.ssim);
    cfs.push_back(r.cf);
    for (const auto& [label, attack] : r.attacks)
      if (!attack.psnr.empty()) attack_means[label].push_back(summarize(attack.psnr).mean);
  }
  out.psnr = summarize(psnrs);
  if (!ssims.empty()) out.ssim = summarize(ssims);
  out.cf = summarize(cfs);
  for (const auto& [label, means] : attack_means) out.attacks[label] = summarize(means);
  return out;
}

}  // namespace spinr
