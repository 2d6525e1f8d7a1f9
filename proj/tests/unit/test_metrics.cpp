#include <cmath>
#include <filesystem>
#include <limits>
#include <vector>

#include "doctest.h"
#include "oracles.hpp"
#include "spinr/image_io.hpp"
#include "spinr/metrics.hpp"
#include "spinr/rng.hpp"

using namespace spinr;

namespace {

Image random_image(int h, int w, std::uint64_t seed) {
  Rng rng(seed, RngStream::kTest);
  Image img(h, w);
  for (double& v : img.samples()) v = rng.uniform(0, 1);
  return img;
}

Image data_image(const char* name) {
  return io::load(std::filesystem::path(SPINR_TEST_DATA) / name);
}

}  // namespace

TEST_CASE("psnr: fixed values") {
  const Image a(4, 4, 0.5);
  CHECK(std::isinf(psnr(a, a)));
  CHECK(psnr(a, a) > 0);
  CHECK(psnr(Image(4, 4, 0.5), Image(4, 4, 0.0)) ==
        doctest::Approx(10.0 * std::log10(4.0)).epsilon(1e-14));
  CHECK(psnr(Image(2, 3, 1.0), Image(2, 3, 0.0)) == 0.0);
  CHECK_THROWS_AS(psnr(Image(2, 3), Image(3, 2)), std::invalid_argument);
}

TEST_CASE("psnr: symmetric and decreasing in MSE") {
  const Image a = random_image(8, 8, 1);
  const Image b = random_image(8, 8, 2);
  CHECK(psnr(a, b) == psnr(b, a));
  double previous = std::numeric_limits<double>::infinity();
  for (double shift : {0.01, 0.02, 0.05, 0.1, 0.3}) {
    const Image c(8, 8, 0.5 + shift);
    const double p = psnr(Image(8, 8, 0.5), c);
    CHECK(p < previous);
    CHECK(p == doctest::Approx(-20.0 * std::log10(shift)).epsilon(1e-9));
    previous = p;
  }
}

TEST_CASE("mse: matches the triple loop") {
  const Image a = random_image(5, 9, 3);
  const Image b = random_image(5, 9, 4);
  CHECK(mse(a, b) == doctest::Approx(oracle::naive_l2(a, b) / (5 * 9 * 3)).epsilon(1e-13));
}

TEST_CASE("ssim: identities") {
  const Image a = random_image(16, 13, 5);
  CHECK(ssim(a, a) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(ssim(Image(12, 12, 0.3), Image(12, 12, 0.3)) == doctest::Approx(1.0));
  const Image b = random_image(16, 13, 6);
  CHECK(ssim(a, b) == doctest::Approx(ssim(b, a)).epsilon(1e-12));
  CHECK(ssim(a, b) < 0.2);
  CHECK_THROWS_AS(ssim(Image(10, 20), Image(10, 20)), std::invalid_argument);
  CHECK_FALSE(ssim_if_defined(Image(10, 20), Image(10, 20)).has_value());
  CHECK(ssim_if_defined(a, a).has_value());
}

TEST_CASE("ssim: agrees with a direct 2D-window computation") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const Image a = random_image(14 + static_cast<int>(seed), 19, 10 + seed);
    Image b = a;
    Rng rng(20 + seed, RngStream::kTest);
    for (double& v : b.samples()) v = std::clamp(v + rng.normal(0, 0.1), 0.0, 1.0);
    CHECK(std::abs(ssim(a, b) - oracle::brute_force_ssim(a, b)) < 1e-6);
  }
}

TEST_CASE("ssim and psnr: frozen reference values") {
  // Reference values from scikit-image 0.2x structural_similarity with
  // gaussian_weights=True, sigma=1.5, use_sample_covariance=False,
  // data_range=1, and peak_signal_noise_ratio with data_range=1.
  const Image astronaut = data_image("astronaut_32.ppm");
  const Image chelsea = data_image("chelsea_32.ppm");
  CHECK(std::abs(ssim(astronaut, chelsea) - (-0.02086658654341385)) < 1e-6);
  CHECK(std::abs(psnr(astronaut, chelsea) - 9.48374280583394) < 1e-9);

  const Image coffee = data_image("coffee_64.ppm");
  Image gamma = coffee;
  for (double& v : gamma.samples()) v = std::pow(v, 1.5);
  CHECK(std::abs(ssim(coffee, gamma) - 0.8585323923114357) < 1e-6);
  CHECK(std::abs(psnr(coffee, gamma) - 20.785467206371393) < 1e-9);
}

TEST_CASE("evaluate clamps the render first") {
  const Image target(12, 12, 1.0);
  const Image over(12, 12, 1.4);
  const Fidelity f = evaluate(over, target);
  CHECK(std::isinf(f.psnr));
  REQUIRE(f.ssim.has_value());
  CHECK(*f.ssim == doctest::Approx(1.0));
  CHECK_FALSE(evaluate(Image(4, 4), Image(4, 4)).ssim.has_value());
}

TEST_CASE("compression_factor") {
  CHECK(compression_factor(1000, 500) == 2.0);
  CHECK(raw_image_bytes(512, 512) == 786432);
  CHECK(compression_factor(786432, 66819 * 4) == doctest::Approx(2.9424).epsilon(1e-4));
  CHECK(compression_factor(1000, 800) == 2.0 * compression_factor(1000, 1600));
  CHECK(compression_factor(10, 9) > 1.0);
  CHECK(compression_factor(9, 10) < 1.0);
  CHECK_THROWS_AS(compression_factor(0, 5), std::invalid_argument);
  CHECK_THROWS_AS(compression_factor(5, 0), std::invalid_argument);
}

TEST_CASE("summarize: conventions") {
  const std::vector<double> one = {30.0};
  const MetricSummary s1 = summarize(one);
  CHECK(s1.mean == 30.0);
  CHECK(s1.std_sample == 0.0);
  CHECK(s1.std_population == 0.0);

  const std::vector<double> two = {30.0, 32.0};
  const MetricSummary s2 = summarize(two);
  CHECK(s2.mean == 31.0);
  CHECK(s2.std_population == 1.0);
  CHECK(s2.std_sample == doctest::Approx(std::sqrt(2.0)));

  const std::vector<double> with_inf = {20.0, std::numeric_limits<double>::infinity(), 22.0};
  const MetricSummary s3 = summarize(with_inf);
  CHECK(s3.mean == 21.0);
  CHECK(s3.count == 2);
  CHECK(s3.excluded == 1);

  CHECK_THROWS_AS(summarize(std::vector<double>{}), std::invalid_argument);
}

TEST_CASE("aggregate: recomputed statistics") {
  std::vector<TrialReport> reports;
  std::vector<double> psnrs, l5;
  Rng rng(7, RngStream::kTest);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    TrialReport r;
    r.method = "siren";
    r.seed = seed;
    r.psnr = rng.uniform(25, 35);
    r.ssim = rng.uniform(0.8, 0.95);
    r.cf = 2.5;
    r.attacks["L@5"].psnr = {r.psnr - 3, r.psnr - 5};
    psnrs.push_back(r.psnr);
    l5.push_back(r.psnr - 4);
    reports.push_back(r);
  }
  const AggregateReport agg = aggregate(reports);
  CHECK(agg.runs == 10);
  double mean = 0;
  for (double p : psnrs) mean += p;
  mean /= 10;
  double sq = 0;
  for (double p : psnrs) sq += (p - mean) * (p - mean);
  CHECK(agg.psnr.mean == doctest::Approx(mean).epsilon(1e-12));
  CHECK(agg.psnr.std_sample == doctest::Approx(std::sqrt(sq / 9)).epsilon(1e-12));
  CHECK(agg.cf.mean == 2.5);
  CHECK(agg.cf.std_sample == 0.0);
  CHECK(agg.ssim.count == 10);
  REQUIRE(agg.attacks.count("L@5") == 1);
  CHECK(agg.attacks.at("L@5").mean == doctest::Approx(mean - 4).epsilon(1e-12));

  reports[3].method = "spinr";
  CHECK_THROWS_AS(aggregate(reports), std::invalid_argument);
  CHECK_THROWS_AS(aggregate(std::vector<TrialReport>{}), std::invalid_argument);
}
