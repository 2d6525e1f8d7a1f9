#include <cmath>

#include "doctest.h"
#include "spinr/models.hpp"
#include "spinr/rng.hpp"

using namespace spinr;

TEST_CASE("fourier_encode: origin gives zeros then ones") {
  Rng rng(1, RngStream::kTest);
  Eigen::MatrixXd b(5, 2);
  for (Eigen::Index i = 0; i < b.size(); ++i) b.data()[i] = rng.normal(0, 10);
  const Eigen::VectorXd e = fourier_encode(b, Eigen::Vector2d::Zero());
  REQUIRE(e.size() == 10);
  CHECK(e.head(5).isZero(0.0));
  CHECK(e.tail(5).isOnes(0.0));
}

TEST_CASE("fourier_encode: quarter period") {
  Eigen::MatrixXd b(1, 2);
  b << 1, 0;
  const Eigen::VectorXd e = fourier_encode(b, Eigen::Vector2d(0.25, 0.0));
  CHECK(e[0] == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(std::abs(e[1]) < 1e-15);
}

TEST_CASE("fourier_encode: entries bounded for random B and x") {
  Rng rng(2, RngStream::kTest);
  for (int trial = 0; trial < 50; ++trial) {
    const int m = 1 + static_cast<int>(rng.index(20));
    Eigen::MatrixXd b(m, 2);
    for (Eigen::Index i = 0; i < b.size(); ++i) b.data()[i] = rng.normal(0, 10);
    const Eigen::Vector2d x(rng.uniform(-1, 1), rng.uniform(-1, 1));
    const Eigen::VectorXd e = fourier_encode(b, x);
    CHECK(e.size() == 2 * m);
    CHECK(e.cwiseAbs().maxCoeff() <= 1.0);
  }
}

TEST_CASE("build_model: parameter counts") {
  CHECK(ModelSpec::siren(128, 4).param_count() == 66819);
  CHECK(build_model(ModelSpec::siren(128, 4), 0).param_count() == 66819);
  // (2*1+1) + (1*1+1) + (1*3+3)
  CHECK(build_model(ModelSpec::siren(1, 1), 0).param_count() == 11);

  for (int h : {1, 3, 16, 40})
    for (int n : {1, 2, 5}) {
      const ModelSpec s = ModelSpec::siren(h, n);
      CHECK(build_model(s, 1).param_count() == s.param_count());
      const ModelSpec f = ModelSpec::fourier(h, n, 7, 2.0);
      const ParamSet pf = build_model(f, 1);
      CHECK(pf.param_count() == f.param_count());
      CHECK(pf.trainable_param_count() == f.trainable_param_count());
      CHECK(f.param_count() == f.trainable_param_count() + 14);
    }
}

TEST_CASE("build_model: siren initialization ranges and activations") {
  const ModelSpec spec = ModelSpec::siren(32, 3, 30.0);
  const ParamSet m = build_model(spec, 4);
  REQUIRE(m.layer_count() == 5);
  CHECK(m.layers[0].weights.cwiseAbs().maxCoeff() <= 1.0 / 2.0);
  const double hidden_bound = std::sqrt(6.0 / 32.0) / 30.0;
  for (std::size_t l = 1; l < 5; ++l)
    CHECK(m.layers[l].weights.cwiseAbs().maxCoeff() <= hidden_bound);
  for (std::size_t l = 0; l < 4; ++l) CHECK(m.layers[l].activation == Activation::kSine);
  CHECK(m.layers[4].activation == Activation::kIdentity);
  CHECK_FALSE(m.has_encoding());
  CHECK_NOTHROW(m.validate());
}

TEST_CASE("build_model: fourier encoding and relu layers") {
  const ModelSpec spec = ModelSpec::fourier(16, 2, 64, 10.0);
  const ParamSet m = build_model(spec, 9);
  REQUIRE(m.has_encoding());
  CHECK(m.encoding.rows() == 64);
  CHECK(m.encoding.cols() == 2);
  CHECK(m.layers[0].in_dim() == 128);
  // B ~ N(0, 100): the sample std should be near 10.
  const double mean = m.encoding.mean();
  const double sd = std::sqrt((m.encoding.array() - mean).square().sum() / 127.0);
  CHECK(sd > 7.0);
  CHECK(sd < 13.0);
  CHECK(m.layers[1].activation == Activation::kRelu);
  CHECK(m.layers[3].activation == Activation::kIdentity);
  CHECK(m.layers[1].weights.cwiseAbs().maxCoeff() <= 1.0 / 4.0);
}

TEST_CASE("build_model: seeded determinism") {
  const ModelSpec spec = ModelSpec::siren(24, 2);
  CHECK(build_model(spec, 42) == build_model(spec, 42));
  CHECK_FALSE(build_model(spec, 42) == build_model(spec, 43));
}

TEST_CASE("ModelSpec validation") {
  CHECK_THROWS_AS(ModelSpec::siren(0, 4).validate(), std::invalid_argument);
  CHECK_THROWS_AS(ModelSpec::siren(8, 0).validate(), std::invalid_argument);
  CHECK_THROWS_AS(ModelSpec::siren(8, 2, -1.0).validate(), std::invalid_argument);
  CHECK_THROWS_AS(ModelSpec::fourier(8, 2, 0).validate(), std::invalid_argument);
}

TEST_CASE("infer_spec recovers the architecture") {
  const ModelSpec s = ModelSpec::siren(12, 3, 20.0);
  const ModelSpec back = infer_spec(build_model(s, 0));
  CHECK(back == s);
  const ModelSpec f = ModelSpec::fourier(9, 2, 5, 10.0);
  const ModelSpec fb = infer_spec(build_model(f, 0));
  CHECK(fb.family == Family::kFourier);
  CHECK(fb.fourier_features == 5);
  CHECK(fb.width == 9);
}

TEST_CASE("CoordGrid: pixel centers") {
  const CoordGrid g(2, 4);
  CHECK(g.size() == 8);
  CHECK(g.at(0, 0).x() == doctest::Approx(-0.75));
  CHECK(g.at(0, 0).y() == doctest::Approx(-0.5));
  CHECK(g.at(1, 3).x() == doctest::Approx(0.75));
  CHECK(g.at(1, 3).y() == doctest::Approx(0.5));
  CHECK(g.coords().cwiseAbs().maxCoeff() < 1.0);
  CHECK_THROWS_AS(CoordGrid(0, 3), std::invalid_argument);
}

TEST_CASE("render: zero model gives a zero image") {
  ParamSet zero = build_model(ModelSpec::siren(8, 2), 0).zeros_like();
  const Image img = render(zero, CoordGrid(5, 7));
  CHECK(img.height() == 5);
  CHECK(img.width() == 7);
  for (double v : img.samples()) CHECK(v == 0.0);
}

TEST_CASE("render: any resolution, parameters untouched") {
  const ParamSet m = build_model(ModelSpec::siren(16, 2), 3);
  const ParamSet before = m;
  const Image a = render(m, CoordGrid(6, 5));
  const Image b = render(m, CoordGrid(12, 10));
  CHECK(b.pixel_count() == 4 * a.pixel_count());
  CHECK(render(m, CoordGrid(1, 1)).pixel_count() == 1);
  CHECK(m == before);
}

TEST_CASE("render: equals the per-pixel forward loop") {
  for (const ModelSpec& spec : {ModelSpec::siren(16, 3), ModelSpec::fourier(16, 2, 8, 3.0)}) {
    const ParamSet m = build_model(spec, 17);
    const CoordGrid grid(6, 9);
    const Image img = render(m, grid);
    for (int r = 0; r < 6; ++r)
      for (int c = 0; c < 9; ++c) {
        const Eigen::VectorXd y = forward(m, grid.at(r, c));
        for (int ch = 0; ch < 3; ++ch)
          CHECK(img.at(r, c, ch) == doctest::Approx(y[ch]).epsilon(1e-12));
      }
  }
}

TEST_CASE("render: reversing grid rows flips the image") {
  const ParamSet m = build_model(ModelSpec::siren(16, 2), 5);
  const CoordGrid grid(7, 4);
  const Image a = render(m, grid);
  const Image b = render(m, grid.with_rows_reversed());
  CHECK(b == a.flipped_vertically());
}
