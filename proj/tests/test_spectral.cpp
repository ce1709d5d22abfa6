#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Eigenvalues>
#include <cmath>

#include "lramp/spectral.hpp"

using namespace lramp;

TEST_CASE("diagonal matrix") {
  Mat m = Mat::Zero(3, 3);
  m.diagonal() << 3.0, 1.0, 1.0;
  const auto pairs = top_eigvecs(m, 1);
  REQUIRE(pairs.size() == 1);
  CHECK(pairs[0].converged);
  CHECK(pairs[0].value == doctest::Approx(3.0).epsilon(1e-9));
  CHECK(std::abs(pairs[0].vector(0)) == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(pairs[0].vector(0) > 0.0);  // sign convention
}

TEST_CASE("random symmetric matrix against a full decomposition") {
  const int n = 50;
  RngStream rng(5);
  Mat m(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) m(i, j) = m(j, i) = rng.normal();

  const auto pairs = top_eigvecs(m, 3, 1e-12, 20000);
  Eigen::SelfAdjointEigenSolver<Mat> full(m);
  std::vector<double> by_magnitude(full.eigenvalues().data(),
                                   full.eigenvalues().data() + n);
  std::sort(by_magnitude.begin(), by_magnitude.end(),
            [](double a, double b) { return std::abs(a) > std::abs(b); });
  for (int j = 0; j < 3; ++j) {
    CHECK(pairs[j].converged);
    CHECK(pairs[j].value == doctest::Approx(by_magnitude[j]).epsilon(1e-8));
    // Residual and orthogonality of the deflated basis.
    const double residual = (m * pairs[j].vector - pairs[j].value * pairs[j].vector).norm();
    CHECK(residual <= 1e-7);
    for (int i = 0; i < j; ++i)
      CHECK(std::abs(pairs[i].vector.dot(pairs[j].vector)) <= 1e-8);
  }
}

TEST_CASE("planted rank-one signal is recovered at low noise") {
  const PriorModel prior = PriorModel::make_gaussian(1);
  const ChannelModel channel = ChannelModel::make_gaussian(0.05);
  const PlantedInstance inst = generate_xkx(prior, channel, Mat::Identity(1, 1), 800, 9);
  const Mat scaled = inst.s / std::sqrt(800.0);
  const auto pairs = top_eigvecs(scaled, 1, 1e-10, 10000);
  const double overlap = std::abs(pairs[0].vector.dot(inst.x_truth.col(0))) /
                         inst.x_truth.col(0).norm();
  CHECK(overlap > 0.9);
}

TEST_CASE("gaussian channel score and raw spectra coincide") {
  const PriorModel prior = PriorModel::make_gaussian(1);
  const ChannelModel channel = ChannelModel::make_gaussian(0.25);
  const PlantedInstance inst = generate_xkx(prior, channel, Mat::Identity(1, 1), 300, 13);
  const auto rows = spectral_compare(inst, 2);
  REQUIRE(rows.size() == 4);
  // The score matrix is the raw matrix rescaled, so overlaps agree exactly
  // and eigenvalues differ by the noise factor.
  for (int j = 0; j < 2; ++j) {
    CHECK(rows[j].matrix_kind == 'S');
    CHECK(rows[2 + j].matrix_kind == 'Y');
    CHECK(std::abs(rows[j].overlap - rows[2 + j].overlap) <= 1e-10);
    CHECK(rows[j].eigenvalue == doctest::Approx(rows[2 + j].eigenvalue / 0.25));
  }
}

TEST_CASE("interface guards") {
  CHECK_THROWS_AS(top_eigvecs(Mat::Zero(4, 3), 1), std::invalid_argument);
  CHECK_THROWS_AS(top_eigvecs(Mat::Identity(4, 4), 11), std::invalid_argument);
  const PriorModel prior = PriorModel::make_gaussian(1);
  const PlantedInstance inst =
      generate_xkx(prior, ChannelModel::make_gaussian(1.0), Mat::Identity(1, 1), 20, 1);
  CHECK_THROWS_AS(spectral_compare(inst.blind(), 1), std::invalid_argument);
  const PlantedInstance uv =
      generate_uv(prior, prior, ChannelModel::make_gaussian(1.0), 20, 0.5, 1);
  CHECK_THROWS_AS(spectral_compare(uv, 1), std::invalid_argument);
}

TEST_CASE("heavy-tailed channel: the score spectrum carries the signal") {
  // One desk-scale pass of the informative-window effect; the acceptance
  // suite runs the multi-seed version at full size.
  const PriorModel prior = PriorModel::make_gaussian(1);
  const ChannelModel channel = ChannelModel::make_exponential(0.8);
  const PlantedInstance inst = generate_xkx(prior, channel, Mat::Identity(1, 1), 2000, 3);
  const auto rows = spectral_compare(inst, 1, 1e-9, 3000);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].overlap > rows[1].overlap);
  CHECK(rows[0].overlap > 0.3);
}
