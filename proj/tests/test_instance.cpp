#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "lramp/instance.hpp"

using namespace lramp;

TEST_CASE("symmetric generation shapes and invariants") {
  const PriorModel prior = PriorModel::make_community(2);
  const ChannelModel channel = ChannelModel::make_gaussian(0.5);
  const PlantedInstance inst = generate_xkx(prior, channel, Mat::Identity(2, 2), 4, 99);
  CHECK(inst.y.rows() == 4);
  CHECK(inst.y.cols() == 4);
  CHECK(inst.y.isApprox(inst.y.transpose()));
  CHECK(inst.s.isApprox(inst.s.transpose()));
  CHECK(inst.delta == doctest::Approx(0.5));
  for (int i = 0; i < 4; ++i) {
    CHECK(inst.x_truth.row(i).sum() == doctest::Approx(1.0));
    CHECK(inst.x_truth.row(i).maxCoeff() == doctest::Approx(1.0));
  }
}

TEST_CASE("generation is reproducible from the seed") {
  const PriorModel prior = PriorModel::make_community(2);
  const ChannelModel channel = ChannelModel::make_sbm(0.5, 1.0);
  const PlantedInstance a = generate_xkx(prior, channel, Mat::Identity(2, 2), 50, 7);
  const PlantedInstance b = generate_xkx(prior, channel, Mat::Identity(2, 2), 50, 7);
  CHECK((a.y - b.y).cwiseAbs().maxCoeff() == 0.0);
  CHECK((a.s - b.s).cwiseAbs().maxCoeff() == 0.0);
  CHECK((a.x_truth - b.x_truth).cwiseAbs().maxCoeff() == 0.0);
  const PlantedInstance c = generate_xkx(prior, channel, Mat::Identity(2, 2), 50, 8);
  CHECK((a.y - c.y).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("growing n extends the randomness instead of reshuffling it") {
  // Per-row named streams: the first rows reuse the same prior draws and the
  // same noise draws at a fixed master seed; only the deterministic signal
  // scale moves with n.
  const PriorModel prior = PriorModel::make_community(2);
  const ChannelModel channel = ChannelModel::make_gaussian(0.4);
  const PlantedInstance small = generate_xkx(prior, channel, Mat::Identity(2, 2), 30, 6);
  const PlantedInstance big = generate_xkx(prior, channel, Mat::Identity(2, 2), 40, 6);
  CHECK((big.x_truth.topRows(30) - small.x_truth).cwiseAbs().maxCoeff() == 0.0);
  double worst = 0.0;
  for (int i = 0; i < 30; ++i) {
    for (int j = i; j < 30; ++j) {
      const double same_group = small.x_truth.row(i).dot(small.x_truth.row(j));
      const double w_shift = same_group * (1.0 / std::sqrt(40.0) - 1.0 / std::sqrt(30.0));
      worst = std::max(worst, std::abs(big.y(i, j) - small.y(i, j) - w_shift));
    }
  }
  CHECK(worst <= 1e-12);
}

TEST_CASE("changing the channel keeps the planted factors") {
  const PriorModel prior = PriorModel::make_community(2);
  const PlantedInstance g =
      generate_xkx(prior, ChannelModel::make_gaussian(0.25), Mat::Identity(2, 2), 100, 5);
  const PlantedInstance s = generate_xkx(prior, ChannelModel::make_sbm_with_delta(0.5, 0.25),
                                         Mat::Identity(2, 2), 100, 5);
  CHECK((g.x_truth - s.x_truth).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("sbm edge density concentrates around its mean") {
  const int n = 2000;
  const PriorModel prior = PriorModel::make_community(2);
  const ChannelModel channel = ChannelModel::make_sbm(0.5, 1.0);
  const PlantedInstance inst = generate_xkx(prior, channel, Mat::Identity(2, 2), n, 11);
  double same = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      same += inst.x_truth.row(i).dot(inst.x_truth.row(j));
  const double pairs = 0.5 * n * (n - 1);
  const double expected_density = 0.5 + (1.0 / std::sqrt(n)) * (same / pairs);
  double ones = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) ones += inst.y(i, j);
  const double density = ones / pairs;
  const double sigma = std::sqrt(expected_density * (1.0 - expected_density) / pairs);
  CHECK(std::abs(density - expected_density) <= 3.0 * sigma);
}

TEST_CASE("rectangular generation") {
  const PriorModel prior = PriorModel::make_gaussian(1);
  const ChannelModel channel = ChannelModel::make_gaussian(0.3);
  SUBCASE("shape follows alpha") {
    const PlantedInstance inst = generate_uv(prior, prior, channel, 100, 0.5, 2);
    CHECK(inst.y.rows() == 100);
    CHECK(inst.y.cols() == 50);
    CHECK(inst.s.rows() == 100);
    CHECK(inst.u_truth.rows() == 100);
    CHECK(inst.v_truth.rows() == 50);
  }
  SUBCASE("square case is still asymmetric") {
    const PlantedInstance inst = generate_uv(prior, prior, channel, 40, 1.0, 3);
    CHECK(inst.y.rows() == inst.y.cols());
    CHECK(!inst.s.isApprox(inst.s.transpose()));
  }
  SUBCASE("determinism") {
    const PlantedInstance a = generate_uv(prior, prior, channel, 30, 0.7, 4);
    const PlantedInstance b = generate_uv(prior, prior, channel, 30, 0.7, 4);
    CHECK((a.y - b.y).cwiseAbs().maxCoeff() == 0.0);
    CHECK((a.v_truth - b.v_truth).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("mean squared error") {
  RngStream rng(13);
  Mat truth(6, 2), estimate(6, 2);
  for (int i = 0; i < truth.size(); ++i) {
    truth.data()[i] = rng.normal();
    estimate.data()[i] = rng.normal();
  }
  CHECK(mse(truth, truth) == 0.0);

  // Uniform estimate of a one-hot truth misses by 1 - 1/r.
  Mat uniform = Mat::Constant(6, 2, 0.5);
  Mat onehot = Mat::Zero(6, 2);
  for (int i = 0; i < 6; ++i) onehot(i, i % 2) = 1.0;
  CHECK(mse(uniform, onehot) == doctest::Approx(0.5));

  double direct = 0.0;
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < 2; ++j)
      direct += (estimate(i, j) - truth(i, j)) * (estimate(i, j) - truth(i, j));
  CHECK(mse(estimate, truth) == doctest::Approx(direct / 6.0).epsilon(1e-12));

  CHECK_THROWS_AS(mse(estimate, truth.topRows(3)), std::invalid_argument);
}

TEST_CASE("community overlap alignment") {
  const int n = 9000, r = 3;
  RngStream rng(17);
  Mat truth = Mat::Zero(n, r);
  for (int i = 0; i < n; ++i) truth(i, static_cast<int>(rng.uniform() * r)) = 1.0;

  SUBCASE("identity and relabeled estimates are perfect") {
    CHECK(community_overlap(truth, truth, r).overlap == doctest::Approx(1.0));
    Mat relabeled(n, r);
    relabeled.col(0) = truth.col(2);
    relabeled.col(1) = truth.col(0);
    relabeled.col(2) = truth.col(1);
    const OverlapResult res = community_overlap(relabeled, truth, r);
    CHECK(res.overlap == doctest::Approx(1.0));
    CHECK(apply_permutation(relabeled, res.permutation).isApprox(truth));
  }
  SUBCASE("random assignment scores about 1/r") {
    Mat noise = Mat::Zero(n, 2);
    Mat truth2 = Mat::Zero(n, 2);
    for (int i = 0; i < n; ++i) {
      noise(i, static_cast<int>(rng.uniform() * 2)) = 1.0;
      truth2(i, static_cast<int>(rng.uniform() * 2)) = 1.0;
    }
    const OverlapResult res = community_overlap(noise, truth2, 2);
    CHECK(res.overlap == doctest::Approx(0.5).epsilon(0.05));
    CHECK(!res.greedy);
  }
  SUBCASE("greedy fallback beyond exhaustive range") {
    const int big_r = 12;
    Mat wide = Mat::Zero(big_r * 4, big_r);
    for (int i = 0; i < wide.rows(); ++i) wide(i, i % big_r) = 1.0;
    const OverlapResult res = community_overlap(wide, wide, big_r);
    CHECK(res.greedy);
    CHECK(res.overlap == doctest::Approx(1.0));
  }
}

TEST_CASE("instance container round trip") {
  const PriorModel prior = PriorModel::make_community(2);
  const ChannelModel channel = ChannelModel::make_sbm(0.5, 1.0);
  const PlantedInstance inst = generate_xkx(prior, channel, Mat::Identity(2, 2), 24, 21);
  const std::string path = "roundtrip_instance.bin";
  save_instance(inst, path);
  const PlantedInstance loaded = load_instance(path);
  CHECK(loaded.n == inst.n);
  CHECK(loaded.r == inst.r);
  CHECK(loaded.seed == inst.seed);
  CHECK(loaded.delta == inst.delta);
  CHECK((loaded.y - inst.y).cwiseAbs().maxCoeff() == 0.0);
  CHECK((loaded.s - inst.s).cwiseAbs().maxCoeff() == 0.0);
  CHECK((loaded.x_truth - inst.x_truth).cwiseAbs().maxCoeff() == 0.0);
  CHECK(loaded.channel.kind == ChannelKind::sbm);
  CHECK(loaded.prior.kind == PriorKind::community);

  // Same seed, same bytes.
  save_instance(inst, "roundtrip_instance_b.bin");
  std::ifstream fa(path, std::ios::binary), fb("roundtrip_instance_b.bin", std::ios::binary);
  std::stringstream sa, sb;
  sa << fa.rdbuf();
  sb << fb.rdbuf();
  CHECK(sa.str() == sb.str());

  const PlantedInstance blinded = inst.blind();
  CHECK(!blinded.has_truth());
  save_instance(blinded, "roundtrip_blind.bin");
  CHECK(!load_instance("roundtrip_blind.bin").has_truth());

  std::remove(path.c_str());
  std::remove("roundtrip_instance_b.bin");
  std::remove("roundtrip_blind.bin");
}

TEST_CASE("uv container round trip") {
  const PriorModel prior = PriorModel::make_gaussian(1);
  const PlantedInstance inst =
      generate_uv(prior, prior, ChannelModel::make_exponential(0.9), 20, 0.5, 31);
  save_instance(inst, "roundtrip_uv.bin");
  const PlantedInstance loaded = load_instance("roundtrip_uv.bin");
  CHECK(loaded.model == ModelKind::uv);
  CHECK(loaded.m == inst.m);
  CHECK((loaded.u_truth - inst.u_truth).cwiseAbs().maxCoeff() == 0.0);
  CHECK((loaded.v_truth - inst.v_truth).cwiseAbs().maxCoeff() == 0.0);
  CHECK((loaded.y - inst.y).cwiseAbs().maxCoeff() == 0.0);
  std::remove("roundtrip_uv.bin");
}

TEST_CASE("csv export lists triples") {
  const PriorModel prior = PriorModel::make_community(2);
  const PlantedInstance inst =
      generate_xkx(prior, ChannelModel::make_gaussian(1.0), Mat::Identity(2, 2), 3, 41);
  export_csv(inst, "y_triples.csv", "s_triples.csv");
  std::ifstream y_file("y_triples.csv");
  std::string header;
  std::getline(y_file, header);
  CHECK(header == "row,col,value");
  int lines = 0;
  std::string line;
  while (std::getline(y_file, line)) ++lines;
  CHECK(lines == 9);
  std::remove("y_triples.csv");
  std::remove("s_triples.csv");
}
