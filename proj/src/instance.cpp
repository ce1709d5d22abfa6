#include "lramp/instance.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <stdexcept>

namespace lramp {

bool PlantedInstance::has_truth() const {
  return model == ModelKind::xkx ? x_truth.size() > 0 : u_truth.size() > 0 && v_truth.size() > 0;
}

PlantedInstance PlantedInstance::blind() const {
  PlantedInstance copy = *this;
  copy.x_truth.resize(0, 0);
  copy.u_truth.resize(0, 0);
  copy.v_truth.resize(0, 0);
  return copy;
}

PlantedInstance generate_xkx(const PriorModel& prior, const ChannelModel& channel,
                             const Mat& k_coupling, int n, std::uint64_t seed) {
  validate(prior);
  validate(channel);
  if (n < 2) throw std::invalid_argument("generate_xkx: n must be >= 2");
  const int r = prior.rank;
  if (k_coupling.rows() != r || k_coupling.cols() != r)
    throw std::invalid_argument("generate_xkx: coupling matrix must be r x r");
  if (!k_coupling.isApprox(k_coupling.transpose()))
    throw std::invalid_argument("generate_xkx: coupling matrix must be symmetric");

  PlantedInstance inst;
  inst.model = ModelKind::xkx;
  inst.n = n;
  inst.m = n;
  inst.r = r;
  inst.k_coupling = k_coupling;
  inst.seed = seed;
  inst.channel = channel;
  inst.prior = prior;
  inst.delta = inverse_fisher(channel);

  inst.x_truth.resize(n, r);
#pragma omp parallel for schedule(static)
  for (int i = 0; i < n; ++i) {
    RngStream rng(derive_seed(seed, RngUse::prior_draw, i));
    inst.x_truth.row(i) = sample_prior(prior, rng).transpose();
  }

  const Mat xk = inst.x_truth * k_coupling;
  const double inv_sqrt_n = 1.0 / std::sqrt(static_cast<double>(n));
  inst.y.resize(n, n);
  // Entries sampled once for i <= j from a per-row stream, then mirrored.
#pragma omp parallel for schedule(dynamic, 16)
  for (int i = 0; i < n; ++i) {
    RngStream rng(derive_seed(seed, RngUse::channel_noise, i));
    for (int j = i; j < n; ++j) {
      const double w = xk.row(i).dot(inst.x_truth.row(j)) * inv_sqrt_n;
      inst.y(i, j) = sample_observation(channel, w, rng);
    }
  }
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < i; ++j) inst.y(i, j) = inst.y(j, i);

  inst.s = score_matrix(channel, inst.y);
  return inst;
}

PlantedInstance generate_uv(const PriorModel& prior_u, const PriorModel& prior_v,
                            const ChannelModel& channel, int n, double alpha,
                            std::uint64_t seed) {
  validate(prior_u);
  validate(prior_v);
  validate(channel);
  if (n < 2) throw std::invalid_argument("generate_uv: n must be >= 2");
  if (!(alpha > 0.0)) throw std::invalid_argument("generate_uv: alpha must be > 0");
  const int m = static_cast<int>(std::lround(alpha * n));
  if (m < 1) throw std::invalid_argument("generate_uv: round(alpha*n) must be >= 1");
  if (prior_u.rank != prior_v.rank)
    throw std::invalid_argument("generate_uv: priors must share the same rank");

  PlantedInstance inst;
  inst.model = ModelKind::uv;
  inst.n = n;
  inst.m = m;
  inst.r = prior_u.rank;
  inst.seed = seed;
  inst.channel = channel;
  inst.prior = prior_u;
  inst.prior_v = prior_v;
  inst.delta = inverse_fisher(channel);

  inst.u_truth.resize(n, inst.r);
  inst.v_truth.resize(m, inst.r);
#pragma omp parallel for schedule(static)
  for (int i = 0; i < n; ++i) {
    RngStream rng(derive_seed(seed, RngUse::prior_draw, i));
    inst.u_truth.row(i) = sample_prior(prior_u, rng).transpose();
  }
#pragma omp parallel for schedule(static)
  for (int j = 0; j < m; ++j) {
    RngStream rng(derive_seed(seed, RngUse::prior_draw_v, j));
    inst.v_truth.row(j) = sample_prior(prior_v, rng).transpose();
  }

  const double inv_sqrt_n = 1.0 / std::sqrt(static_cast<double>(n));
  inst.y.resize(n, m);
#pragma omp parallel for schedule(dynamic, 16)
  for (int i = 0; i < n; ++i) {
    RngStream rng(derive_seed(seed, RngUse::channel_noise, i));
    for (int j = 0; j < m; ++j) {
      const double w = inst.u_truth.row(i).dot(inst.v_truth.row(j)) * inv_sqrt_n;
      inst.y(i, j) = sample_observation(channel, w, rng);
    }
  }

  inst.s = score_matrix(channel, inst.y);
  return inst;
}

double mse(const Mat& estimate, const Mat& truth) {
  if (estimate.rows() != truth.rows() || estimate.cols() != truth.cols())
    throw std::invalid_argument("mse: shape mismatch");
  return (estimate - truth).squaredNorm() / static_cast<double>(estimate.rows());
}

namespace {

Eigen::VectorXi hard_assign(const Mat& values) {
  Eigen::VectorXi labels(values.rows());
  for (Eigen::Index i = 0; i < values.rows(); ++i) {
    Eigen::Index best = 0;
    values.row(i).maxCoeff(&best);
    labels(i) = static_cast<int>(best);
  }
  return labels;
}

}  // namespace

OverlapResult community_overlap(const Mat& estimate, const Mat& truth, int r) {
  if (estimate.rows() != truth.rows())
    throw std::invalid_argument("community_overlap: row count mismatch");
  if (estimate.cols() != r || truth.cols() != r)
    throw std::invalid_argument("community_overlap: column count must equal r");
  const Eigen::Index n = estimate.rows();
  const Eigen::VectorXi est = hard_assign(estimate);
  const Eigen::VectorXi tru = hard_assign(truth);

  Mat confusion = Mat::Zero(r, r);
  for (Eigen::Index i = 0; i < n; ++i) confusion(est(i), tru(i)) += 1.0;

  OverlapResult result;
  result.permutation.resize(r);
  if (r <= 10) {
    std::vector<int> perm(r);
    std::iota(perm.begin(), perm.end(), 0);
    double best = -1.0;
    do {
      double correct = 0.0;
      for (int k = 0; k < r; ++k) correct += confusion(k, perm[k]);
      if (correct > best) {
        best = correct;
        result.permutation = perm;
      }
    } while (std::next_permutation(perm.begin(), perm.end()));
    result.overlap = best / static_cast<double>(n);
  } else {
    // Largest confusion entries first; near-exact when the overlap is high.
    result.greedy = true;
    std::vector<bool> row_used(r, false), col_used(r, false);
    double correct = 0.0;
    for (int step = 0; step < r; ++step) {
      double top = -1.0;
      int top_row = -1, top_col = -1;
      for (int a = 0; a < r; ++a) {
        if (row_used[a]) continue;
        for (int b = 0; b < r; ++b) {
          if (col_used[b]) continue;
          if (confusion(a, b) > top) {
            top = confusion(a, b);
            top_row = a;
            top_col = b;
          }
        }
      }
      row_used[top_row] = true;
      col_used[top_col] = true;
      result.permutation[top_row] = top_col;
      correct += top;
    }
    result.overlap = correct / static_cast<double>(n);
  }
  return result;
}

Mat apply_permutation(const Mat& estimate, const std::vector<int>& permutation) {
  Mat out(estimate.rows(), estimate.cols());
  for (int k = 0; k < static_cast<int>(permutation.size()); ++k)
    out.col(permutation[k]) = estimate.col(k);
  return out;
}

namespace {

constexpr std::uint32_t kMagic = 0x4e49524c;  // "LRIN"
constexpr std::uint32_t kVersion = 1;

template <typename T>
void write_pod(std::ofstream& out, const T& value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read_pod(std::ifstream& in) {
  T value{};
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  return value;
}

void write_mat(std::ofstream& out, const Mat& m) {
  write_pod<std::uint64_t>(out, static_cast<std::uint64_t>(m.rows()));
  write_pod<std::uint64_t>(out, static_cast<std::uint64_t>(m.cols()));
  out.write(reinterpret_cast<const char*>(m.data()),
            static_cast<std::streamsize>(sizeof(double) * m.size()));
}

Mat read_mat(std::ifstream& in) {
  const auto rows = read_pod<std::uint64_t>(in);
  const auto cols = read_pod<std::uint64_t>(in);
  Mat m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  in.read(reinterpret_cast<char*>(m.data()),
          static_cast<std::streamsize>(sizeof(double) * m.size()));
  return m;
}

void write_prior(std::ofstream& out, const PriorModel& prior) {
  write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(prior.kind));
  write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(prior.rank));
  if (prior.kind == PriorKind::gaussian) {
    Mat mean = prior.mean;
    write_mat(out, mean);
    write_mat(out, prior.cov);
  }
}

PriorModel read_prior(std::ifstream& in) {
  PriorModel prior;
  prior.kind = static_cast<PriorKind>(read_pod<std::uint32_t>(in));
  prior.rank = static_cast<int>(read_pod<std::uint32_t>(in));
  if (prior.kind == PriorKind::gaussian) {
    prior.mean = read_mat(in).col(0);
    prior.cov = read_mat(in);
  }
  return prior;
}

}  // namespace

void save_instance(const PlantedInstance& instance, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("save_instance: cannot open " + path);
  write_pod(out, kMagic);
  write_pod(out, kVersion);
  write_pod<std::uint8_t>(out, instance.model == ModelKind::xkx ? 0 : 1);
  write_pod<std::uint8_t>(out, instance.has_truth() ? 1 : 0);
  write_pod<std::uint64_t>(out, instance.n);
  write_pod<std::uint64_t>(out, instance.m);
  write_pod<std::uint64_t>(out, instance.r);
  write_pod<std::uint64_t>(out, instance.seed);
  write_pod<double>(out, instance.delta);
  write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(instance.channel.kind));
  write_pod<double>(out, instance.channel.variance);
  write_pod<double>(out, instance.channel.p_out);
  write_pod<double>(out, instance.channel.mu);
  write_pod<double>(out, instance.channel.scale);
  write_prior(out, instance.prior);
  const bool uv = instance.model == ModelKind::uv;
  if (uv) write_prior(out, instance.prior_v);
  if (!uv) write_mat(out, instance.k_coupling);
  if (instance.has_truth()) {
    if (uv) {
      write_mat(out, instance.u_truth);
      write_mat(out, instance.v_truth);
    } else {
      write_mat(out, instance.x_truth);
    }
  }
  write_mat(out, instance.y);
  write_mat(out, instance.s);
  if (!out) throw std::runtime_error("save_instance: write failed for " + path);
}

PlantedInstance load_instance(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("load_instance: cannot open " + path);
  if (read_pod<std::uint32_t>(in) != kMagic)
    throw std::runtime_error("load_instance: bad magic in " + path);
  if (read_pod<std::uint32_t>(in) != kVersion)
    throw std::runtime_error("load_instance: unsupported version in " + path);
  PlantedInstance inst;
  inst.model = read_pod<std::uint8_t>(in) == 0 ? ModelKind::xkx : ModelKind::uv;
  const bool truth = read_pod<std::uint8_t>(in) != 0;
  inst.n = static_cast<int>(read_pod<std::uint64_t>(in));
  inst.m = static_cast<int>(read_pod<std::uint64_t>(in));
  inst.r = static_cast<int>(read_pod<std::uint64_t>(in));
  inst.seed = read_pod<std::uint64_t>(in);
  inst.delta = read_pod<double>(in);
  inst.channel.kind = static_cast<ChannelKind>(read_pod<std::uint32_t>(in));
  inst.channel.variance = read_pod<double>(in);
  inst.channel.p_out = read_pod<double>(in);
  inst.channel.mu = read_pod<double>(in);
  inst.channel.scale = read_pod<double>(in);
  inst.prior = read_prior(in);
  const bool uv = inst.model == ModelKind::uv;
  if (uv) inst.prior_v = read_prior(in);
  if (!uv) inst.k_coupling = read_mat(in);
  if (truth) {
    if (uv) {
      inst.u_truth = read_mat(in);
      inst.v_truth = read_mat(in);
    } else {
      inst.x_truth = read_mat(in);
    }
  }
  inst.y = read_mat(in);
  inst.s = read_mat(in);
  if (!in) throw std::runtime_error("load_instance: truncated file " + path);
  return inst;
}

namespace {
void export_triples(const Mat& m, const std::string& path) {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw std::runtime_error("export_csv: cannot open " + path);
  std::fprintf(f, "row,col,value\n");
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      std::fprintf(f, "%lld,%lld,%.17g\n", static_cast<long long>(i),
                   static_cast<long long>(j), m(i, j));
  std::fclose(f);
}
}  // namespace

void export_csv(const PlantedInstance& instance, const std::string& y_path,
                const std::string& s_path) {
  export_triples(instance.y, y_path);
  export_triples(instance.s, s_path);
}

const char* to_string(ModelKind model) {
  return model == ModelKind::xkx ? "xkx" : "uv";
}

}  // namespace lramp
