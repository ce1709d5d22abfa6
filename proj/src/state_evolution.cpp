#include "lramp/state_evolution.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace lramp {

namespace {

constexpr int kPairBlock = 8192;

struct MomentAccumulator {
  Mat sum, sum_sq;
  explicit MomentAccumulator(int r) : sum(Mat::Zero(r, r)), sum_sq(Mat::Zero(r, r)) {}
  void add(const Mat& value) {
    sum += value;
    sum_sq += value.cwiseProduct(value);
  }
  void merge(const MomentAccumulator& other) {
    sum += other.sum;
    sum_sq += other.sum_sq;
  }
  Mat mean(Eigen::Index count) const { return sum / static_cast<double>(count); }
  Mat std_error(Eigen::Index count) const {
    const double c = static_cast<double>(count);
    Mat var = sum_sq / c - (sum / c).cwiseProduct(sum / c);
    var = var.cwiseMax(0.0) * (c / std::max(1.0, c - 1.0));
    return (var / c).cwiseSqrt();
  }
};

struct ScalarAccumulator {
  double sum = 0.0, sum_sq = 0.0;
  void add(double v) {
    sum += v;
    sum_sq += v * v;
  }
  void merge(const ScalarAccumulator& other) {
    sum += other.sum;
    sum_sq += other.sum_sq;
  }
  double mean(Eigen::Index count) const { return sum / static_cast<double>(count); }
  double std_error(Eigen::Index count) const {
    const double c = static_cast<double>(count);
    double var = sum_sq / c - (sum / c) * (sum / c);
    var = std::max(0.0, var) * (c / std::max(1.0, c - 1.0));
    return std::sqrt(var / c);
  }
};

void gauss_hermite_rule(int n, Vec& nodes, Vec& weights) {
  // Golub-Welsch for the e^{-t^2} weight, rescaled to the standard normal.
  Mat jacobi = Mat::Zero(n, n);
  for (int k = 1; k < n; ++k) {
    const double off = std::sqrt(k / 2.0);
    jacobi(k, k - 1) = off;
    jacobi(k - 1, k) = off;
  }
  Eigen::SelfAdjointEigenSolver<Mat> es(jacobi);
  nodes = es.eigenvalues() * std::sqrt(2.0);
  weights = es.eigenvectors().row(0).transpose().cwiseProduct(
      es.eigenvectors().row(0).transpose());
}

}  // namespace

Mat symmetric_sqrt_psd(const Mat& m, double tol) {
  Eigen::SelfAdjointEigenSolver<Mat> es(m);
  if (es.info() != Eigen::Success)
    throw std::runtime_error("symmetric_sqrt_psd: eigendecomposition failed");
  Vec ev = es.eigenvalues();
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    if (ev(i) < -tol)
      throw std::runtime_error("symmetric_sqrt_psd: matrix not PSD, eigenvalue " +
                               std::to_string(ev(i)));
    ev(i) = std::max(0.0, ev(i));
  }
  return es.eigenvectors() * ev.cwiseSqrt().asDiagonal() * es.eigenvectors().transpose();
}

double se_mse(const PriorModel& prior, const SeState& state) {
  return prior.second_moment() - state.q.trace();
}

SeState community_symmetric_state(int r, double b, bool locked) {
  if (r < 2) throw std::invalid_argument("community_symmetric_state: r must be >= 2");
  if (b < 0.0 || b > 1.0) throw std::invalid_argument("community_symmetric_state: b in [0,1]");
  SeState state;
  const double a = 1.0 - b;
  state.q = Mat::Constant(r, r, a / (r * r)) + (b / r) * Mat::Identity(r, r);
  state.m = state.q;
  state.nishimori_locked = locked;
  return state;
}

CommunityProjection project_community(const Mat& q) {
  const int r = static_cast<int>(q.rows());
  CommunityProjection out;
  const double total = q.sum();
  const double tr = q.trace();
  const double alpha = (total - tr) / (static_cast<double>(r) * r - r);
  const double beta = tr / r - alpha;
  out.a = alpha * r * r;
  out.b = beta * r;
  const Mat fitted = Mat::Constant(r, r, alpha) + beta * Mat::Identity(r, r);
  out.residual = (q - fitted).cwiseAbs().maxCoeff();
  return out;
}

SeEvaluator::SeEvaluator(PriorModel prior, Mat k_coupling, double delta, QuadratureSpec quad)
    : prior_(std::move(prior)), k_(std::move(k_coupling)), delta_(delta), quad_(quad) {
  validate(prior_);
  if (!(delta_ > 0.0)) throw std::invalid_argument("state evolution: delta must be > 0");
  const int r = prior_.rank;
  if (k_.rows() != r || k_.cols() != r)
    throw std::invalid_argument("state evolution: coupling matrix must be r x r");
  if (quad_.method == QuadratureSpec::Method::gauss_hermite) {
    if (prior_.kind != PriorKind::gaussian)
      throw std::invalid_argument("state evolution: gauss-hermite needs the gaussian prior");
    if (r > 3)
      throw std::invalid_argument("state evolution: gauss-hermite limited to rank <= 3");
    gauss_hermite_rule(quad_.nodes, gh_nodes_, gh_weights_);
    return;
  }
  if (quad_.samples < 2) throw std::invalid_argument("state evolution: needs >= 2 samples");
  const Eigen::Index pairs = (quad_.samples + 1) / 2;
  RngStream rng(derive_seed(quad_.seed, RngUse::quadrature));
  x_bank_.resize(pairs, r);
  z_bank_.resize(pairs, r);
  for (Eigen::Index p = 0; p < pairs; ++p) {
    x_bank_.row(p) = sample_prior(prior_, rng).transpose();
    for (int j = 0; j < r; ++j) z_bank_(p, j) = rng.normal();
  }
}

SeStepEstimate SeEvaluator::step(const SeState& state) const {
  const int r = prior_.rank;
  const Mat q_in = state.q;
  const Mat m_in = state.nishimori_locked ? state.q : state.m;
  const Mat a_tilt = k_ * q_in * k_ / delta_;
  const Mat mean_map = k_ * m_in * k_ / delta_;
  const Mat noise_sqrt = symmetric_sqrt_psd(a_tilt);
  const DenoiserPlan plan(prior_, a_tilt);

  SeStepEstimate out;
  out.state.t = state.t + 1;
  out.state.nishimori_locked = state.nishimori_locked;

  if (quad_.method == QuadratureSpec::Method::gauss_hermite) {
    // Exact tensor-product quadrature over the prior draw and the noise.
    const Eigen::Index nodes = gh_nodes_.size();
    double points = 1.0;
    for (int d = 0; d < 2 * r; ++d) points *= static_cast<double>(nodes);
    if (points > 5e7)
      throw std::invalid_argument("state evolution: gauss-hermite grid too large");
    const Eigen::LLT<Mat> prior_chol(prior_.cov);
    Mat q_sum = Mat::Zero(r, r), m_sum = Mat::Zero(r, r);
    std::vector<Eigen::Index> digit(2 * r, 0);
    Vec xz(r), z(r), b(r), mean(r);
    Mat cov(r, r);
    double log_z = 0.0;
    const auto total = static_cast<Eigen::Index>(points);
    for (Eigen::Index flat = 0; flat < total; ++flat) {
      Eigen::Index rem = flat;
      double weight = 1.0;
      for (int d = 0; d < 2 * r; ++d) {
        digit[d] = rem % nodes;
        rem /= nodes;
        weight *= gh_weights_(digit[d]);
      }
      for (int j = 0; j < r; ++j) xz(j) = gh_nodes_(digit[j]);
      for (int j = 0; j < r; ++j) z(j) = gh_nodes_(digit[r + j]);
      const Vec x = prior_.mean + prior_chol.matrixL() * xz;
      b = mean_map * x + noise_sqrt * z;
      plan.apply(b, mean, cov, log_z);
      q_sum.noalias() += weight * (mean * mean.transpose());
      m_sum.noalias() += weight * (mean * x.transpose());
    }
    out.state.q = 0.5 * (q_sum + q_sum.transpose());
    out.state.m = state.nishimori_locked ? out.state.q : m_sum;
    out.q_stderr = out.m_stderr = out.qm_diff_stderr = Mat::Zero(r, r);
    return out;
  }

  const Eigen::Index pairs = x_bank_.rows();
  const Eigen::Index blocks = (pairs + kPairBlock - 1) / kPairBlock;
  std::vector<MomentAccumulator> q_acc(blocks, MomentAccumulator(r));
  std::vector<MomentAccumulator> m_acc(blocks, MomentAccumulator(r));
  std::vector<MomentAccumulator> d_acc(blocks, MomentAccumulator(r));
#pragma omp parallel for schedule(dynamic)
  for (Eigen::Index blk = 0; blk < blocks; ++blk) {
    Vec x(r), noise(r), b(r), mean_p(r), mean_m(r);
    Mat cov(r, r), pair_q(r, r), pair_m(r, r);
    double log_z = 0.0;
    const Eigen::Index lo = blk * kPairBlock;
    const Eigen::Index hi = std::min(pairs, lo + kPairBlock);
    for (Eigen::Index p = lo; p < hi; ++p) {
      x = x_bank_.row(p).transpose();
      noise.noalias() = noise_sqrt * z_bank_.row(p).transpose();
      const Vec drift = mean_map * x;
      b = drift + noise;
      plan.apply(b, mean_p, cov, log_z);
      b = drift - noise;
      plan.apply(b, mean_m, cov, log_z);
      pair_q.noalias() = 0.5 * (mean_p * mean_p.transpose() + mean_m * mean_m.transpose());
      pair_m.noalias() = (0.5 * (mean_p + mean_m)) * x.transpose();
      q_acc[blk].add(pair_q);
      m_acc[blk].add(pair_m);
      d_acc[blk].add(pair_q - pair_m);
    }
  }
  MomentAccumulator q_total(r), m_total(r), d_total(r);
  for (Eigen::Index blk = 0; blk < blocks; ++blk) {
    q_total.merge(q_acc[blk]);
    m_total.merge(m_acc[blk]);
    d_total.merge(d_acc[blk]);
  }
  Mat q_next = q_total.mean(pairs);
  out.state.q = 0.5 * (q_next + q_next.transpose());
  out.state.m = state.nishimori_locked ? out.state.q : m_total.mean(pairs);
  out.q_stderr = q_total.std_error(pairs);
  out.m_stderr = m_total.std_error(pairs);
  out.qm_diff_stderr = d_total.std_error(pairs);
  return out;
}

SeFixedPoint SeEvaluator::fixed_point(SeState init, double tol, int t_max) const {
  SeFixedPoint result;
  SeState current = std::move(init);
  for (int it = 0; it < t_max; ++it) {
    SeStepEstimate est = step(current);
    double move = (est.state.q - current.q).cwiseAbs().maxCoeff();
    if (!current.nishimori_locked)
      move = std::max(move, (est.state.m - current.m).cwiseAbs().maxCoeff());
    current = est.state;
    result.iterations = it + 1;
    if (move < tol) {
      result.converged = true;
      break;
    }
  }
  result.state = current;
  return result;
}

FreeEnergyEstimate SeEvaluator::free_energy(const SeState& state) const {
  const int r = prior_.rank;
  const Mat q_in = state.q;
  const Mat m_in = state.nishimori_locked ? state.q : state.m;
  const Mat a_tilt = k_ * q_in * k_ / delta_;
  const Mat mean_map = k_ * m_in * k_ / delta_;
  const Mat noise_sqrt = symmetric_sqrt_psd(a_tilt);
  const DenoiserPlan plan(prior_, a_tilt);

  const double trace_m = (k_ * m_in * k_).cwiseProduct(m_in).sum() / (2.0 * delta_);
  const double trace_q = (k_ * q_in * k_).cwiseProduct(q_in).sum() / (4.0 * delta_);

  FreeEnergyEstimate out;
  if (quad_.method == QuadratureSpec::Method::gauss_hermite) {
    const Eigen::Index nodes = gh_nodes_.size();
    double points = 1.0;
    for (int d = 0; d < 2 * r; ++d) points *= static_cast<double>(nodes);
    if (points > 5e7)
      throw std::invalid_argument("state evolution: gauss-hermite grid too large");
    const Eigen::LLT<Mat> prior_chol(prior_.cov);
    std::vector<Eigen::Index> digit(2 * r, 0);
    Vec xz(r), z(r), b(r), mean(r);
    Mat cov(r, r);
    double log_z = 0.0, acc = 0.0;
    const auto total = static_cast<Eigen::Index>(points);
    for (Eigen::Index flat = 0; flat < total; ++flat) {
      Eigen::Index rem = flat;
      double weight = 1.0;
      for (int d = 0; d < 2 * r; ++d) {
        digit[d] = rem % nodes;
        rem /= nodes;
        weight *= gh_weights_(digit[d]);
      }
      for (int j = 0; j < r; ++j) xz(j) = gh_nodes_(digit[j]);
      for (int j = 0; j < r; ++j) z(j) = gh_nodes_(digit[r + j]);
      const Vec x = prior_.mean + prior_chol.matrixL() * xz;
      b = mean_map * x + noise_sqrt * z;
      plan.apply(b, mean, cov, log_z);
      acc += weight * log_z;
    }
    out.value = acc - trace_m + trace_q;
    out.std_error = 0.0;
    return out;
  }

  const Eigen::Index pairs = x_bank_.rows();
  const Eigen::Index blocks = (pairs + kPairBlock - 1) / kPairBlock;
  std::vector<ScalarAccumulator> acc(blocks);
#pragma omp parallel for schedule(dynamic)
  for (Eigen::Index blk = 0; blk < blocks; ++blk) {
    Vec x(r), noise(r), b(r), mean(r);
    Mat cov(r, r);
    double log_z_p = 0.0, log_z_m = 0.0;
    const Eigen::Index lo = blk * kPairBlock;
    const Eigen::Index hi = std::min(pairs, lo + kPairBlock);
    for (Eigen::Index p = lo; p < hi; ++p) {
      x = x_bank_.row(p).transpose();
      noise.noalias() = noise_sqrt * z_bank_.row(p).transpose();
      const Vec drift = mean_map * x;
      b = drift + noise;
      plan.apply(b, mean, cov, log_z_p);
      b = drift - noise;
      plan.apply(b, mean, cov, log_z_m);
      acc[blk].add(0.5 * (log_z_p + log_z_m));
    }
  }
  ScalarAccumulator total;
  for (const auto& a : acc) total.merge(a);
  out.value = total.mean(pairs) - trace_m + trace_q;
  out.std_error = total.std_error(pairs);
  return out;
}

SeUvEvaluator::SeUvEvaluator(PriorModel prior_u, PriorModel prior_v, double alpha,
                             double delta, QuadratureSpec quad)
    : prior_u_(std::move(prior_u)),
      prior_v_(std::move(prior_v)),
      alpha_(alpha),
      delta_(delta),
      quad_(quad) {
  validate(prior_u_);
  validate(prior_v_);
  if (prior_u_.rank != prior_v_.rank)
    throw std::invalid_argument("state evolution: priors must share the same rank");
  if (!(alpha_ > 0.0)) throw std::invalid_argument("state evolution: alpha must be > 0");
  if (!(delta_ > 0.0)) throw std::invalid_argument("state evolution: delta must be > 0");
  if (quad_.method != QuadratureSpec::Method::monte_carlo)
    throw std::invalid_argument("state evolution: uv model supports monte carlo only");
  const int r = prior_u_.rank;
  const Eigen::Index pairs = (quad_.samples + 1) / 2;
  RngStream rng(derive_seed(quad_.seed, RngUse::quadrature));
  u_bank_.resize(pairs, r);
  zv_bank_.resize(pairs, r);
  v_bank_.resize(pairs, r);
  zu_bank_.resize(pairs, r);
  for (Eigen::Index p = 0; p < pairs; ++p) {
    u_bank_.row(p) = sample_prior(prior_u_, rng).transpose();
    for (int j = 0; j < r; ++j) zv_bank_(p, j) = rng.normal();
    v_bank_.row(p) = sample_prior(prior_v_, rng).transpose();
    for (int j = 0; j < r; ++j) zu_bank_(p, j) = rng.normal();
  }
}

SeUvState SeUvEvaluator::zero_state() const {
  const int r = prior_u_.rank;
  SeUvState s;
  s.q_u = s.m_u = s.q_v = s.m_v = Mat::Zero(r, r);
  return s;
}

SeUvState SeUvEvaluator::informative_state() const {
  SeUvState s;
  s.q_u = s.m_u = prior_u_.second_moment_matrix();
  s.q_v = s.m_v = prior_v_.second_moment_matrix();
  return s;
}

namespace {

// One side of the rectangular update.
void uv_half_step(const PriorModel& prior, const Mat& a_tilt, const Mat& mean_map,
                  const Mat& noise_sqrt, double noise_scale, const Mat& x_bank,
                  const Mat& z_bank, Mat& q_out, Mat& m_out, Mat& q_se, Mat& m_se) {
  const int r = prior.rank;
  const DenoiserPlan plan(prior, a_tilt);
  const Eigen::Index pairs = x_bank.rows();
  const Eigen::Index blocks = (pairs + kPairBlock - 1) / kPairBlock;
  std::vector<MomentAccumulator> q_acc(blocks, MomentAccumulator(r));
  std::vector<MomentAccumulator> m_acc(blocks, MomentAccumulator(r));
#pragma omp parallel for schedule(dynamic)
  for (Eigen::Index blk = 0; blk < blocks; ++blk) {
    Vec x(r), noise(r), b(r), mean_p(r), mean_m(r);
    Mat cov(r, r), pair_q(r, r), pair_m(r, r);
    double log_z = 0.0;
    const Eigen::Index lo = blk * kPairBlock;
    const Eigen::Index hi = std::min(pairs, lo + kPairBlock);
    for (Eigen::Index p = lo; p < hi; ++p) {
      x = x_bank.row(p).transpose();
      noise.noalias() = noise_scale * (noise_sqrt * z_bank.row(p).transpose());
      const Vec drift = mean_map * x;
      b = drift + noise;
      plan.apply(b, mean_p, cov, log_z);
      b = drift - noise;
      plan.apply(b, mean_m, cov, log_z);
      pair_q.noalias() = 0.5 * (mean_p * mean_p.transpose() + mean_m * mean_m.transpose());
      pair_m.noalias() = (0.5 * (mean_p + mean_m)) * x.transpose();
      q_acc[blk].add(pair_q);
      m_acc[blk].add(pair_m);
    }
  }
  MomentAccumulator q_total(r), m_total(r);
  for (Eigen::Index blk = 0; blk < blocks; ++blk) {
    q_total.merge(q_acc[blk]);
    m_total.merge(m_acc[blk]);
  }
  const Mat q_mean = q_total.mean(pairs);
  q_out = 0.5 * (q_mean + q_mean.transpose());
  m_out = m_total.mean(pairs);
  q_se = q_total.std_error(pairs);
  m_se = m_total.std_error(pairs);
}

double uv_half_log_z(const PriorModel& prior, const Mat& a_tilt, const Mat& mean_map,
                     const Mat& noise_sqrt, double noise_scale, const Mat& x_bank,
                     const Mat& z_bank, double& std_error) {
  const int r = prior.rank;
  const DenoiserPlan plan(prior, a_tilt);
  const Eigen::Index pairs = x_bank.rows();
  const Eigen::Index blocks = (pairs + kPairBlock - 1) / kPairBlock;
  std::vector<ScalarAccumulator> acc(blocks);
#pragma omp parallel for schedule(dynamic)
  for (Eigen::Index blk = 0; blk < blocks; ++blk) {
    Vec x(r), noise(r), b(r), mean(r);
    Mat cov(r, r);
    double log_z_p = 0.0, log_z_m = 0.0;
    const Eigen::Index lo = blk * kPairBlock;
    const Eigen::Index hi = std::min(pairs, lo + kPairBlock);
    for (Eigen::Index p = lo; p < hi; ++p) {
      x = x_bank.row(p).transpose();
      noise.noalias() = noise_scale * (noise_sqrt * z_bank.row(p).transpose());
      const Vec drift = mean_map * x;
      b = drift + noise;
      plan.apply(b, mean, cov, log_z_p);
      b = drift - noise;
      plan.apply(b, mean, cov, log_z_m);
      acc[blk].add(0.5 * (log_z_p + log_z_m));
    }
  }
  ScalarAccumulator total;
  for (const auto& a : acc) total.merge(a);
  std_error = total.std_error(pairs);
  return total.mean(pairs);
}

}  // namespace

SeUvStepEstimate SeUvEvaluator::step(const SeUvState& state) const {
  const Mat q_u = state.q_u;
  const Mat m_u = state.nishimori_locked ? state.q_u : state.m_u;
  const Mat q_v = state.q_v;
  const Mat m_v = state.nishimori_locked ? state.q_v : state.m_v;

  SeUvStepEstimate out;
  out.state.t = state.t + 1;
  out.state.nishimori_locked = state.nishimori_locked;

  // u update sees the v side through alpha; the v update is unscaled.
  const Mat noise_sqrt_v = symmetric_sqrt_psd(q_v / delta_);
  uv_half_step(prior_u_, alpha_ * q_v / delta_, alpha_ * m_v / delta_, noise_sqrt_v,
               std::sqrt(alpha_), u_bank_, zv_bank_, out.state.q_u, out.state.m_u,
               out.q_u_stderr, out.m_u_stderr);
  const Mat noise_sqrt_u = symmetric_sqrt_psd(q_u / delta_);
  uv_half_step(prior_v_, q_u / delta_, m_u / delta_, noise_sqrt_u, 1.0, v_bank_, zu_bank_,
               out.state.q_v, out.state.m_v, out.q_v_stderr, out.m_v_stderr);
  if (state.nishimori_locked) {
    out.state.m_u = out.state.q_u;
    out.state.m_v = out.state.q_v;
  }
  return out;
}

SeUvFixedPoint SeUvEvaluator::fixed_point(SeUvState init, double tol, int t_max) const {
  SeUvFixedPoint result;
  SeUvState current = std::move(init);
  for (int it = 0; it < t_max; ++it) {
    SeUvStepEstimate est = step(current);
    double move = std::max((est.state.q_u - current.q_u).cwiseAbs().maxCoeff(),
                           (est.state.q_v - current.q_v).cwiseAbs().maxCoeff());
    if (!current.nishimori_locked) {
      move = std::max(move, (est.state.m_u - current.m_u).cwiseAbs().maxCoeff());
      move = std::max(move, (est.state.m_v - current.m_v).cwiseAbs().maxCoeff());
    }
    current = est.state;
    result.iterations = it + 1;
    if (move < tol) {
      result.converged = true;
      break;
    }
  }
  result.state = current;
  return result;
}

FreeEnergyEstimate SeUvEvaluator::free_energy(const SeUvState& state) const {
  const Mat q_u = state.q_u;
  const Mat m_u = state.nishimori_locked ? state.q_u : state.m_u;
  const Mat q_v = state.q_v;
  const Mat m_v = state.nishimori_locked ? state.q_v : state.m_v;

  double se_u = 0.0, se_v = 0.0;
  const Mat noise_sqrt_v = symmetric_sqrt_psd(q_v / delta_);
  const double log_z_u =
      uv_half_log_z(prior_u_, alpha_ * q_v / delta_, alpha_ * m_v / delta_, noise_sqrt_v,
                    std::sqrt(alpha_), u_bank_, zv_bank_, se_u);
  const Mat noise_sqrt_u = symmetric_sqrt_psd(q_u / delta_);
  const double log_z_v = uv_half_log_z(prior_v_, q_u / delta_, m_u / delta_, noise_sqrt_u,
                                       1.0, v_bank_, zu_bank_, se_v);

  FreeEnergyEstimate out;
  out.value = log_z_u + alpha_ * log_z_v -
              alpha_ * (m_u.cwiseProduct(m_v).sum()) / delta_ +
              alpha_ * (q_u.cwiseProduct(q_v).sum()) / (2.0 * delta_);
  out.std_error = std::sqrt(se_u * se_u + alpha_ * alpha_ * se_v * se_v);
  return out;
}

}  // namespace lramp
