#include "lramp/amp.hpp"

#include <cmath>
#include <limits>

namespace lramp {

namespace {

constexpr double kInitScale = 1e-10;
constexpr int kRowBlock = 256;

void check_damping(double damping) {
  if (!(damping >= 0.0 && damping < 1.0))
    throw std::invalid_argument("amp: damping must lie in [0, 1); 1 would freeze the state");
}

// Denoises every row of b with a shared tilt. Row blocks are fixed so the
// block reduction of the covariance sum does not depend on the thread count.
void denoise_rows(const DenoiserPlan& plan, const Mat& b, Mat& means, Mat& cov_sum) {
  const int n = static_cast<int>(b.rows());
  const int r = static_cast<int>(b.cols());
  const int blocks = (n + kRowBlock - 1) / kRowBlock;
  means.resize(n, r);
  std::vector<Mat> partial(blocks, Mat::Zero(r, r));
#pragma omp parallel for schedule(dynamic)
  for (int blk = 0; blk < blocks; ++blk) {
    Vec row_b(r), mean(r);
    Mat cov(r, r);
    double log_z = 0.0;
    const int lo = blk * kRowBlock;
    const int hi = std::min(n, lo + kRowBlock);
    for (int i = lo; i < hi; ++i) {
      row_b = b.row(i).transpose();
      plan.apply(row_b, mean, cov, log_z);
      means.row(i) = mean.transpose();
      partial[blk] += cov;
    }
  }
  cov_sum = Mat::Zero(r, r);
  for (int blk = 0; blk < blocks; ++blk) cov_sum += partial[blk];
}

double sum_log_z(const DenoiserPlan& plan, const Mat& b) {
  const int n = static_cast<int>(b.rows());
  const int r = static_cast<int>(b.cols());
  const int blocks = (n + kRowBlock - 1) / kRowBlock;
  std::vector<double> partial(blocks, 0.0);
#pragma omp parallel for schedule(dynamic)
  for (int blk = 0; blk < blocks; ++blk) {
    Vec row_b(r), mean(r);
    Mat cov(r, r);
    double log_z = 0.0;
    const int lo = blk * kRowBlock;
    const int hi = std::min(n, lo + kRowBlock);
    for (int i = lo; i < hi; ++i) {
      row_b = b.row(i).transpose();
      plan.apply(row_b, mean, cov, log_z);
      partial[blk] += log_z;
    }
  }
  double total = 0.0;
  for (double p : partial) total += p;
  return total;
}

void require_finite(const Mat& m, int iteration, const char* label) {
  if (!m.allFinite())
    throw divergence_error(iteration, std::string("amp: non-finite values in ") + label +
                                          " at iteration " + std::to_string(iteration));
}

}  // namespace

AmpState init_amp_xkx(const PlantedInstance& instance, const PriorModel& prior,
                      AmpInit init, std::uint64_t seed) {
  if (instance.r != prior.rank)
    throw std::invalid_argument("amp: instance and prior ranks disagree");
  const int n = instance.n;
  const int r = instance.r;
  AmpState state;
  state.a_old = Mat::Zero(n, r);
  state.v_sum = Mat::Zero(r, r);
  if (init == AmpInit::informative) {
    if (!instance.has_truth())
      throw std::invalid_argument("amp: informative init needs a planted instance with truth");
    state.a = instance.x_truth;
  } else {
    RngStream rng(derive_seed(seed, RngUse::amp_init));
    state.a.resize(n, r);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < r; ++j) state.a(i, j) = kInitScale * rng.normal();
  }
  return state;
}

void amp_step_xkx(AmpState& state, const Mat& s, const Mat& k_coupling, double delta,
                  const PriorModel& prior, double damping) {
  check_damping(damping);
  const int n = static_cast<int>(state.a.rows());
  const double sqrt_n = std::sqrt(static_cast<double>(n));
  const Mat& k = k_coupling;

  state.b.noalias() = (s * state.a) * (k / sqrt_n);
  state.b.noalias() -= state.a_old * (k * state.v_sum * k) / (n * delta);
  state.a_tilt.noalias() = k * (state.a.transpose() * state.a) * k / (n * delta);
  require_finite(state.b, state.t, "linear tilt");

  const DenoiserPlan plan(prior, state.a_tilt);
  Mat a_new, v_new;
  denoise_rows(plan, state.b, a_new, v_new);
  require_finite(a_new, state.t, "denoised means");

  state.a_old = state.a;
  state.a = (1.0 - damping) * a_new + damping * state.a;
  state.v_sum = (1.0 - damping) * v_new + damping * state.v_sum;
  state.diff = (state.a - state.a_old).squaredNorm() / n;
  ++state.t;
}

double bethe_free_energy_xkx(const AmpState& state, const Mat& s, const Mat& k_coupling,
                             double delta, const PriorModel& prior) {
  const int n = static_cast<int>(state.a.rows());
  const double sqrt_n = std::sqrt(static_cast<double>(n));
  const Mat& k = k_coupling;
  const Mat& x = state.a;

  // Fixed-point tilts: the memory term is evaluated at the current means.
  const Mat gram = x.transpose() * x;
  const Mat a_tilt = k * gram * k / (n * delta);
  const Mat sx = s * x;
  Mat b = sx * (k / sqrt_n);
  b.noalias() -= x * (k * state.v_sum * k) / (n * delta);

  const DenoiserPlan plan(prior, a_tilt);
  const double log_z_total = sum_log_z(plan, b);

  const double pair_score = ((x * k).cwiseProduct(sx)).sum() / sqrt_n;
  const double pair_quartic = (k * gram * k).cwiseProduct(gram).sum() / (2.0 * n * delta);
  const double pair_cov = 2.0 * (k * state.v_sum * k).cwiseProduct(gram).sum() / (n * delta);
  const double log_z_pairs = pair_score - pair_quartic - pair_cov;

  return log_z_total / n - 0.5 * log_z_pairs / n;
}

namespace {

void fill_xkx_metrics(AmpReport& report, const AmpState& state,
                      const PlantedInstance& instance, const PriorModel& prior) {
  const int n = instance.n;
  report.q_hat = state.a.transpose() * state.a / n;
  if (!instance.has_truth()) {
    report.mse_value = report.mse_aligned = report.overlap =
        std::numeric_limits<double>::quiet_NaN();
    return;
  }
  const Mat& truth = instance.x_truth;
  report.mse_value = mse(state.a, truth);
  report.mse_aligned = report.mse_value;
  report.m_hat = state.a.transpose() * truth / n;
  if (prior.kind == PriorKind::community) {
    const OverlapResult ov = community_overlap(state.a, truth, prior.rank);
    report.overlap = ov.overlap;
    report.overlap_greedy = ov.greedy;
    const Mat aligned = apply_permutation(state.a, ov.permutation);
    report.mse_aligned = mse(aligned, truth);
    report.m_hat = aligned.transpose() * truth / n;
  } else {
    report.overlap = std::numeric_limits<double>::quiet_NaN();
    if (prior.rank == 1) {
      const double flipped = mse(-state.a, truth);
      if (flipped < report.mse_value) {
        report.mse_aligned = flipped;
        report.m_hat = -report.m_hat;
      }
    }
  }
}

}  // namespace

AmpReport run_amp_xkx(const PlantedInstance& instance, const PriorModel& prior,
                      AmpInit init, const AmpOptions& options) {
  check_damping(options.damping);
  AmpState state = init_amp_xkx(instance, prior, init, instance.seed);
  AmpReport report;
  report.diff_trace.reserve(options.t_max);
  try {
    while (state.t < options.t_max) {
      amp_step_xkx(state, instance.s, instance.k_coupling, instance.delta, prior,
                   options.damping);
      report.diff_trace.push_back(state.diff);
      if (options.on_iteration) options.on_iteration(state);
      if (state.t > options.t_min && state.diff < options.tol) break;
    }
  } catch (const divergence_error& err) {
    report.diverged = true;
    report.note = err.what();
    report.iterations = state.t;
    report.final_diff = std::numeric_limits<double>::quiet_NaN();
    report.free_energy = std::numeric_limits<double>::quiet_NaN();
    report.mse_value = report.mse_aligned = report.overlap =
        std::numeric_limits<double>::quiet_NaN();
    return report;
  }
  report.iterations = state.t;
  report.final_diff = state.diff;
  report.converged = state.diff < options.tol;
  report.free_energy =
      bethe_free_energy_xkx(state, instance.s, instance.k_coupling, instance.delta, prior);
  fill_xkx_metrics(report, state, instance, prior);
  return report;
}

AmpUvState init_amp_uv(const PlantedInstance& instance, const PriorModel& prior_u,
                       const PriorModel& prior_v, AmpInit init, std::uint64_t seed) {
  if (instance.model != ModelKind::uv)
    throw std::invalid_argument("amp: expected a rectangular instance");
  if (instance.r != prior_u.rank || instance.r != prior_v.rank)
    throw std::invalid_argument("amp: instance and prior ranks disagree");
  const int n = instance.n;
  const int m = instance.m;
  const int r = instance.r;
  AmpUvState state;
  state.u_old = Mat::Zero(n, r);
  state.v_old = Mat::Zero(m, r);
  state.sigma_u_sum = Mat::Zero(r, r);
  state.sigma_v_sum = Mat::Zero(r, r);
  if (init == AmpInit::informative) {
    if (!instance.has_truth())
      throw std::invalid_argument("amp: informative init needs a planted instance with truth");
    state.u = instance.u_truth;
    state.v = instance.v_truth;
  } else {
    RngStream rng(derive_seed(seed, RngUse::amp_init));
    state.u.resize(n, r);
    state.v.resize(m, r);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < r; ++j) state.u(i, j) = kInitScale * rng.normal();
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < r; ++j) state.v(i, j) = kInitScale * rng.normal();
  }
  return state;
}

void amp_step_uv(AmpUvState& state, const Mat& s, double delta, const PriorModel& prior_u,
                 const PriorModel& prior_v, double damping) {
  check_damping(damping);
  const int n = static_cast<int>(state.u.rows());
  const double sqrt_n = std::sqrt(static_cast<double>(n));

  state.b_u.noalias() = s * state.v / sqrt_n;
  state.b_u.noalias() -= state.u_old * state.sigma_v_sum / (n * delta);
  state.a_u.noalias() = state.v.transpose() * state.v / (n * delta);
  state.b_v.noalias() = s.transpose() * state.u / sqrt_n;
  state.b_v.noalias() -= state.v_old * state.sigma_u_sum / (n * delta);
  state.a_v.noalias() = state.u.transpose() * state.u / (n * delta);
  require_finite(state.b_u, state.t, "u-side linear tilt");
  require_finite(state.b_v, state.t, "v-side linear tilt");

  const DenoiserPlan plan_u(prior_u, state.a_u);
  const DenoiserPlan plan_v(prior_v, state.a_v);
  Mat u_new, v_new, sigma_u_new, sigma_v_new;
  denoise_rows(plan_u, state.b_u, u_new, sigma_u_new);
  denoise_rows(plan_v, state.b_v, v_new, sigma_v_new);
  require_finite(u_new, state.t, "u-side means");
  require_finite(v_new, state.t, "v-side means");

  state.u_old = state.u;
  state.v_old = state.v;
  state.u = (1.0 - damping) * u_new + damping * state.u;
  state.v = (1.0 - damping) * v_new + damping * state.v;
  state.sigma_u_sum = (1.0 - damping) * sigma_u_new + damping * state.sigma_u_sum;
  state.sigma_v_sum = (1.0 - damping) * sigma_v_new + damping * state.sigma_v_sum;
  state.diff = ((state.u - state.u_old).squaredNorm() + (state.v - state.v_old).squaredNorm()) /
               (state.u.rows() + state.v.rows());
  ++state.t;
}

double bethe_free_energy_uv(const AmpUvState& state, const Mat& s, double delta,
                            const PriorModel& prior_u, const PriorModel& prior_v) {
  const int n = static_cast<int>(state.u.rows());
  const double sqrt_n = std::sqrt(static_cast<double>(n));
  const Mat& u = state.u;
  const Mat& v = state.v;

  const Mat gram_u = u.transpose() * u;
  const Mat gram_v = v.transpose() * v;
  const Mat a_u = gram_v / (n * delta);
  const Mat a_v = gram_u / (n * delta);
  const Mat sv = s * v;
  Mat b_u = sv / sqrt_n;
  b_u.noalias() -= u * state.sigma_v_sum / (n * delta);
  Mat b_v = s.transpose() * u / sqrt_n;
  b_v.noalias() -= v * state.sigma_u_sum / (n * delta);

  const double log_z_u = sum_log_z(DenoiserPlan(prior_u, a_u), b_u);
  const double log_z_v = sum_log_z(DenoiserPlan(prior_v, a_v), b_v);

  const double pair_score = u.cwiseProduct(sv).sum() / sqrt_n;
  const double pair_cov = (state.sigma_v_sum.cwiseProduct(gram_u).sum() +
                           state.sigma_u_sum.cwiseProduct(gram_v).sum()) /
                          (n * delta);
  const double pair_quartic = (gram_u * gram_v).trace() / (2.0 * n * delta);
  const double log_z_pairs = pair_score - pair_cov - pair_quartic;

  return (log_z_u + log_z_v) / n - log_z_pairs / n;
}

AmpUvReport run_amp_uv(const PlantedInstance& instance, const PriorModel& prior_u,
                       const PriorModel& prior_v, AmpInit init, const AmpOptions& options) {
  check_damping(options.damping);
  AmpUvState state = init_amp_uv(instance, prior_u, prior_v, init, instance.seed);
  AmpUvReport report;
  report.diff_trace.reserve(options.t_max);
  try {
    while (state.t < options.t_max) {
      amp_step_uv(state, instance.s, instance.delta, prior_u, prior_v, options.damping);
      report.diff_trace.push_back(state.diff);
      if (options.on_iteration_uv) options.on_iteration_uv(state);
      if (state.t > options.t_min && state.diff < options.tol) break;
    }
  } catch (const divergence_error& err) {
    report.diverged = true;
    report.note = err.what();
    report.iterations = state.t;
    report.final_diff = std::numeric_limits<double>::quiet_NaN();
    report.free_energy = std::numeric_limits<double>::quiet_NaN();
    report.mse_u = report.mse_v = std::numeric_limits<double>::quiet_NaN();
    return report;
  }
  report.iterations = state.t;
  report.final_diff = state.diff;
  report.converged = state.diff < options.tol;
  report.free_energy = bethe_free_energy_uv(state, instance.s, instance.delta, prior_u, prior_v);
  report.q_u_hat = state.u.transpose() * state.u / instance.n;
  report.q_v_hat = state.v.transpose() * state.v / instance.m;
  if (instance.has_truth()) {
    report.mse_u = mse(state.u, instance.u_truth);
    report.mse_v = mse(state.v, instance.v_truth);
    report.m_u_hat = state.u.transpose() * instance.u_truth / instance.n;
    report.m_v_hat = state.v.transpose() * instance.v_truth / instance.m;
    // The two-sided sign symmetry is resolved jointly.
    const double flipped = mse(-state.u, instance.u_truth) + mse(-state.v, instance.v_truth);
    if (flipped < report.mse_u + report.mse_v) {
      report.mse_u = mse(-state.u, instance.u_truth);
      report.mse_v = mse(-state.v, instance.v_truth);
      report.m_u_hat = -report.m_u_hat;
      report.m_v_hat = -report.m_v_hat;
    }
  } else {
    report.mse_u = report.mse_v = std::numeric_limits<double>::quiet_NaN();
  }
  return report;
}

}  // namespace lramp
