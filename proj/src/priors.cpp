#include "lramp/priors.hpp"

#include <cmath>
#include <stdexcept>

namespace lramp {

PriorModel PriorModel::make_gaussian(int rank) {
  PriorModel p;
  p.kind = PriorKind::gaussian;
  p.rank = rank;
  p.mean = Vec::Zero(rank);
  p.cov = Mat::Identity(rank, rank);
  validate(p);
  return p;
}

PriorModel PriorModel::make_gaussian(Vec mean, Mat cov) {
  PriorModel p;
  p.kind = PriorKind::gaussian;
  p.rank = static_cast<int>(mean.size());
  p.mean = std::move(mean);
  p.cov = std::move(cov);
  validate(p);
  return p;
}

PriorModel PriorModel::make_community(int groups) {
  PriorModel p;
  p.kind = PriorKind::community;
  p.rank = groups;
  validate(p);
  return p;
}

PriorModel PriorModel::make_rademacher() {
  PriorModel p;
  p.kind = PriorKind::rademacher;
  p.rank = 1;
  return p;
}

double PriorModel::second_moment() const {
  switch (kind) {
    case PriorKind::gaussian: return mean.squaredNorm() + cov.trace();
    case PriorKind::community: return 1.0;
    case PriorKind::rademacher: return 1.0;
  }
  return 0.0;  // unreachable
}

Mat PriorModel::second_moment_matrix() const {
  switch (kind) {
    case PriorKind::gaussian: return cov + mean * mean.transpose();
    case PriorKind::community: return Mat::Identity(rank, rank) / rank;
    case PriorKind::rademacher: return Mat::Identity(1, 1);
  }
  return Mat();  // unreachable
}

void validate(const PriorModel& prior) {
  if (prior.rank < 1) throw std::invalid_argument("prior: rank must be >= 1");
  switch (prior.kind) {
    case PriorKind::gaussian: {
      if (prior.mean.size() != prior.rank || prior.cov.rows() != prior.rank ||
          prior.cov.cols() != prior.rank)
        throw std::invalid_argument("prior: gaussian mean/cov shape mismatch");
      Eigen::LLT<Mat> llt(prior.cov);
      if (llt.info() != Eigen::Success)
        throw std::invalid_argument("prior: gaussian covariance must be positive definite");
      break;
    }
    case PriorKind::community:
      if (prior.rank < 2) throw std::invalid_argument("prior: community needs >= 2 groups");
      break;
    case PriorKind::rademacher:
      if (prior.rank != 1) throw std::invalid_argument("prior: rademacher is rank 1");
      break;
  }
}

Vec sample_prior(const PriorModel& prior, RngStream& rng) {
  switch (prior.kind) {
    case PriorKind::gaussian: {
      Vec z(prior.rank);
      for (int i = 0; i < prior.rank; ++i) z(i) = rng.normal();
      Eigen::LLT<Mat> llt(prior.cov);
      return prior.mean + llt.matrixL() * z;
    }
    case PriorKind::community: {
      Vec x = Vec::Zero(prior.rank);
      const int g = static_cast<int>(rng.uniform() * prior.rank);
      x(g < prior.rank ? g : prior.rank - 1) = 1.0;
      return x;
    }
    case PriorKind::rademacher: {
      Vec x(1);
      x(0) = rng.uniform() < 0.5 ? 1.0 : -1.0;
      return x;
    }
  }
  return Vec();  // unreachable
}

DenoiserPlan::DenoiserPlan(const PriorModel& prior, const Mat& a_tilt)
    : kind_(prior.kind), rank_(prior.rank) {
  if (a_tilt.rows() != rank_ || a_tilt.cols() != rank_)
    throw std::invalid_argument("denoise: tilt matrix shape mismatch");
  switch (kind_) {
    case PriorKind::community:
      half_diag_ = 0.5 * a_tilt.diagonal();
      log_z_const_ = -std::log(static_cast<double>(rank_));
      break;
    case PriorKind::gaussian: {
      const Mat prior_prec = prior.cov.llt().solve(Mat::Identity(rank_, rank_));
      llt_.compute(prior_prec + a_tilt);
      if (llt_.info() != Eigen::Success)
        throw std::domain_error("denoise: prior precision + A is not positive definite");
      prec_mean_ = prior_prec * prior.mean;
      double log_det_post = 0.0, log_det_prior_prec = 0.0;
      for (int i = 0; i < rank_; ++i)
        log_det_post += 2.0 * std::log(llt_.matrixL()(i, i));
      Eigen::LLT<Mat> prior_llt(prior_prec);
      for (int i = 0; i < rank_; ++i)
        log_det_prior_prec += 2.0 * std::log(prior_llt.matrixL()(i, i));
      log_z_const_ = 0.5 * (log_det_prior_prec - log_det_post) -
                     0.5 * prior.mean.dot(prec_mean_);
      break;
    }
    case PriorKind::rademacher:
      rademacher_half_a_ = 0.5 * a_tilt(0, 0);
      break;
  }
}

namespace {
// log cosh without overflow for large |t|.
double log_cosh(double t) {
  const double a = std::abs(t);
  return a + std::log1p(std::exp(-2.0 * a)) - std::log(2.0);
}
}  // namespace

void DenoiserPlan::apply(const Vec& b, Vec& mean, Mat& cov, double& log_z) const {
  switch (kind_) {
    case PriorKind::community: {
      // Softmax of B_k - A_kk/2 with log-sum-exp stabilization; the
      // logits reach O(1/delta) near transitions.
      mean = b - half_diag_;
      const double top = mean.maxCoeff();
      mean = (mean.array() - top).exp();
      const double total = mean.sum();
      log_z = top + std::log(total) + log_z_const_;
      mean /= total;
      cov.noalias() = -mean * mean.transpose();
      cov.diagonal() += mean;
      break;
    }
    case PriorKind::gaussian: {
      const Vec shifted = b + prec_mean_;
      mean = llt_.solve(shifted);
      cov = llt_.solve(Mat::Identity(rank_, rank_));
      log_z = 0.5 * shifted.dot(mean) + log_z_const_;
      break;
    }
    case PriorKind::rademacher: {
      const double t = std::tanh(b(0));
      mean.resize(1);
      cov.resize(1, 1);
      mean(0) = t;
      cov(0, 0) = 1.0 - t * t;
      log_z = log_cosh(b(0)) - rademacher_half_a_;
      break;
    }
  }
}

DenoiserResult DenoiserPlan::apply(const Vec& b) const {
  DenoiserResult out;
  apply(b, out.mean, out.cov, out.log_z);
  return out;
}

DenoiserResult denoise(const PriorModel& prior, const Mat& a_tilt, const Vec& b) {
  return DenoiserPlan(prior, a_tilt).apply(b);
}

double denoise_jacobian_check(const PriorModel& prior, const Mat& a_tilt, const Vec& b,
                              double step) {
  if (!(step > 0.0)) throw std::invalid_argument("denoise_jacobian_check: step must be > 0");
  const DenoiserPlan plan(prior, a_tilt);
  const DenoiserResult at_b = plan.apply(b);
  const int r = prior.rank;
  double worst = 0.0;
  for (int j = 0; j < r; ++j) {
    Vec hi = b, lo = b;
    hi(j) += step;
    lo(j) -= step;
    const Vec diff = (plan.apply(hi).mean - plan.apply(lo).mean) / (2.0 * step);
    worst = std::max(worst, (diff - at_b.cov.col(j)).cwiseAbs().maxCoeff());
  }
  return worst;
}

const char* to_string(PriorKind kind) {
  switch (kind) {
    case PriorKind::gaussian: return "gaussian";
    case PriorKind::community: return "community";
    case PriorKind::rademacher: return "rademacher";
  }
  return "?";
}

}  // namespace lramp
