#include "lramp/channels.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace lramp {

ChannelModel ChannelModel::make_gaussian(double variance) {
  ChannelModel c;
  c.kind = ChannelKind::gaussian;
  c.variance = variance;
  validate(c);
  return c;
}

ChannelModel ChannelModel::make_sbm(double p_out, double mu) {
  ChannelModel c;
  c.kind = ChannelKind::sbm;
  c.p_out = p_out;
  c.mu = mu;
  validate(c);
  return c;
}

ChannelModel ChannelModel::make_exponential(double scale) {
  ChannelModel c;
  c.kind = ChannelKind::exponential;
  c.scale = scale;
  validate(c);
  return c;
}

ChannelModel ChannelModel::make_sbm_with_delta(double p_out, double delta) {
  if (delta <= 0.0) throw std::invalid_argument("channel: delta must be positive");
  // delta = p_out (1 - p_out) / mu^2
  return make_sbm(p_out, std::sqrt(p_out * (1.0 - p_out) / delta));
}

void validate(const ChannelModel& channel) {
  switch (channel.kind) {
    case ChannelKind::gaussian:
      if (!(channel.variance > 0.0) || !std::isfinite(channel.variance))
        throw std::invalid_argument("channel: variance must be positive and finite");
      break;
    case ChannelKind::sbm:
      // Endpoints rejected: the noise level would vanish or diverge.
      if (!(channel.p_out > 0.0) || !(channel.p_out < 1.0))
        throw std::invalid_argument("channel: p_out must lie strictly inside (0,1)");
      if (!(channel.mu > 0.0) || !std::isfinite(channel.mu))
        throw std::invalid_argument("channel: mu must be positive and finite");
      break;
    case ChannelKind::exponential:
      if (!(channel.scale > 0.0) || !std::isfinite(channel.scale))
        throw std::invalid_argument("channel: scale must be positive and finite");
      break;
  }
}

double sample_observation(const ChannelModel& channel, double w, RngStream& rng) {
  switch (channel.kind) {
    case ChannelKind::gaussian:
      return w + std::sqrt(channel.variance) * rng.normal();
    case ChannelKind::sbm: {
      const double p = channel.p_out + channel.mu * w;
      if (p < 0.0 || p > 1.0)
        throw std::invalid_argument("channel: sbm edge probability p_out + mu*w = " +
                                    std::to_string(p) + " outside [0,1]");
      return rng.uniform() < p ? 1.0 : 0.0;
    }
    case ChannelKind::exponential: {
      // Two-sided exponential noise around w.
      const double u = rng.uniform() - 0.5;
      const double mag = -channel.scale * std::log1p(-2.0 * std::abs(u));
      return w + (u < 0.0 ? -mag : mag);
    }
  }
  return 0.0;  // unreachable
}

double score_value(const ChannelModel& channel, double y) {
  switch (channel.kind) {
    case ChannelKind::gaussian:
      return y / channel.variance;
    case ChannelKind::sbm:
      return y != 0.0 ? channel.mu / channel.p_out : -channel.mu / (1.0 - channel.p_out);
    case ChannelKind::exponential:
      if (y > 0.0) return 1.0 / channel.scale;
      if (y < 0.0) return -1.0 / channel.scale;
      return 0.0;
  }
  return 0.0;  // unreachable
}

double inverse_fisher(const ChannelModel& channel) {
  switch (channel.kind) {
    case ChannelKind::gaussian:
      return channel.variance;
    case ChannelKind::sbm:
      return channel.p_out * (1.0 - channel.p_out) / (channel.mu * channel.mu);
    case ChannelKind::exponential:
      return channel.scale * channel.scale;
  }
  return 0.0;  // unreachable
}

Mat score_matrix(const ChannelModel& channel, const Mat& y) {
  Mat s(y.rows(), y.cols());
  const Eigen::Index rows = y.rows();
  const Eigen::Index cols = y.cols();
#pragma omp parallel for schedule(static)
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) s(i, j) = score_value(channel, y(i, j));
  return s;
}

const char* to_string(ChannelKind kind) {
  switch (kind) {
    case ChannelKind::gaussian: return "gaussian";
    case ChannelKind::sbm: return "sbm";
    case ChannelKind::exponential: return "exponential";
  }
  return "?";
}

}  // namespace lramp
