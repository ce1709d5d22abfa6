#ifndef LRAMP_INSTANCE_HPP
#define LRAMP_INSTANCE_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "lramp/channels.hpp"
#include "lramp/priors.hpp"

namespace lramp {

enum class ModelKind { xkx, uv };

// A synthetic instance with known ground truth. Observations are drawn
// element-wise through the channel from the planted low-rank matrix
// (including the diagonal for the symmetric model), and the score matrix
// is precomputed since the solvers only consume that.
struct PlantedInstance {
  ModelKind model = ModelKind::xkx;
  int n = 0;
  int m = 0;  // columns of y; equals n for the symmetric model
  int r = 0;
  Mat k_coupling;            // symmetric model only
  Mat x_truth;               // n x r, empty when blinded
  Mat u_truth;               // uv model, n x r
  Mat v_truth;               // uv model, m x r
  Mat y;
  Mat s;
  double delta = 0.0;
  std::uint64_t seed = 0;
  ChannelModel channel;
  PriorModel prior;    // row prior (u-side prior for uv)
  PriorModel prior_v;  // uv only

  bool has_truth() const;
  // Copy with the planted factors removed.
  PlantedInstance blind() const;
};

PlantedInstance generate_xkx(const PriorModel& prior, const ChannelModel& channel,
                             const Mat& k_coupling, int n, std::uint64_t seed);

PlantedInstance generate_uv(const PriorModel& prior_u, const PriorModel& prior_v,
                            const ChannelModel& channel, int n, double alpha,
                            std::uint64_t seed);

// (1/n) sum_i ||estimate_i - truth_i||^2.
double mse(const Mat& estimate, const Mat& truth);

struct OverlapResult {
  double overlap = 0.0;            // best fraction of correctly assigned rows
  std::vector<int> permutation;    // estimated label -> true label
  bool greedy = false;             // alignment fell back to greedy matching
};

// Hard-assigns rows to their largest coordinate and aligns estimated group
// labels to the truth: exhaustively for r <= 10, greedily above.
OverlapResult community_overlap(const Mat& estimate, const Mat& truth, int r);

// Column permutation of `estimate` induced by the alignment, so metrics can
// be computed against the truth in a label-consistent frame.
Mat apply_permutation(const Mat& estimate, const std::vector<int>& permutation);

void save_instance(const PlantedInstance& instance, const std::string& path);
PlantedInstance load_instance(const std::string& path);

// (row, col, value) triples of y and s.
void export_csv(const PlantedInstance& instance, const std::string& y_path,
                const std::string& s_path);

const char* to_string(ModelKind model);

}  // namespace lramp

#endif
