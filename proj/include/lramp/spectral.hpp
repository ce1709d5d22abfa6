#ifndef LRAMP_SPECTRAL_HPP
#define LRAMP_SPECTRAL_HPP

#include <cstdint>
#include <vector>

#include "lramp/instance.hpp"

namespace lramp {

struct EigenPair {
  double value = 0.0;
  Vec vector;
  bool converged = false;
  int iterations = 0;
};

// Leading eigenpairs of a symmetric matrix by power iteration, deflating
// through re-orthogonalization against the pairs already found. Returned in
// decreasing order of |eigenvalue|; each vector's first nonzero coordinate
// is made positive.
std::vector<EigenPair> top_eigvecs(const Mat& matrix, int k, double tol = 1e-9,
                                   int max_iter = 5000, std::uint64_t seed = 1);

struct SpectralOverlapRow {
  char matrix_kind = 'S';  // 'S' score matrix, 'Y' raw observations
  int index = 0;
  double eigenvalue = 0.0;
  double overlap = 0.0;  // best normalized |<eigvec, planted column>|
};

// Compares how much of the planted signal the top-k eigenvectors of the
// scaled score matrix capture versus those of the raw observation matrix.
std::vector<SpectralOverlapRow> spectral_compare(const PlantedInstance& instance, int k,
                                                 double tol = 1e-9, int max_iter = 5000);

}  // namespace lramp

#endif
