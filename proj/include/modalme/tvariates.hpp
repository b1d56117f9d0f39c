#pragma once

// Monte-Carlo T variates for the corrected score/log-likelihood.  For a
// subject with n_j replicates, T = Z_1 / sqrt(sum_{k=1}^{n_j-1} Z_k^2) with
// Z_k i.i.d. standard normal; |T| <= 1 and the set is drawn once per fit.

#include <cstddef>
#include <random>
#include <vector>

#include "modalme/errors.hpp"

namespace modalme {

struct TVariateSet {
  std::size_t B = 0;
  // t[j] has B entries for subjects with n_j >= 2 and is empty otherwise.
  std::vector<std::vector<double>> t;
};

TVariateSet draw_t_variates(std::size_t n_subjects,
                            const std::vector<int>& n_j_list, std::size_t B,
                            std::mt19937_64& rng);

}  // namespace modalme
