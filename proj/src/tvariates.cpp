#include "modalme/tvariates.hpp"

#include <cmath>

namespace modalme {

TVariateSet draw_t_variates(std::size_t n_subjects,
                            const std::vector<int>& n_j_list, std::size_t B,
                            std::mt19937_64& rng) {
  if (B < 1) throw ConfigError("T variate draws need B >= 1");
  if (n_j_list.size() != n_subjects)
    throw DimensionMismatch("replicate-count list length mismatch");
  TVariateSet out;
  out.B = B;
  out.t.resize(n_subjects);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (std::size_t j = 0; j < n_subjects; ++j) {
    if (n_j_list[j] < 2) continue;
    auto& row = out.t[j];
    row.resize(B);
    for (std::size_t b = 0; b < B; ++b) {
      const double z1 = normal(rng);
      double ss = z1 * z1;
      for (int k = 1; k < n_j_list[j] - 1; ++k) {
        const double z = normal(rng);
        ss += z * z;
      }
      row[b] = z1 / std::sqrt(ss);
    }
  }
  return out;
}

}  // namespace modalme
