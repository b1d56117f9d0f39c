#include "modalme/data.hpp"

#include <cmath>
#include <string>

namespace modalme {

void validate_dataset(const Dataset& data) {
  if (data.empty()) throw ConfigError("dataset is empty");
  const auto p_rest = data.front().x_rest.size();
  for (std::size_t j = 0; j < data.size(); ++j) {
    const auto& r = data[j];
    const std::string tag = "subject " + std::to_string(j) + ": ";
    if (!(r.y > 0.0 && r.y < 1.0) || !std::isfinite(r.y))
      throw DomainError(tag + "response must lie strictly inside (0,1)");
    if (r.w.empty()) throw DomainError(tag + "needs at least one surrogate");
    for (double v : r.w)
      if (!std::isfinite(v)) throw DomainError(tag + "non-finite surrogate");
    if (r.x_rest.size() != p_rest)
      throw DimensionMismatch(tag + "covariate length differs from subject 0");
    for (int i = 0; i < r.x_rest.size(); ++i)
      if (!std::isfinite(r.x_rest(i)))
        throw DomainError(tag + "non-finite covariate");
  }
}

double estimate_sigma_u2(const Dataset& data) {
  bool any = false;
  double acc = 0.0;
  for (const auto& r : data) {
    if (r.n_rep() >= 2) {
      any = true;
      acc += r.s2() / static_cast<double>(r.n_rep());
    }
  }
  if (!any)
    throw NoReplicatesError(
        "estimating the error variance requires replicate surrogates");
  return acc / static_cast<double>(data.size());
}

}  // namespace modalme
