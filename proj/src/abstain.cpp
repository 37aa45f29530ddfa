#include "calguard/abstain.hpp"

#include <algorithm>
#include <limits>

#include "calguard/errors.hpp"

namespace calguard::abstain {

void AbstainConfig::validate() const {
  if (!(tau >= 0.0 && tau <= 1.0)) throw ConfigError("abstain: tau must be in [0,1]");
}

std::optional<std::size_t> gate(std::span<const double> probs, double tau) {
  const std::size_t k = nets::argmax(probs);
  // Ties (g == tau) abstain.
  if (1.0 - probs[k] < tau) return k;
  return std::nullopt;
}

AbstentionStats abstention_stats(const nets::ModelParams& model, const data::Dataset& data,
                                 const data::RegionSpec& region, double tau) {
  AbstainConfig{tau}.validate();
  if (data.rows == 0) throw InvalidInput("abstention_stats: empty dataset");
  const auto mask = data.region ? *data.region : data::region_mask(data, region);
  std::size_t abst_in = 0;
  std::size_t abst_out = 0;
  AbstentionStats s;
  for (std::size_t i = 0; i < data.rows; ++i) {
    const auto p = nets::softmax_probs(nets::forward(model, data.row(i)), model.temperature);
    const bool abstained = !gate(p, tau).has_value();
    if (mask[i]) {
      ++s.n_inside;
      abst_in += abstained;
    } else {
      ++s.n_outside;
      abst_out += abstained;
    }
  }
  constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
  s.rate_inside = s.n_inside ? static_cast<double>(abst_in) / static_cast<double>(s.n_inside) : kNaN;
  s.rate_outside =
      s.n_outside ? static_cast<double>(abst_out) / static_cast<double>(s.n_outside) : kNaN;
  return s;
}

}  // namespace calguard::abstain
