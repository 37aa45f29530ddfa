#pragma once

#include <cstddef>
#include <optional>
#include <span>

#include "calguard/data.hpp"
#include "calguard/nets.hpp"

namespace calguard::abstain {

struct AbstainConfig {
  double tau = 0.45;

  void validate() const;
};

// Predicts argmax when 1 - max(probs) < tau, otherwise abstains (nullopt).
std::optional<std::size_t> gate(std::span<const double> probs, double tau);

// Rates are NaN when one side of the region is empty.
struct AbstentionStats {
  double rate_inside = 0.0;
  double rate_outside = 0.0;
  std::size_t n_inside = 0;
  std::size_t n_outside = 0;
};

AbstentionStats abstention_stats(const nets::ModelParams& model, const data::Dataset& data,
                                 const data::RegionSpec& region, double tau);

}  // namespace calguard::abstain
