#pragma once

#include <cstdint>
#include <span>

namespace hmmfuse {

// Chance-corrected agreement between two decision vectors. Returns 1 when
// both marginals are degenerate and the vectors agree everywhere.
double cohen_kappa(std::span<const std::uint8_t> a, std::span<const std::uint8_t> b);

// Ordinal agreement between two score vectors. Each vector is discretized
// into `bins` quantile bins over its own distribution (ties kept in input
// order), then scored with quadratic weights over the bins x bins table.
double weighted_kappa(std::span<const double> a, std::span<const double> b, int bins = 10);

}  // namespace hmmfuse
