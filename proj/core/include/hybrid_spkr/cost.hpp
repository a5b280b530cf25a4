#pragma once

#include <cstdint>

namespace hybrid_spkr {

// Operation-count model for identification of one test vector.
struct CostModelParams {
  std::int64_t n_speakers = 1;
  std::int64_t lpc_order = 12;
  std::int64_t codebook_size = 32;
  // Preselected speakers rescored by their networks; 0 means plain VQ.
  std::int64_t k = 2;
  std::int64_t n_inputs = 12;
  std::int64_t n_hidden = 16;
  // Instructions per evaluation of the sigmoid.
  std::int64_t transfer_cost = 10;

  void validate() const;
};

// codebook_size * lpc_order * n_speakers
std::int64_t cost_vq(const CostModelParams& params);

// cost_vq + k * (n_inputs * n_hidden + n_hidden + transfer_cost * n_hidden)
std::int64_t cost_combined(const CostModelParams& params);

// cost_vq(baseline) / cost_combined(combined).
double cost_ratio(const CostModelParams& baseline, const CostModelParams& combined);

}  // namespace hybrid_spkr
