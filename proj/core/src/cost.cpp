#include "hybrid_spkr/cost.hpp"

#include "hybrid_spkr/error.hpp"

namespace hybrid_spkr {

void CostModelParams::validate() const {
  require(n_speakers >= 1 && lpc_order >= 1 && codebook_size >= 1 && n_inputs >= 1 && n_hidden >= 1 &&
              transfer_cost >= 1,
          ErrorCode::kInvalidArgument, "cost-model parameters must be positive");
  require(k >= 0, ErrorCode::kInvalidArgument, "k must be non-negative");
}

std::int64_t cost_vq(const CostModelParams& params) {
  params.validate();
  return params.codebook_size * params.lpc_order * params.n_speakers;
}

std::int64_t cost_combined(const CostModelParams& params) {
  const std::int64_t per_network =
      params.n_inputs * params.n_hidden + params.n_hidden + params.transfer_cost * params.n_hidden;
  return cost_vq(params) + params.k * per_network;
}

double cost_ratio(const CostModelParams& baseline, const CostModelParams& combined) {
  return static_cast<double>(cost_vq(baseline)) / static_cast<double>(cost_combined(combined));
}

}  // namespace hybrid_spkr
