#include "hybrid_spkr/features.hpp"

#include "hybrid_spkr/error.hpp"

namespace hybrid_spkr {

FeatureSet::FeatureSet(std::size_t dim, std::vector<double> data) : dim_(dim), data_(std::move(data)) {
  require(dim_ > 0 || data_.empty(), ErrorCode::kDimensionMismatch, "zero-width feature set with data");
  require(dim_ == 0 || data_.size() % dim_ == 0, ErrorCode::kDimensionMismatch,
          "buffer length is not a multiple of the feature dimension");
}

FeatureSet FeatureSet::from_rows(const std::vector<std::vector<double>>& rows) {
  if (rows.empty()) return {};
  FeatureSet out(rows.front().size());
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(r);
  return out;
}

void FeatureSet::push_back(std::span<const double> row) {
  if (dim_ == 0 && data_.empty()) dim_ = row.size();
  require(row.size() == dim_, ErrorCode::kDimensionMismatch, "row length differs from feature dimension");
  data_.insert(data_.end(), row.begin(), row.end());
}

void FeatureSet::append(const FeatureSet& other) {
  if (other.empty()) return;
  if (dim_ == 0 && data_.empty()) dim_ = other.dim_;
  require(other.dim_ == dim_, ErrorCode::kDimensionMismatch, "feature dimensions differ");
  data_.insert(data_.end(), other.data_.begin(), other.data_.end());
}

}  // namespace hybrid_spkr
