#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace hybrid_spkr {

inline constexpr int kDefaultLpcOrder = 12;

// A sequence of equal-length feature vectors (LPCC frames, codebook
// centroids, training sets) stored row-major in one contiguous buffer.
class FeatureSet {
 public:
  FeatureSet() = default;
  explicit FeatureSet(std::size_t dim) : dim_(dim) {}
  FeatureSet(std::size_t dim, std::vector<double> data);
  FeatureSet(std::size_t rows, std::size_t dim, double fill) : dim_(dim), data_(rows * dim, fill) {}

  static FeatureSet from_rows(const std::vector<std::vector<double>>& rows);

  std::size_t dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return dim_ == 0 ? 0 : data_.size() / dim_; }
  bool empty() const noexcept { return data_.empty(); }

  std::span<const double> operator[](std::size_t i) const { return {data_.data() + i * dim_, dim_}; }
  std::span<double> operator[](std::size_t i) { return {data_.data() + i * dim_, dim_}; }

  void push_back(std::span<const double> row);
  void append(const FeatureSet& other);
  void reserve(std::size_t rows) { data_.reserve(rows * dim_); }

  const std::vector<double>& data() const noexcept { return data_; }
  std::vector<double>& data() noexcept { return data_; }

  friend bool operator==(const FeatureSet&, const FeatureSet&) = default;

 private:
  std::size_t dim_ = 0;
  std::vector<double> data_;
};

}  // namespace hybrid_spkr
