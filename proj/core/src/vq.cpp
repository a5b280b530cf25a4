#include "hybrid_spkr/vq.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "hybrid_spkr/error.hpp"

namespace hybrid_spkr {
namespace {

double squared_distance(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    acc += d * d;
  }
  return acc;
}

// Squared distance, abandoned once it exceeds `bound`. Any value that is returned
// below `bound` is bit-identical to the full sum.
double bounded_squared_distance(std::span<const double> a, std::span<const double> b, double bound) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    acc += d * d;
    if (acc > bound) return acc;
  }
  return acc;
}

struct Assignment {
  std::vector<std::size_t> cell;
  std::vector<std::size_t> counts;
  std::vector<double> cell_distortion;
  double total = 0.0;
};

Assignment assign(const FeatureSet& vectors, const FeatureSet& centroids) {
  Assignment a;
  a.cell.resize(vectors.size());
  a.counts.assign(centroids.size(), 0);
  a.cell_distortion.assign(centroids.size(), 0.0);
  for (std::size_t i = 0; i < vectors.size(); ++i) {
    const auto x = vectors[i];
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < centroids.size(); ++c) {
      const double d = bounded_squared_distance(x, centroids[c], best_d);
      if (d < best_d) {
        best_d = d;
        best = c;
      }
    }
    a.cell[i] = best;
    ++a.counts[best];
    a.cell_distortion[best] += best_d;
    a.total += best_d;
  }
  return a;
}

void update_means(FeatureSet& centroids, const FeatureSet& vectors, const Assignment& a) {
  const std::size_t dim = vectors.dim();
  std::vector<double> sums(centroids.size() * dim, 0.0);
  for (std::size_t i = 0; i < vectors.size(); ++i) {
    const auto x = vectors[i];
    double* s = sums.data() + a.cell[i] * dim;
    for (std::size_t j = 0; j < dim; ++j) s[j] += x[j];
  }
  for (std::size_t c = 0; c < centroids.size(); ++c) {
    if (a.counts[c] == 0) continue;
    auto row = centroids[c];
    const double count = static_cast<double>(a.counts[c]);
    for (std::size_t j = 0; j < dim; ++j) row[j] = sums[c * dim + j] / count;
  }
}

std::vector<std::size_t> members_of(std::span<const std::size_t> assignment, std::size_t cell) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < assignment.size(); ++i) {
    if (assignment[i] == cell) out.push_back(i);
  }
  return out;
}

// Lloyd iterations from the current centroids. Empty cells are repaired in place.
void lloyd(FeatureSet& centroids, const FeatureSet& vectors, const LbgOptions& options, Rng& rng,
           std::vector<double>& trace, std::size_t& repairs, std::vector<std::size_t>& final_cells) {
  const double n = static_cast<double>(vectors.size());
  double prev = std::numeric_limits<double>::infinity();
  std::vector<std::size_t> prev_cells;
  for (int it = 0; it < options.max_iterations; ++it) {
    Assignment a = assign(vectors, centroids);
    const double avg = a.total / n;
    trace.push_back(avg);

    bool repaired = false;
    for (std::size_t c = 0; c < centroids.size(); ++c) {
      if (a.counts[c] != 0) continue;
      handle_empty_cell(centroids, a.cell, vectors, c, options, rng);
      ++repairs;
      repaired = true;
    }
    update_means(centroids, vectors, a);

    const bool unchanged = a.cell == prev_cells;
    const bool small_gain = std::isfinite(prev) && (prev <= 0.0 || (prev - avg) <= options.relative_tolerance * prev);
    prev_cells = std::move(a.cell);
    if (!repaired && (unchanged || small_gain)) break;
    prev = avg;
  }
  Assignment last = assign(vectors, centroids);
  trace.push_back(last.total / n);
  final_cells = std::move(last.cell);
}

bool matches_any(std::span<const double> x, const FeatureSet& centroids) {
  for (std::size_t c = 0; c < centroids.size(); ++c) {
    const auto y = centroids[c];
    if (std::equal(x.begin(), x.end(), y.begin())) return true;
  }
  return false;
}

}  // namespace

std::string_view to_string(DistortionCriterion criterion) {
  return criterion == DistortionCriterion::kMse ? "mse" : "mad";
}

DistortionCriterion parse_criterion(std::string_view text) {
  if (text == "mse" || text == "MSE") return DistortionCriterion::kMse;
  if (text == "mad" || text == "MAD") return DistortionCriterion::kMad;
  fail(ErrorCode::kInvalidArgument, "unknown distortion criterion '" + std::string(text) + "'");
}

double frame_distortion(std::span<const double> a, std::span<const double> b, DistortionCriterion criterion) {
  require(a.size() == b.size(), ErrorCode::kDimensionMismatch, "vector lengths differ");
  if (criterion == DistortionCriterion::kMse) return squared_distance(a, b);
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += std::abs(a[i] - b[i]);
  return acc;
}

void Codebook::validate() const {
  require(size_bits >= kMinCodebookBits && size_bits <= kMaxCodebookBits, ErrorCode::kInvalidArgument,
          "codebook size must be 1..10 bits, got " + std::to_string(size_bits));
  require(centroids.size() == (std::size_t{1} << size_bits), ErrorCode::kDimensionMismatch,
          "centroid count does not match 2^size_bits");
  require(std::all_of(centroids.data().begin(), centroids.data().end(), [](double v) { return std::isfinite(v); }),
          ErrorCode::kInvalidArgument, "non-finite centroid");
  require(std::isfinite(train_distortion) && train_distortion >= 0.0, ErrorCode::kInvalidArgument,
          "training distortion must be finite and non-negative");
}

std::size_t nearest_centroid(std::span<const double> x, const FeatureSet& centroids) {
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < centroids.size(); ++c) {
    const double d = bounded_squared_distance(x, centroids[c], best_d);
    if (d < best_d) {
      best_d = d;
      best = c;
    }
  }
  return best;
}

SplitAxis principal_axis(const FeatureSet& vectors, std::span<const std::size_t> members,
                         std::span<const double> centre, int iterations, Rng& rng) {
  const std::size_t dim = vectors.dim();
  SplitAxis axis;
  axis.direction.assign(dim, 0.0);
  std::normal_distribution<double> gauss;
  for (double& v : axis.direction) v = gauss(rng);
  if (members.size() < 2) {
    axis.direction.assign(dim, 0.0);
    axis.direction[0] = 1.0;
    return axis;
  }

  std::vector<double> cov(dim * dim, 0.0);
  std::vector<double> diff(dim);
  for (std::size_t m : members) {
    const auto x = vectors[m];
    for (std::size_t j = 0; j < dim; ++j) diff[j] = x[j] - centre[j];
    for (std::size_t r = 0; r < dim; ++r) {
      for (std::size_t c = 0; c < dim; ++c) cov[r * dim + c] += diff[r] * diff[c];
    }
  }
  const double inv = 1.0 / static_cast<double>(members.size());
  for (double& v : cov) v *= inv;

  auto normalize = [](std::vector<double>& v) {
    double norm = 0.0;
    for (double x : v) norm += x * x;
    norm = std::sqrt(norm);
    if (norm == 0.0) return false;
    for (double& x : v) x /= norm;
    return true;
  };
  normalize(axis.direction);
  std::vector<double> next(dim);
  for (int it = 0; it < iterations; ++it) {
    for (std::size_t r = 0; r < dim; ++r) {
      double acc = 0.0;
      for (std::size_t c = 0; c < dim; ++c) acc += cov[r * dim + c] * axis.direction[c];
      next[r] = acc;
    }
    if (!normalize(next)) break;
    axis.direction.swap(next);
  }

  double var = 0.0;
  for (std::size_t r = 0; r < dim; ++r) {
    double acc = 0.0;
    for (std::size_t c = 0; c < dim; ++c) acc += cov[r * dim + c] * axis.direction[c];
    var += axis.direction[r] * acc;
  }
  axis.stddev = std::sqrt(std::max(var, 0.0));
  return axis;
}

void handle_empty_cell(FeatureSet& centroids, std::span<const std::size_t> assignment, const FeatureSet& vectors,
                       std::size_t empty_cell, const LbgOptions& options, Rng& rng) {
  std::vector<std::size_t> counts(centroids.size(), 0);
  for (std::size_t c : assignment) ++counts[c];
  if (counts[empty_cell] != 0) return;
  const auto owner = static_cast<std::size_t>(std::max_element(counts.begin(), counts.end()) - counts.begin());
  if (counts[owner] == 0) fail(ErrorCode::kInternal, "every cell is empty");

  const auto members = members_of(assignment, owner);
  const auto axis = principal_axis(vectors, members, centroids[owner], options.power_iterations, rng);
  const double eps = options.split_scale * axis.stddev;
  std::vector<double> candidate(centroids[owner].begin(), centroids[owner].end());
  for (std::size_t j = 0; j < candidate.size(); ++j) candidate[j] += eps * axis.direction[j];
  if (eps > 0.0 && !matches_any(candidate, centroids)) {
    std::copy(candidate.begin(), candidate.end(), centroids[empty_cell].begin());
    return;
  }

  // The owner has no spread, or an earlier repair already took this spot: move onto the
  // worst-quantized vector that is not yet a centroid. With fewer distinct vectors than
  // cells there is none, and the cell stays a copy of the owner.
  std::size_t worst = vectors.size();
  double worst_d = 0.0;
  for (std::size_t i = 0; i < vectors.size(); ++i) {
    const double d = squared_distance(vectors[i], centroids[assignment[i]]);
    if (d > worst_d && !matches_any(vectors[i], centroids)) {
      worst_d = d;
      worst = i;
    }
  }
  const auto target = worst < vectors.size() ? vectors[worst] : centroids[owner];
  std::copy(target.begin(), target.end(), centroids[empty_cell].begin());
}

FeatureSet lbg_centroids(const FeatureSet& vectors, std::size_t count, std::uint64_t seed, const LbgOptions& options,
                         LbgTrace* trace) {
  require(count >= 1, ErrorCode::kInvalidArgument, "codebook needs at least one centroid");
  require(!vectors.empty(), ErrorCode::kEmptyInput, "no training vectors");
  require(vectors.size() >= count, ErrorCode::kInsufficientData,
          std::to_string(vectors.size()) + " vectors for " + std::to_string(count) + " centroids");
  require(std::all_of(vectors.data().begin(), vectors.data().end(), [](double v) { return std::isfinite(v); }),
          ErrorCode::kInvalidArgument, "non-finite training vector");

  Rng rng(seed);
  LbgTrace local;
  LbgTrace& tr = trace ? *trace : local;
  tr = {};
  const std::size_t dim = vectors.dim();

  FeatureSet centroids(1, dim, 0.0);
  std::vector<std::size_t> cells(vectors.size(), 0);
  {
    std::vector<double> mean(dim, 0.0);
    for (std::size_t i = 0; i < vectors.size(); ++i) {
      for (std::size_t j = 0; j < dim; ++j) mean[j] += vectors[i][j];
    }
    for (std::size_t j = 0; j < dim; ++j) centroids[0][j] = mean[j] / static_cast<double>(vectors.size());
    double total = 0.0;
    for (std::size_t i = 0; i < vectors.size(); ++i) total += squared_distance(vectors[i], centroids[0]);
    tr.iterations.push_back({total / static_cast<double>(vectors.size())});
    tr.level_final.push_back(tr.iterations.back().back());
  }

  while (centroids.size() < count) {
    const std::size_t current = centroids.size();
    const std::size_t n_split = std::min(current, count - current);

    std::vector<std::size_t> order(current);
    std::iota(order.begin(), order.end(), 0);
    if (n_split < current) {
      std::vector<double> cell_d(current, 0.0);
      for (std::size_t i = 0; i < vectors.size(); ++i) cell_d[cells[i]] += squared_distance(vectors[i], centroids[cells[i]]);
      std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return cell_d[a] > cell_d[b]; });
      order.resize(n_split);
      std::sort(order.begin(), order.end());
    }

    FeatureSet next = centroids;
    next.reserve(current + n_split);
    std::vector<double> plus(dim), minus(dim);
    for (std::size_t c : order) {
      const auto members = members_of(cells, c);
      const auto axis = principal_axis(vectors, members, centroids[c], options.power_iterations, rng);
      const double eps = options.split_scale * axis.stddev;
      for (std::size_t j = 0; j < dim; ++j) {
        minus[j] = centroids[c][j] - eps * axis.direction[j];
        plus[j] = centroids[c][j] + eps * axis.direction[j];
      }
      std::copy(minus.begin(), minus.end(), next[c].begin());
      next.push_back(plus);
    }
    centroids = std::move(next);

    tr.iterations.emplace_back();
    lloyd(centroids, vectors, options, rng, tr.iterations.back(), tr.empty_cells_repaired, cells);
    tr.level_final.push_back(tr.iterations.back().back());
  }
  return centroids;
}

Codebook lbg_train(const FeatureSet& vectors, int size_bits, std::uint64_t seed, const LbgOptions& options,
                   LbgTrace* trace) {
  require(size_bits >= kMinCodebookBits && size_bits <= kMaxCodebookBits, ErrorCode::kInvalidArgument,
          "codebook size must be 1..10 bits, got " + std::to_string(size_bits));
  LbgTrace local;
  LbgTrace& tr = trace ? *trace : local;
  Codebook cb;
  cb.centroids = lbg_centroids(vectors, std::size_t{1} << size_bits, seed, options, &tr);
  cb.size_bits = size_bits;
  cb.train_distortion = tr.level_final.back();
  cb.seed = seed;
  return cb;
}

double quantize_distortion(const FeatureSet& frames, const Codebook& codebook, DistortionCriterion criterion) {
  require(!frames.empty(), ErrorCode::kEmptyInput, "no frames to quantize");
  require(!codebook.centroids.empty(), ErrorCode::kEmptyInput, "empty codebook");
  require(frames.dim() == codebook.dim(), ErrorCode::kDimensionMismatch, "frame and codebook dimensions differ");
  const auto& cents = codebook.centroids;
  double total = 0.0;
  for (std::size_t f = 0; f < frames.size(); ++f) {
    const auto x = frames[f];
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < cents.size(); ++c) {
      const auto y = cents[c];
      double d = 0.0;
      if (criterion == DistortionCriterion::kMse) {
        for (std::size_t j = 0; j < x.size(); ++j) d += (x[j] - y[j]) * (x[j] - y[j]);
      } else {
        for (std::size_t j = 0; j < x.size(); ++j) d += std::abs(x[j] - y[j]);
      }
      best = std::min(best, d);
    }
    total += best;
  }
  return total;
}

std::vector<RankedSpeaker> vq_identify(const FeatureSet& frames, std::span<const Codebook> models,
                                       DistortionCriterion criterion) {
  require(!models.empty(), ErrorCode::kEmptyInput, "no enrolled codebooks");
  std::vector<double> scores(models.size());
  for (std::size_t i = 0; i < models.size(); ++i) scores[i] = quantize_distortion(frames, models[i], criterion);
  return rank_scores(scores, RankOrder::kAscending);
}

std::vector<RankedSpeaker> rank_scores(const std::vector<double>& scores, RankOrder order) {
  std::vector<RankedSpeaker> out(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) out[i] = {i, scores[i]};
  std::stable_sort(out.begin(), out.end(), [order](const RankedSpeaker& a, const RankedSpeaker& b) {
    return order == RankOrder::kAscending ? a.score < b.score : a.score > b.score;
  });
  return out;
}

}  // namespace hybrid_spkr
