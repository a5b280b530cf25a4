#include "hybrid_spkr/hybrid.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "hybrid_spkr/error.hpp"
#include "hybrid_spkr/parallel.hpp"

namespace hybrid_spkr {
namespace {

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
  std::nth_element(v.begin(), mid, v.end());
  if (v.size() % 2 == 1) return *mid;
  const double upper = *mid;
  const double lower = *std::max_element(v.begin(), mid);
  return 0.5 * (lower + upper);
}

void check_models(std::span<const SpeakerModel> models) {
  require(!models.empty(), ErrorCode::kEmptyInput, "no enrolled speakers");
}

}  // namespace

void HybridConfig::validate(std::size_t n_speakers) const {
  require(std::isfinite(alpha) && alpha >= 0.0, ErrorCode::kInvalidArgument, "alpha must be finite and >= 0");
  require(k >= 1 && k <= n_speakers, ErrorCode::kInvalidArgument,
          "k must lie in [1, " + std::to_string(n_speakers) + "], got " + std::to_string(k));
}

void SpeakerModel::validate() const {
  codebook.validate();
  mlp.validate();
  require(codebook.dim() == mlp.n_inputs, ErrorCode::kDimensionMismatch,
          "speaker '" + id + "': codebook and network dimensions differ");
}

double combine_measure(double error, double similarity, double alpha) {
  require(alpha >= 0.0, ErrorCode::kInvalidArgument, "alpha must be >= 0");
  return error - alpha * similarity;
}

std::vector<std::size_t> preselect(std::span<const double> distortions, std::size_t k) {
  require(k >= 1 && k <= distortions.size(), ErrorCode::kInvalidArgument, "k out of range");
  const auto ranked = rank_scores({distortions.begin(), distortions.end()}, RankOrder::kAscending);
  std::vector<std::size_t> out(k);
  for (std::size_t i = 0; i < k; ++i) out[i] = ranked[i].index;
  return out;
}

std::vector<HybridCandidate> fuse_candidates(std::span<const std::size_t> candidates,
                                             std::span<const double> distortions,
                                             std::span<const double> similarities, double alpha) {
  std::vector<HybridCandidate> out;
  out.reserve(candidates.size());
  for (std::size_t s : candidates) {
    out.push_back({s, distortions[s], similarities[s], combine_measure(distortions[s], similarities[s], alpha)});
  }
  std::stable_sort(out.begin(), out.end(), [](const HybridCandidate& a, const HybridCandidate& b) {
    if (a.combined != b.combined) return a.combined < b.combined;
    return a.speaker < b.speaker;
  });
  return out;
}

std::vector<HybridCandidate> hybrid_identify(const FeatureSet& frames, std::span<const SpeakerModel> models,
                                             const HybridConfig& config) {
  check_models(models);
  config.validate(models.size());
  std::vector<double> distortions(models.size());
  for (std::size_t s = 0; s < models.size(); ++s) {
    distortions[s] = quantize_distortion(frames, models[s].codebook, config.criterion);
  }
  const auto chosen = preselect(distortions, config.k);
  std::vector<double> similarities(models.size(), 0.0);
  for (std::size_t s : chosen) similarities[s] = accumulate_similarity(models[s].mlp, frames);
  return fuse_candidates(chosen, distortions, similarities, config.alpha);
}

ScoreTable score_table(std::span<const LabeledUtterance> test, std::span<const SpeakerModel> models,
                       DistortionCriterion criterion, std::size_t jobs) {
  check_models(models);
  require(!test.empty(), ErrorCode::kEmptyInput, "empty test set");
  const std::size_t n = models.size();
  ScoreTable t;
  t.n_speakers = n;
  t.criterion = criterion;
  t.labels.resize(test.size());
  t.names.resize(test.size());
  for (std::size_t u = 0; u < test.size(); ++u) {
    if (test[u].speaker >= n) {
      fail(ErrorCode::kUnknownLabel, "utterance '" + test[u].name + "' has label " + std::to_string(test[u].speaker) +
                                         " but only " + std::to_string(n) + " speakers are enrolled");
    }
    t.labels[u] = test[u].speaker;
    t.names[u] = test[u].name;
  }
  t.distortion.resize(test.size() * n);
  t.similarity.resize(test.size() * n);
  parallel_for(test.size(), jobs, [&](std::size_t u) {
    for (std::size_t s = 0; s < n; ++s) {
      t.distortion[u * n + s] = quantize_distortion(test[u].frames, models[s].codebook, criterion);
      t.similarity[u * n + s] = accumulate_similarity(models[s].mlp, test[u].frames);
    }
  });
  return t;
}

std::string_view to_string(IdMode mode) {
  switch (mode) {
    case IdMode::kVq: return "vq";
    case IdMode::kMlp: return "mlp";
    case IdMode::kHybrid: return "hybrid";
    case IdMode::kPreselectMlp: return "preselect-mlp";
  }
  return "?";
}

IdMode parse_mode(std::string_view text) {
  if (text == "vq") return IdMode::kVq;
  if (text == "mlp") return IdMode::kMlp;
  if (text == "hybrid") return IdMode::kHybrid;
  if (text == "preselect-mlp") return IdMode::kPreselectMlp;
  fail(ErrorCode::kInvalidArgument, "unknown identification mode '" + std::string(text) + "'");
}

std::vector<RankedSpeaker> rank_utterance(const ScoreTable& table, std::size_t u, IdMode mode,
                                          const HybridConfig& config) {
  const auto dist = table.distortions(u);
  const auto sim = table.similarities(u);
  switch (mode) {
    case IdMode::kVq:
      return rank_scores({dist.begin(), dist.end()}, RankOrder::kAscending);
    case IdMode::kMlp:
      return rank_scores({sim.begin(), sim.end()}, RankOrder::kDescending);
    case IdMode::kHybrid: {
      config.validate(table.n_speakers);
      const auto fused = fuse_candidates(preselect(dist, config.k), dist, sim, config.alpha);
      std::vector<RankedSpeaker> out;
      for (const auto& c : fused) out.push_back({c.speaker, c.combined});
      return out;
    }
    case IdMode::kPreselectMlp: {
      config.validate(table.n_speakers);
      const auto chosen = preselect(dist, config.k);
      std::vector<RankedSpeaker> out;
      for (std::size_t s : chosen) out.push_back({s, sim[s]});
      std::stable_sort(out.begin(), out.end(), [](const RankedSpeaker& a, const RankedSpeaker& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.index < b.index;
      });
      return out;
    }
  }
  fail(ErrorCode::kInternal, "unhandled mode");
}

std::size_t decide(const ScoreTable& table, std::size_t u, IdMode mode, const HybridConfig& config) {
  return rank_utterance(table, u, mode, config).front().index;
}

double error_rate(const ScoreTable& table, IdMode mode, const HybridConfig& config) {
  require(table.size() > 0, ErrorCode::kEmptyInput, "empty score table");
  std::size_t errors = 0;
  for (std::size_t u = 0; u < table.size(); ++u) {
    if (decide(table, u, mode, config) != table.labels[u]) ++errors;
  }
  return static_cast<double>(errors) / static_cast<double>(table.size());
}

std::vector<KSweepRow> sweep_k(const ScoreTable& table, double alpha) {
  std::vector<KSweepRow> rows;
  for (std::size_t k = 1; k <= table.n_speakers; ++k) {
    const HybridConfig cfg{alpha, k, table.criterion};
    rows.push_back({k, error_rate(table, IdMode::kHybrid, cfg), error_rate(table, IdMode::kPreselectMlp, cfg)});
  }
  return rows;
}

std::vector<KSweepRow> sweep_k(std::span<const LabeledUtterance> test, std::span<const SpeakerModel> models,
                               double alpha, DistortionCriterion criterion, std::size_t jobs) {
  return sweep_k(score_table(test, models, criterion, jobs), alpha);
}

std::vector<AlphaSweepRow> sweep_alpha(const ScoreTable& table, std::span<const double> grid, std::size_t k) {
  require(!grid.empty(), ErrorCode::kInvalidArgument, "empty alpha grid");
  std::vector<AlphaSweepRow> rows;
  rows.reserve(grid.size());
  for (double a : grid) {
    rows.push_back({a, error_rate(table, IdMode::kHybrid, HybridConfig{a, k, table.criterion})});
  }
  return rows;
}

std::vector<AlphaSweepRow> sweep_alpha(std::span<const LabeledUtterance> test, std::span<const SpeakerModel> models,
                                       std::span<const double> grid, std::size_t k, DistortionCriterion criterion,
                                       std::size_t jobs) {
  return sweep_alpha(score_table(test, models, criterion, jobs), grid, k);
}

AlphaSweepRow select_alpha(std::span<const AlphaSweepRow> rows) {
  require(!rows.empty(), ErrorCode::kInvalidArgument, "empty sweep");
  AlphaSweepRow best = rows.front();
  for (const auto& r : rows) {
    if (r.error < best.error || (r.error == best.error && r.alpha < best.alpha)) best = r;
  }
  return best;
}

std::vector<double> default_alpha_grid(const ScoreTable& table, std::size_t points) {
  require(points >= 2, ErrorCode::kInvalidArgument, "alpha grid needs at least two points");
  double sim = median(table.similarity);
  if (!(sim > 0.0)) sim = 1.0;
  double ratio = median(table.distortion) / sim;
  if (!(ratio > 0.0) || !std::isfinite(ratio)) ratio = 1.0;
  const double hi = 10.0 * ratio;
  const double lo = 1e-3 * ratio;
  std::vector<double> grid{0.0};
  const std::size_t n = points - 1;
  for (std::size_t i = 0; i < n; ++i) {
    const double t = n == 1 ? 1.0 : static_cast<double>(i) / static_cast<double>(n - 1);
    grid.push_back(lo * std::pow(hi / lo, t));
  }
  return grid;
}

double pearson_correlation(std::span<const double> x, std::span<const double> y) {
  require(x.size() == y.size(), ErrorCode::kDimensionMismatch, "score vectors differ in length");
  require(x.size() >= 2, ErrorCode::kUndefinedCorrelation, "need at least two pairs");
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (!(sxx > 0.0) || !(syy > 0.0)) fail(ErrorCode::kUndefinedCorrelation, "zero variance in one of the scores");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

double score_correlation(const ScoreTable& table) { return pearson_correlation(table.distortion, table.similarity); }

double score_correlation(std::span<const LabeledUtterance> test, std::span<const SpeakerModel> models,
                         DistortionCriterion criterion, std::size_t jobs) {
  return score_correlation(score_table(test, models, criterion, jobs));
}

EvalReport evaluate(const ScoreTable& table, IdMode mode, const HybridConfig& config) {
  require(table.size() > 0, ErrorCode::kEmptyInput, "empty test set");
  EvalReport rep;
  rep.mode = mode;
  rep.config = config;
  rep.total = table.size();
  rep.confusion.assign(table.n_speakers, std::vector<std::size_t>(table.n_speakers, 0));
  for (std::size_t u = 0; u < table.size(); ++u) {
    UtteranceResult r;
    r.label = table.labels[u];
    r.name = table.names[u];
    r.ranking = rank_utterance(table, u, mode, config);
    r.predicted = r.ranking.front().index;
    if (r.predicted != r.label) ++rep.errors;
    ++rep.confusion[r.label][r.predicted];
    rep.utterances.push_back(std::move(r));
  }
  rep.error_rate = static_cast<double>(rep.errors) / static_cast<double>(rep.total);
  return rep;
}

EvalReport evaluate(std::span<const LabeledUtterance> test, std::span<const SpeakerModel> models, IdMode mode,
                    const HybridConfig& config, std::size_t jobs) {
  return evaluate(score_table(test, models, config.criterion, jobs), mode, config);
}

}  // namespace hybrid_spkr
