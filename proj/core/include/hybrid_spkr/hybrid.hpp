#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "hybrid_spkr/features.hpp"
#include "hybrid_spkr/mlp.hpp"
#include "hybrid_spkr/vq.hpp"

namespace hybrid_spkr {

struct HybridConfig {
  double alpha = 0.0;
  std::size_t k = 2;
  DistortionCriterion criterion = DistortionCriterion::kMse;

  void validate(std::size_t n_speakers) const;
};

struct SpeakerModel {
  std::string id;
  Codebook codebook;
  MlpModel mlp;

  void validate() const;

  friend bool operator==(const SpeakerModel&, const SpeakerModel&) = default;
};

// error - alpha * similarity; lower is better.
double combine_measure(double error, double similarity, double alpha);

struct HybridCandidate {
  std::size_t speaker = 0;
  double distortion = 0.0;
  double similarity = 0.0;
  double combined = 0.0;

  friend bool operator==(const HybridCandidate&, const HybridCandidate&) = default;
};

// The K lowest distortions (ties to the lower index), in VQ order.
std::vector<std::size_t> preselect(std::span<const double> distortions, std::size_t k);

// Fuses preselected candidates and sorts them ascending by combined measure.
std::vector<HybridCandidate> fuse_candidates(std::span<const std::size_t> candidates,
                                             std::span<const double> distortions,
                                             std::span<const double> similarities, double alpha);

// VQ preselection of K speakers, MLP rescoring of only those K, fusion.
// Returns exactly K candidates; the rest of the speakers are not ranked.
std::vector<HybridCandidate> hybrid_identify(const FeatureSet& frames, std::span<const SpeakerModel> models,
                                             const HybridConfig& config);

struct LabeledUtterance {
  std::size_t speaker = 0;
  std::string name;
  FeatureSet frames;
};

// Distortions and similarities of every (utterance, speaker) pair.
struct ScoreTable {
  std::size_t n_speakers = 0;
  DistortionCriterion criterion = DistortionCriterion::kMse;
  std::vector<std::size_t> labels;
  std::vector<std::string> names;
  std::vector<double> distortion;  // utterance-major
  std::vector<double> similarity;

  std::size_t size() const noexcept { return labels.size(); }
  std::span<const double> distortions(std::size_t u) const { return {distortion.data() + u * n_speakers, n_speakers}; }
  std::span<const double> similarities(std::size_t u) const { return {similarity.data() + u * n_speakers, n_speakers}; }
};

ScoreTable score_table(std::span<const LabeledUtterance> test, std::span<const SpeakerModel> models,
                       DistortionCriterion criterion, std::size_t jobs = 1);

enum class IdMode {
  kVq,
  kMlp,
  kHybrid,
  // VQ preselects K, the networks alone rank them.
  kPreselectMlp,
};

std::string_view to_string(IdMode mode);
IdMode parse_mode(std::string_view text);

// Top-1 decision for utterance `u`. `config` supplies alpha and K where relevant.
std::size_t decide(const ScoreTable& table, std::size_t u, IdMode mode, const HybridConfig& config);

double error_rate(const ScoreTable& table, IdMode mode, const HybridConfig& config);

struct KSweepRow {
  std::size_t k = 0;
  double combined_error = 0.0;
  double mlp_only_error = 0.0;
};

// K = 1..N for the combined scheme and for preselect-then-MLP.
std::vector<KSweepRow> sweep_k(const ScoreTable& table, double alpha);
std::vector<KSweepRow> sweep_k(std::span<const LabeledUtterance> test, std::span<const SpeakerModel> models,
                               double alpha, DistortionCriterion criterion, std::size_t jobs = 1);

struct AlphaSweepRow {
  double alpha = 0.0;
  double error = 0.0;
};

std::vector<AlphaSweepRow> sweep_alpha(const ScoreTable& table, std::span<const double> grid, std::size_t k);
std::vector<AlphaSweepRow> sweep_alpha(std::span<const LabeledUtterance> test, std::span<const SpeakerModel> models,
                                       std::span<const double> grid, std::size_t k, DistortionCriterion criterion,
                                       std::size_t jobs = 1);

// Grid argmin; ties go to the smallest alpha.
AlphaSweepRow select_alpha(std::span<const AlphaSweepRow> rows);

// 0 followed by points-1 log-spaced values up to 10x the ratio of median
// distortion to median similarity.
std::vector<double> default_alpha_grid(const ScoreTable& table, std::size_t points = 100);

// Pearson correlation. Throws kUndefinedCorrelation when either side is constant.
double pearson_correlation(std::span<const double> x, std::span<const double> y);

// Correlation between distortions and similarities over all pairs.
double score_correlation(const ScoreTable& table);
double score_correlation(std::span<const LabeledUtterance> test, std::span<const SpeakerModel> models,
                         DistortionCriterion criterion = DistortionCriterion::kMse, std::size_t jobs = 1);

struct UtteranceResult {
  std::size_t label = 0;
  std::string name;
  std::size_t predicted = 0;
  std::vector<RankedSpeaker> ranking;
};

struct EvalReport {
  IdMode mode = IdMode::kVq;
  HybridConfig config;
  std::size_t total = 0;
  std::size_t errors = 0;
  double error_rate = 0.0;
  // confusion[true][predicted]
  std::vector<std::vector<std::size_t>> confusion;
  std::vector<UtteranceResult> utterances;
};

EvalReport evaluate(const ScoreTable& table, IdMode mode, const HybridConfig& config);
EvalReport evaluate(std::span<const LabeledUtterance> test, std::span<const SpeakerModel> models, IdMode mode,
                    const HybridConfig& config, std::size_t jobs = 1);

// Ranked list for one utterance under `mode`; the scores are what that mode ranks by.
std::vector<RankedSpeaker> rank_utterance(const ScoreTable& table, std::size_t u, IdMode mode,
                                          const HybridConfig& config);

}  // namespace hybrid_spkr
