#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "hybrid_spkr/audio.hpp"
#include "hybrid_spkr/frontend.hpp"
#include "hybrid_spkr/hybrid.hpp"
#include "hybrid_spkr/mlp.hpp"
#include "hybrid_spkr/rng.hpp"
#include "hybrid_spkr/vq.hpp"

namespace hybrid_spkr {

// A speaker voice: white noise through an all-pole filter.
struct SyntheticSpeakerSpec {
  // x[n] = sum_k ar_coeffs[k-1] x[n-k] + gain-scaled noise
  std::vector<double> ar_coeffs;
  // RMS of every generated clip.
  double gain = 0.1;
  std::uint64_t seed = 0;
  double min_duration_s = 0.9;
  double max_duration_s = 2.8;

  void validate() const;
};

// Step-down test: every reflection coefficient of the predictor has |k| < 1.
bool is_stable(std::span<const double> ar_coeffs);

// Predictor coefficients whose polynomial has the given complex-conjugate pole
// pairs (radius, angle in radians) plus optional real poles.
std::vector<double> ar_from_poles(std::span<const std::pair<double, double>> pole_pairs,
                                  std::span<const double> real_poles = {});

// Clip `index` of a synthetic speaker at 8 kHz; depends only on (spec, index).
AudioClip synthesize_clip(const SyntheticSpeakerSpec& spec, std::size_t index);
std::vector<AudioClip> generate_synthetic_speaker(const SyntheticSpeakerSpec& spec, std::size_t n_clips);

// Adds seeded white Gaussian noise at the requested signal-to-noise ratio.
AudioClip add_noise(const AudioClip& clip, double snr_db, std::uint64_t seed);

// Reference to clip `index` of the speaker's synthetic spec, optionally noisy.
struct SyntheticClipRef {
  std::size_t index = 0;
  std::optional<double> snr_db;

  friend bool operator==(const SyntheticClipRef&, const SyntheticClipRef&) = default;
};

using ClipSource = std::variant<std::string, SyntheticClipRef>;

struct SpeakerEntry {
  std::string id;
  std::vector<ClipSource> train;
  std::vector<ClipSource> test;
  std::optional<SyntheticSpeakerSpec> synthetic;
};

struct CorpusManifest {
  std::uint64_t seed = 0;
  std::vector<SpeakerEntry> speakers;
  // Relative clip paths resolve against this directory.
  std::filesystem::path base_dir;

  // Every speaker has >= 1 train and >= 1 test clip, disjoint; ids unique.
  void validate() const;
};

CorpusManifest parse_manifest(const std::string& json_text, const std::filesystem::path& base_dir);
std::string manifest_to_json(const CorpusManifest& manifest);
CorpusManifest load_manifest(const std::filesystem::path& path);
void save_manifest(const std::filesystem::path& path, const CorpusManifest& manifest);

// Fingerprint of the manifest content (hex FNV-1a), recorded with trained models.
std::string corpus_hash(const CorpusManifest& manifest);

// Builds a manifest from <root>/<speaker>/{train,test}/*.wav.
CorpusManifest manifest_from_directory(const std::filesystem::path& root, std::uint64_t seed = 0);

AudioClip load_clip(const CorpusManifest& manifest, std::size_t speaker, const ClipSource& source);

struct LoadedCorpus {
  CorpusManifest manifest;
  std::vector<std::vector<AudioClip>> train;
  std::vector<std::vector<AudioClip>> test;
};

LoadedCorpus load_corpus(const std::filesystem::path& manifest_path, std::size_t jobs = 1);

struct SyntheticCorpusConfig {
  std::size_t n_speakers = 10;
  std::size_t clips_per_speaker = 10;
  // Defaults to half of clips_per_speaker when zero.
  std::size_t train_clips = 0;
  std::uint64_t seed = 1;
  // Noise added to test clips only; nullopt leaves them clean.
  std::optional<double> test_snr_db = 5.0;
  // Voices share a base resonance set; each speaker perturbs it by this much.
  double speaker_spread = 0.4;
  double gain = 0.1;

  void validate() const;
};

// Seeded family of distinct, stable AR(12) voices.
std::vector<SyntheticSpeakerSpec> synthetic_voices(const SyntheticCorpusConfig& config);

// Writes <out_dir>/<speaker>/{train,test}_NN.wav and <out_dir>/manifest.json.
CorpusManifest write_synthetic_corpus(const SyntheticCorpusConfig& config, const std::filesystem::path& out_dir,
                                      std::size_t jobs = 1);

// In-memory equivalent of the written corpus (clips resolved through synthetic refs).
CorpusManifest synthetic_manifest(const SyntheticCorpusConfig& config);

struct EnrollConfig {
  int size_bits = 5;
  TrainConfig train;
  FrontendConfig frontend;
  std::size_t jobs = 1;

  void validate() const;
};

struct SpeakerSummary {
  std::string id;
  std::size_t train_frames = 0;
  std::size_t zero_energy_frames = 0;
  double train_distortion = 0.0;
  double final_sse = 0.0;
  std::size_t selected_start = 0;
};

struct Enrollment {
  std::vector<SpeakerModel> models;
  std::vector<SpeakerSummary> summary;
};

struct SpeakerFeatures {
  FeatureSet frames;
  std::size_t zero_energy_frames = 0;
};

// Training features per speaker. Only train clips are read.
std::vector<SpeakerFeatures> extract_train_features(const CorpusManifest& manifest, const FrontendConfig& frontend,
                                                    std::size_t jobs = 1);

// Test utterances labelled with the speaker's position in the manifest.
std::vector<LabeledUtterance> extract_test_set(const CorpusManifest& manifest, const FrontendConfig& frontend,
                                               std::size_t jobs = 1);

std::vector<Codebook> train_codebooks(std::span<const SpeakerFeatures> features, int size_bits, std::uint64_t root_seed,
                                      std::size_t jobs = 1);

// Excitatory = the speaker's own frames; inhibitory = everyone else's, compressed to the same count.
std::vector<MlpModel> train_networks(std::span<const SpeakerFeatures> features, const TrainConfig& config,
                                     std::uint64_t root_seed, std::size_t jobs = 1,
                                     std::vector<TrainReport>* reports = nullptr);

Enrollment enroll(const CorpusManifest& manifest, const EnrollConfig& config);

}  // namespace hybrid_spkr
