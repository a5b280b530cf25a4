#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "hybrid_spkr/corpus.hpp"
#include "hybrid_spkr/hybrid.hpp"

namespace hybrid_spkr {

// Reproducibility record written next to the per-speaker model files.
struct ModelIndex {
  std::string corpus_hash;
  std::uint64_t seed = 0;
  int size_bits = 0;
  FrontendConfig frontend;
  TrainConfig train;
  std::vector<std::string> speaker_ids;
  std::vector<std::string> files;
};

// Versioned JSON record: {id, codebook{size_bits, p, centroids, train_distortion, seed}, mlp{...}}.
// Doubles are written in shortest round-trip form, so save -> load -> save is byte-identical.
std::string model_to_json(const SpeakerModel& model);
SpeakerModel model_from_json(const std::string& text, const std::string& origin = "<memory>");

std::string codebook_to_json(const Codebook& codebook);
Codebook codebook_from_json(const std::string& text);

std::string index_to_json(const ModelIndex& index);
ModelIndex index_from_json(const std::string& text);

struct ModelStore {
  ModelIndex index;
  std::vector<SpeakerModel> models;
};

// Writes model_NNN.json per speaker and index.json into `dir` (created if needed).
void save_models(const std::filesystem::path& dir, const std::vector<SpeakerModel>& models, ModelIndex index);
ModelStore load_models(const std::filesystem::path& dir);

}  // namespace hybrid_spkr
