#include "hybrid_spkr/model_store.hpp"

#include <cstdio>
#include <fstream>
#include <iterator>

#include "hybrid_spkr/error.hpp"
#include "json.hpp"

namespace hybrid_spkr {
namespace {

using Json = nlohmann::ordered_json;

constexpr char kModelFormat[] = "hybrid-spkr-model";
constexpr char kIndexFormat[] = "hybrid-spkr-index";
constexpr int kVersion = 1;

Json codebook_json(const Codebook& cb) {
  Json j;
  j["size_bits"] = cb.size_bits;
  j["p"] = cb.dim();
  j["centroids"] = cb.centroids.data();
  j["train_distortion"] = cb.train_distortion;
  j["seed"] = cb.seed;
  return j;
}

Codebook codebook_from(const Json& j) {
  Codebook cb;
  cb.size_bits = j.at("size_bits").get<int>();
  const auto p = j.at("p").get<std::size_t>();
  require(p >= 1, ErrorCode::kMalformedModel, "codebook dimension must be positive");
  cb.centroids = FeatureSet(p, j.at("centroids").get<std::vector<double>>());
  cb.train_distortion = j.at("train_distortion").get<double>();
  cb.seed = j.at("seed").get<std::uint64_t>();
  return cb;
}

Json mlp_json(const MlpModel& m) {
  Json j;
  j["n_i"] = m.n_inputs;
  j["n_h1"] = m.n_hidden;
  j["w1"] = m.w1;
  j["b1"] = m.b1;
  j["w2"] = m.w2;
  j["b2"] = m.b2;
  if (!m.input_mean.empty()) {
    j["input_mean"] = m.input_mean;
    j["input_scale"] = m.input_scale;
  }
  return j;
}

MlpModel mlp_from(const Json& j) {
  MlpModel m;
  m.n_inputs = j.at("n_i").get<std::size_t>();
  m.n_hidden = j.at("n_h1").get<std::size_t>();
  m.w1 = j.at("w1").get<std::vector<double>>();
  m.b1 = j.at("b1").get<std::vector<double>>();
  m.w2 = j.at("w2").get<std::vector<double>>();
  m.b2 = j.at("b2").get<double>();
  if (j.contains("input_mean")) {
    m.input_mean = j.at("input_mean").get<std::vector<double>>();
    m.input_scale = j.at("input_scale").get<std::vector<double>>();
  }
  return m;
}

Json parse_or_fail(const std::string& text, const std::string& origin) {
  try {
    return Json::parse(text);
  } catch (const Json::exception& e) {
    fail(ErrorCode::kMalformedModel, origin + ": " + e.what());
  }
}

void check_header(const Json& j, const char* format, const std::string& origin) {
  if (!j.is_object() || j.value("format", std::string{}) != format) {
    fail(ErrorCode::kMalformedModel, origin + ": not a " + format + " record");
  }
  if (j.value("version", 0) != kVersion) {
    fail(ErrorCode::kMalformedModel, origin + ": unsupported version");
  }
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    if (!std::filesystem::exists(path)) fail(ErrorCode::kMissingFile, path.string());
    fail(ErrorCode::kIo, "cannot open " + path.string());
  }
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::kIo, "cannot write " + path.string());
  out << text;
  if (!out) fail(ErrorCode::kIo, "short write to " + path.string());
}

}  // namespace

std::string model_to_json(const SpeakerModel& model) {
  Json j;
  j["format"] = kModelFormat;
  j["version"] = kVersion;
  j["id"] = model.id;
  j["codebook"] = codebook_json(model.codebook);
  j["mlp"] = mlp_json(model.mlp);
  return j.dump() + "\n";
}

SpeakerModel model_from_json(const std::string& text, const std::string& origin) {
  const Json j = parse_or_fail(text, origin);
  check_header(j, kModelFormat, origin);
  SpeakerModel m;
  try {
    m.id = j.at("id").get<std::string>();
    m.codebook = codebook_from(j.at("codebook"));
    m.mlp = mlp_from(j.at("mlp"));
  } catch (const Json::exception& e) {
    fail(ErrorCode::kMalformedModel, origin + ": " + e.what());
  } catch (const Error& e) {
    fail(ErrorCode::kMalformedModel, origin + ": " + e.what());
  }
  try {
    m.validate();
  } catch (const Error& e) {
    fail(ErrorCode::kMalformedModel, origin + ": " + e.what());
  }
  return m;
}

std::string codebook_to_json(const Codebook& codebook) { return codebook_json(codebook).dump(); }

Codebook codebook_from_json(const std::string& text) {
  try {
    return codebook_from(parse_or_fail(text, "<codebook>"));
  } catch (const Json::exception& e) {
    fail(ErrorCode::kMalformedModel, e.what());
  }
}

std::string index_to_json(const ModelIndex& index) {
  Json j;
  j["format"] = kIndexFormat;
  j["version"] = kVersion;
  j["corpus_hash"] = index.corpus_hash;
  j["seed"] = index.seed;
  j["size_bits"] = index.size_bits;
  j["frontend"] = {{"preemphasis_coeff", index.frontend.preemphasis_coeff},
                   {"frame_len_ms", index.frontend.frame_len_ms},
                   {"overlap_fraction", index.frontend.overlap_fraction},
                   {"lpc_order", index.frontend.lpc_order}};
  j["train"] = {{"n_starts", index.train.n_starts},
                {"epochs_per_start", index.train.epochs_per_start},
                {"final_epochs", index.train.final_epochs},
                {"mu_init", index.train.mu_init},
                {"mu_factor", index.train.mu_factor},
                {"mu_max", index.train.mu_max},
                {"early_stop_relative", index.train.early_stop_relative},
                {"n_hidden", index.train.n_hidden},
                {"normalize_inputs", index.train.normalize_inputs}};
  Json speakers = Json::array();
  for (std::size_t i = 0; i < index.speaker_ids.size(); ++i) {
    speakers.push_back({{"id", index.speaker_ids[i]}, {"file", index.files.at(i)}});
  }
  j["speakers"] = std::move(speakers);
  return j.dump(2) + "\n";
}

ModelIndex index_from_json(const std::string& text) {
  const Json j = parse_or_fail(text, "index.json");
  check_header(j, kIndexFormat, "index.json");
  ModelIndex idx;
  try {
    idx.corpus_hash = j.at("corpus_hash").get<std::string>();
    idx.seed = j.at("seed").get<std::uint64_t>();
    idx.size_bits = j.at("size_bits").get<int>();
    const auto& f = j.at("frontend");
    idx.frontend.preemphasis_coeff = f.at("preemphasis_coeff").get<double>();
    idx.frontend.frame_len_ms = f.at("frame_len_ms").get<double>();
    idx.frontend.overlap_fraction = f.at("overlap_fraction").get<double>();
    idx.frontend.lpc_order = f.at("lpc_order").get<int>();
    const auto& t = j.at("train");
    idx.train.n_starts = t.at("n_starts").get<std::size_t>();
    idx.train.epochs_per_start = t.at("epochs_per_start").get<std::size_t>();
    idx.train.final_epochs = t.at("final_epochs").get<std::size_t>();
    idx.train.mu_init = t.at("mu_init").get<double>();
    idx.train.mu_factor = t.at("mu_factor").get<double>();
    idx.train.mu_max = t.at("mu_max").get<double>();
    idx.train.early_stop_relative = t.at("early_stop_relative").get<double>();
    idx.train.n_hidden = t.at("n_hidden").get<std::size_t>();
    idx.train.normalize_inputs = t.at("normalize_inputs").get<bool>();
    for (const auto& s : j.at("speakers")) {
      idx.speaker_ids.push_back(s.at("id").get<std::string>());
      idx.files.push_back(s.at("file").get<std::string>());
    }
  } catch (const Json::exception& e) {
    fail(ErrorCode::kMalformedModel, std::string("index.json: ") + e.what());
  }
  return idx;
}

void save_models(const std::filesystem::path& dir, const std::vector<SpeakerModel>& models, ModelIndex index) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) fail(ErrorCode::kIo, "cannot create " + dir.string() + ": " + ec.message());
  index.speaker_ids.clear();
  index.files.clear();
  for (std::size_t i = 0; i < models.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof(name), "model_%03zu.json", i);
    write_file(dir / name, model_to_json(models[i]));
    index.speaker_ids.push_back(models[i].id);
    index.files.emplace_back(name);
  }
  write_file(dir / "index.json", index_to_json(index));
}

ModelStore load_models(const std::filesystem::path& dir) {
  const auto index_path = dir / "index.json";
  if (!std::filesystem::exists(index_path)) {
    fail(ErrorCode::kMissingFile, "no model index at " + index_path.string());
  }
  ModelStore store;
  store.index = index_from_json(read_file(index_path));
  require(!store.index.files.empty(), ErrorCode::kMalformedModel, dir.string() + ": model index lists no speakers");
  for (std::size_t i = 0; i < store.index.files.size(); ++i) {
    const auto path = dir / store.index.files[i];
    auto model = model_from_json(read_file(path), path.string());
    require(model.id == store.index.speaker_ids[i], ErrorCode::kMalformedModel,
            path.string() + ": speaker id does not match index");
    store.models.push_back(std::move(model));
  }
  return store;
}

}  // namespace hybrid_spkr
