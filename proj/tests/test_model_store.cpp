#include <fstream>
#include <random>

#include "doctest.h"
#include "hybrid_spkr/error.hpp"
#include "hybrid_spkr/model_store.hpp"
#include "test_support.hpp"

using namespace hybrid_spkr;
namespace fs = std::filesystem;

namespace {

// Values chosen to stress shortest round-trip formatting.
SpeakerModel awkward_model(std::uint64_t seed, const std::string& id) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  SpeakerModel m;
  m.id = id;
  m.codebook.size_bits = 2;
  m.codebook.seed = seed;
  m.codebook.centroids = FeatureSet(4, 12, 0.0);
  for (double& v : m.codebook.centroids.data()) v = u(rng) * 1e-7 + u(rng);
  m.codebook.centroids[0][0] = 0.1;
  m.codebook.centroids[1][0] = 1.0 / 3.0;
  m.codebook.centroids[2][0] = -5e-324;
  m.codebook.train_distortion = 0.30000000000000004;
  m.mlp = MlpModel::zeros(12, 16);
  for (double& v : m.mlp.w1) v = u(rng);
  for (double& v : m.mlp.b1) v = u(rng);
  for (double& v : m.mlp.w2) v = u(rng) * 1e300;
  m.mlp.b2 = -0.0;
  return m;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::kInternal;
}

}  // namespace

TEST_CASE("speaker model JSON is an exact round trip") {
  const auto m = awkward_model(1, "alice");
  const auto text = model_to_json(m);
  const auto back = model_from_json(text);
  CHECK(back == m);
  CHECK(model_to_json(back) == text);
  CHECK(std::signbit(back.mlp.b2));
}

TEST_CASE("codebook record round trip") {
  const auto cb = awkward_model(2, "x").codebook;
  const auto text = codebook_to_json(cb);
  CHECK(codebook_from_json(text) == cb);
  CHECK(codebook_to_json(codebook_from_json(text)) == text);
}

TEST_CASE("normalisation statistics persist when present") {
  auto m = awkward_model(3, "n");
  m.mlp.input_mean.assign(12, 0.25);
  m.mlp.input_scale.assign(12, 4.0);
  CHECK(model_from_json(model_to_json(m)) == m);
}

TEST_CASE("store save and load preserves every score") {
  const auto dir = test_support::scratch_dir("store");
  const std::vector<SpeakerModel> models{awkward_model(4, "a"), awkward_model(5, "b"), awkward_model(6, "c")};
  ModelIndex idx;
  idx.corpus_hash = "0123456789abcdef";
  idx.seed = 42;
  idx.size_bits = 2;
  idx.train.final_epochs = 7;
  save_models(dir, models, idx);
  CHECK(fs::exists(dir / "model_000.json"));
  CHECK(fs::exists(dir / "model_002.json"));

  const auto store = load_models(dir);
  REQUIRE(store.models.size() == 3);
  CHECK(store.index.seed == 42);
  CHECK(store.index.train.final_epochs == 7);
  CHECK(store.index.speaker_ids == std::vector<std::string>{"a", "b", "c"});

  const auto probe = test_support::gaussian_cloud(20, 12, 0.0, 1.0, 9);
  for (std::size_t s = 0; s < 3; ++s) {
    CHECK(store.models[s] == models[s]);
    CHECK(quantize_distortion(probe, store.models[s].codebook, DistortionCriterion::kMad) ==
          quantize_distortion(probe, models[s].codebook, DistortionCriterion::kMad));
    CHECK(accumulate_similarity(store.models[s].mlp, probe) == accumulate_similarity(models[s].mlp, probe));
  }

  const auto dir2 = test_support::scratch_dir("store2");
  save_models(dir2, store.models, store.index);
  for (const char* f : {"index.json", "model_000.json", "model_001.json", "model_002.json"}) {
    CHECK(slurp(dir / f) == slurp(dir2 / f));
  }
  CHECK(index_from_json(index_to_json(store.index)).corpus_hash == idx.corpus_hash);
}

TEST_CASE("malformed stores are reported") {
  const auto dir = test_support::scratch_dir("store_bad");
  CHECK(code_of([&] { load_models(dir); }) == ErrorCode::kMissingFile);
  CHECK(code_of([] { model_from_json("{}"); }) == ErrorCode::kMalformedModel);
  CHECK(code_of([] { model_from_json("[1,2"); }) == ErrorCode::kMalformedModel);

  auto text = model_to_json(awkward_model(7, "z"));
  const auto pos = text.find("\"version\":1");
  REQUIRE(pos != std::string::npos);
  text.replace(pos, 11, "\"version\":9");
  CHECK(code_of([&] { model_from_json(text); }) == ErrorCode::kMalformedModel);
  CHECK(category_of(ErrorCode::kMalformedModel) == ErrorCategory::kIo);
}
