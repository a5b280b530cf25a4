#include <cmath>
#include <fstream>
#include <numbers>

#include "doctest.h"
#include "hybrid_spkr/corpus.hpp"
#include "hybrid_spkr/error.hpp"
#include "test_support.hpp"

using namespace hybrid_spkr;
namespace fs = std::filesystem;

namespace {

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::kInternal;
}

std::vector<double> mean_lpcc(const AudioClip& clip) {
  const auto seq = extract_lpcc(clip);
  std::vector<double> mean(seq.frames.dim(), 0.0);
  for (std::size_t i = 0; i < seq.frames.size(); ++i) {
    for (std::size_t j = 0; j < mean.size(); ++j) mean[j] += seq.frames[i][j];
  }
  for (double& m : mean) m /= static_cast<double>(seq.frames.size());
  return mean;
}

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream(p, std::ios::binary) << text;
}

}  // namespace

TEST_CASE("stability test on known polynomials") {
  CHECK(is_stable(std::vector<double>{1.2, -0.72}));
  CHECK_FALSE(is_stable(std::vector<double>{2.0, -1.0}));
  CHECK_FALSE(is_stable(std::vector<double>{1.1}));
  const std::vector<std::pair<double, double>> poles{{0.9, 0.5}, {0.7, 2.0}};
  const auto a = ar_from_poles(poles);
  REQUIRE(a.size() == 4);
  CHECK(is_stable(a));
  // (1 - 2 r cos(w) z^-1 + r^2 z^-2) for a single pair.
  const std::vector<std::pair<double, double>> one{{0.9, 0.5}};
  const auto b = ar_from_poles(one);
  CHECK(b[0] == doctest::Approx(2.0 * 0.9 * std::cos(0.5)));
  CHECK(b[1] == doctest::Approx(-0.81));
}

TEST_CASE("unstable specs are rejected") {
  SyntheticSpeakerSpec spec;
  spec.ar_coeffs = {2.0, -1.0};
  CHECK(code_of([&] { generate_synthetic_speaker(spec, 1); }) == ErrorCode::kUnstableSpec);
}

TEST_CASE("synthetic clips are deterministic and within the duration range") {
  SyntheticCorpusConfig cfg;
  const auto voices = synthetic_voices(cfg);
  REQUIRE(voices.size() == 10);
  for (const auto& v : voices) CHECK(is_stable(v.ar_coeffs));
  const auto a = generate_synthetic_speaker(voices[0], 5);
  const auto b = generate_synthetic_speaker(voices[0], 5);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].samples == b[i].samples);
    CHECK(a[i].sample_rate_hz == 8000);
    const double seconds = static_cast<double>(a[i].samples.size()) / 8000.0;
    CHECK(seconds >= 0.9 - 1e-3);
    CHECK(seconds <= 2.8 + 1e-3);
  }
  CHECK(synthesize_clip(voices[0], 3).samples == a[3].samples);
  CHECK(synthetic_voices(cfg)[4].ar_coeffs == voices[4].ar_coeffs);
}

TEST_CASE("distinct voices have distinct cepstra") {
  const auto voices = synthetic_voices(SyntheticCorpusConfig{});
  auto spec_a = voices[0], spec_b = voices[1];
  spec_a.min_duration_s = spec_a.max_duration_s = 5.0;
  spec_b.min_duration_s = spec_b.max_duration_s = 5.0;
  const auto ma = mean_lpcc(synthesize_clip(spec_a, 0));
  const auto mb = mean_lpcc(synthesize_clip(spec_b, 0));
  double d = 0.0;
  for (std::size_t j = 0; j < ma.size(); ++j) d += (ma[j] - mb[j]) * (ma[j] - mb[j]);
  CHECK(std::sqrt(d) > 0.1);
}

TEST_CASE("linear prediction recovers the voice filter") {
  auto spec = synthetic_voices(SyntheticCorpusConfig{})[2];
  spec.min_duration_s = spec.max_duration_s = 60.0;
  const auto clip = synthesize_clip(spec, 0);
  const auto lpc = lpc_analyze(clip.samples, 12);
  REQUIRE(lpc.has_value());
  for (std::size_t k = 0; k < 12; ++k) CHECK(std::abs(lpc->coeffs[k] - spec.ar_coeffs[k]) < 0.05);
}

TEST_CASE("additive noise hits the requested SNR") {
  const auto spec = synthetic_voices(SyntheticCorpusConfig{})[0];
  const auto clip = synthesize_clip(spec, 1);
  const auto noisy = add_noise(clip, 10.0, 3);
  double sig = 0.0, err = 0.0;
  for (std::size_t i = 0; i < clip.samples.size(); ++i) {
    sig += clip.samples[i] * clip.samples[i];
    err += (noisy.samples[i] - clip.samples[i]) * (noisy.samples[i] - clip.samples[i]);
  }
  CHECK(10.0 * std::log10(sig / err) == doctest::Approx(10.0).epsilon(0.05));
  CHECK(add_noise(clip, 10.0, 3).samples == noisy.samples);
}

TEST_CASE("synthetic manifest layout") {
  SyntheticCorpusConfig cfg;
  cfg.n_speakers = 3;
  cfg.clips_per_speaker = 4;
  const auto m = synthetic_manifest(cfg);
  REQUIRE(m.speakers.size() == 3);
  CHECK(m.speakers[0].id == "spk000");
  CHECK(m.speakers[0].train.size() == 2);
  CHECK(m.speakers[0].test.size() == 2);
  CHECK(std::get<SyntheticClipRef>(m.speakers[0].test[0]).snr_db == 5.0);

  cfg.n_speakers = 0;
  CHECK_THROWS_AS(synthetic_manifest(cfg), Error);
}

TEST_CASE("manifest JSON round trip") {
  SyntheticCorpusConfig cfg;
  cfg.n_speakers = 2;
  cfg.clips_per_speaker = 3;
  const auto m = synthetic_manifest(cfg);
  const auto text = manifest_to_json(m);
  const auto back = parse_manifest(text, ".");
  CHECK(manifest_to_json(back) == text);
  CHECK(corpus_hash(back) == corpus_hash(m));
  CHECK(load_clip(back, 1, back.speakers[1].test[0]).samples == load_clip(m, 1, m.speakers[1].test[0]).samples);
}

TEST_CASE("manifest validation errors") {
  CHECK(code_of([] { parse_manifest("{not json", "."); }) == ErrorCode::kInvalidManifest);
  CHECK(code_of([] { parse_manifest(R"({"speakers": []})", "."); }) == ErrorCode::kInvalidManifest);
  CHECK(code_of([] {
          parse_manifest(R"({"speakers": [{"id": "a", "train": [], "test": ["x.wav"]}]})", ".");
        }) == ErrorCode::kInvalidManifest);
  CHECK(code_of([] {
          parse_manifest(R"({"speakers": [{"id": "a", "train": ["x.wav"], "test": ["x.wav"]}]})", ".");
        }) == ErrorCode::kInvalidManifest);
  CHECK(code_of([] {
          parse_manifest(R"({"speakers": [{"id": "a", "train": [{"synthetic_clip": 0}], "test": ["y.wav"]}]})", ".");
        }) == ErrorCode::kInvalidManifest);
  CHECK(code_of([] {
          parse_manifest(R"({"speakers": [{"id": "a", "train": ["a.wav"], "test": ["b.wav"]},
                                          {"id": "a", "train": ["c.wav"], "test": ["d.wav"]}]})",
                         ".");
        }) == ErrorCode::kInvalidManifest);
}

TEST_CASE("loading a WAV corpus from disk") {
  const auto dir = test_support::scratch_dir("corpus_load");
  const auto spec = synthetic_voices(SyntheticCorpusConfig{})[0];
  fs::create_directories(dir / "a");
  fs::create_directories(dir / "b");
  write_wav(dir / "a/tr.wav", synthesize_clip(spec, 0));
  write_wav(dir / "a/te.wav", synthesize_clip(spec, 1));
  write_wav(dir / "b/tr.wav", synthesize_clip(spec, 2));
  write_wav(dir / "b/te.wav", synthesize_clip(spec, 3));
  write_file(dir / "manifest.json", R"({"seed": 4, "speakers": [
      {"id": "a", "train": ["a/tr.wav"], "test": ["a/te.wav"]},
      {"id": "b", "train": ["b/tr.wav"], "test": ["b/te.wav"]}]})");
  const auto corpus = load_corpus(dir / "manifest.json", 2);
  CHECK(corpus.train.size() == 2);
  CHECK(corpus.train[0].size() + corpus.train[1].size() + corpus.test[0].size() + corpus.test[1].size() == 4);
  CHECK(corpus.manifest.seed == 4);

  write_file(dir / "missing.json", R"({"speakers": [{"id": "a", "train": ["a/nope.wav"], "test": ["a/te.wav"]}]})");
  try {
    load_corpus(dir / "missing.json");
    FAIL("expected missing file");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kMissingFile);
    CHECK(std::string(e.what()).find("nope.wav") != std::string::npos);
  }

  write_wav(dir / "a/cd.wav", AudioClip{std::vector<double>(4410, 0.1), 16000});
  {
    // Rewrite the rate field to 44.1 kHz.
    std::fstream f(dir / "a/cd.wav", std::ios::binary | std::ios::in | std::ios::out);
    f.seekp(24);
    const unsigned char rate[4] = {0x44, 0xAC, 0x00, 0x00};
    f.write(reinterpret_cast<const char*>(rate), 4);
  }
  write_file(dir / "rate.json", R"({"speakers": [{"id": "a", "train": ["a/cd.wav"], "test": ["a/te.wav"]}]})");
  CHECK(code_of([&] { load_corpus(dir / "rate.json"); }) == ErrorCode::kUnsupportedRate);

  write_file(dir / "a/bad.wav", "RIFFjunk");
  write_file(dir / "bad.json", R"({"speakers": [{"id": "a", "train": ["a/bad.wav"], "test": ["a/te.wav"]}]})");
  CHECK(code_of([&] { load_corpus(dir / "bad.json"); }) == ErrorCode::kMalformedWav);
}

TEST_CASE("directory convention discovery") {
  const auto dir = test_support::scratch_dir("corpus_dirs");
  SyntheticCorpusConfig cfg;
  cfg.n_speakers = 2;
  cfg.clips_per_speaker = 2;
  const auto spec = synthetic_voices(cfg)[0];
  for (const char* spk : {"x", "y"}) {
    fs::create_directories(dir / spk / "train");
    fs::create_directories(dir / spk / "test");
    write_wav(dir / spk / "train" / "1.wav", synthesize_clip(spec, 0));
    write_wav(dir / spk / "test" / "1.wav", synthesize_clip(spec, 1));
  }
  const auto m = manifest_from_directory(dir, 3);
  REQUIRE(m.speakers.size() == 2);
  CHECK(m.speakers[1].id == "y");
  CHECK(std::get<std::string>(m.speakers[1].train[0]) == "y/train/1.wav");

  fs::remove(dir / "y" / "train" / "1.wav");
  CHECK(code_of([&] { manifest_from_directory(dir); }) == ErrorCode::kInvalidManifest);
}

TEST_CASE("written corpus is reproducible and enrollment ignores test clips") {
  SyntheticCorpusConfig cfg;
  cfg.n_speakers = 3;
  cfg.clips_per_speaker = 4;
  cfg.seed = 8;
  const auto d1 = test_support::scratch_dir("corpus_w1");
  const auto d2 = test_support::scratch_dir("corpus_w2");
  const auto m1 = write_synthetic_corpus(cfg, d1, 1);
  const auto m2 = write_synthetic_corpus(cfg, d2, 3);
  std::size_t wavs = 0;
  for (const auto& e : fs::recursive_directory_iterator(d1)) {
    if (e.path().extension() != ".wav") continue;
    ++wavs;
    const auto rel = fs::relative(e.path(), d1);
    CHECK(read_wav(e.path()).samples == read_wav(d2 / rel).samples);
  }
  CHECK(wavs == 12);
  CHECK(corpus_hash(m1) == corpus_hash(m2));

  // Deleting every test clip must not disturb enrollment.
  auto reloaded = load_manifest(d1 / "manifest.json");
  EnrollConfig ec;
  ec.size_bits = 2;
  ec.train.final_epochs = 2;
  const auto before = enroll(reloaded, ec);
  for (const auto& spk : reloaded.speakers) {
    for (const auto& t : spk.test) fs::remove(d1 / std::get<std::string>(t));
  }
  const auto after = enroll(reloaded, ec);
  REQUIRE(after.models.size() == 3);
  for (std::size_t s = 0; s < 3; ++s) {
    CHECK(after.models[s] == before.models[s]);
    CHECK(after.models[s].codebook.size() == 4);
  }
  CHECK(code_of([&] { extract_test_set(reloaded, FrontendConfig{}); }) == ErrorCode::kMissingFile);
}
