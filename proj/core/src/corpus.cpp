#include "hybrid_spkr/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <numbers>
#include <set>
#include <sstream>

#include "hybrid_spkr/error.hpp"
#include "hybrid_spkr/parallel.hpp"
#include "json.hpp"

namespace hybrid_spkr {
namespace {

using Json = nlohmann::ordered_json;

constexpr char kManifestFormat[] = "hybrid-spkr-manifest";
constexpr int kManifestVersion = 1;
constexpr std::size_t kBurnInSamples = 2000;
constexpr std::size_t kVoiceOrder = 12;

Json spec_to_json(const SyntheticSpeakerSpec& s) {
  Json j;
  j["ar_coeffs"] = s.ar_coeffs;
  j["gain"] = s.gain;
  j["seed"] = s.seed;
  j["min_duration_s"] = s.min_duration_s;
  j["max_duration_s"] = s.max_duration_s;
  return j;
}

SyntheticSpeakerSpec spec_from_json(const Json& j) {
  SyntheticSpeakerSpec s;
  s.ar_coeffs = j.at("ar_coeffs").get<std::vector<double>>();
  s.gain = j.value("gain", s.gain);
  s.seed = j.value("seed", s.seed);
  s.min_duration_s = j.value("min_duration_s", s.min_duration_s);
  s.max_duration_s = j.value("max_duration_s", s.max_duration_s);
  return s;
}

Json source_to_json(const ClipSource& src) {
  if (const auto* path = std::get_if<std::string>(&src)) return *path;
  const auto& ref = std::get<SyntheticClipRef>(src);
  Json j;
  j["synthetic_clip"] = ref.index;
  if (ref.snr_db) j["snr_db"] = *ref.snr_db;
  return j;
}

ClipSource source_from_json(const Json& j) {
  if (j.is_string()) return j.get<std::string>();
  if (j.is_object() && j.contains("synthetic_clip")) {
    SyntheticClipRef ref;
    ref.index = j.at("synthetic_clip").get<std::size_t>();
    if (j.contains("snr_db")) ref.snr_db = j.at("snr_db").get<double>();
    return ref;
  }
  fail(ErrorCode::kInvalidManifest, "clip entry must be a path or {\"synthetic_clip\": n}");
}

std::string source_label(const ClipSource& src) {
  if (const auto* path = std::get_if<std::string>(&src)) return *path;
  return "synthetic#" + std::to_string(std::get<SyntheticClipRef>(src).index);
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    if (!std::filesystem::exists(path)) fail(ErrorCode::kMissingFile, path.string());
    fail(ErrorCode::kIo, "cannot open " + path.string());
  }
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::kIo, "cannot write " + path.string());
  out << text;
  if (!out) fail(ErrorCode::kIo, "short write to " + path.string());
}

double rms(const std::vector<double>& x) {
  double acc = 0.0;
  for (double v : x) acc += v * v;
  return x.empty() ? 0.0 : std::sqrt(acc / static_cast<double>(x.size()));
}

std::string two_digit(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%02zu", i);
  return buf;
}

std::string speaker_name(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "spk%03zu", i);
  return buf;
}

}  // namespace

void SyntheticSpeakerSpec::validate() const {
  require(!ar_coeffs.empty(), ErrorCode::kUnstableSpec, "AR coefficient vector is empty");
  require(std::all_of(ar_coeffs.begin(), ar_coeffs.end(), [](double a) { return std::isfinite(a); }),
          ErrorCode::kUnstableSpec, "non-finite AR coefficient");
  require(is_stable(ar_coeffs), ErrorCode::kUnstableSpec, "AR polynomial has a root on or outside the unit circle");
  require(gain > 0.0 && std::isfinite(gain), ErrorCode::kInvalidArgument, "gain must be positive");
  require(min_duration_s > 0.0 && min_duration_s <= max_duration_s, ErrorCode::kInvalidArgument,
          "clip durations must satisfy 0 < min <= max");
}

bool is_stable(std::span<const double> ar_coeffs) {
  std::vector<double> a(ar_coeffs.begin(), ar_coeffs.end());
  for (std::size_t m = a.size(); m >= 1; --m) {
    const double k = a[m - 1];
    if (!(std::abs(k) < 1.0)) return false;
    std::vector<double> lower(m - 1);
    const double denom = 1.0 - k * k;
    for (std::size_t j = 1; j < m; ++j) lower[j - 1] = (a[j - 1] + k * a[m - j - 1]) / denom;
    a = std::move(lower);
  }
  return true;
}

std::vector<double> ar_from_poles(std::span<const std::pair<double, double>> pole_pairs,
                                  std::span<const double> real_poles) {
  // A(z) = prod (1 - p z^-1); poly[k] multiplies z^-k.
  std::vector<double> poly{1.0};
  auto multiply = [&poly](const std::vector<double>& factor) {
    std::vector<double> out(poly.size() + factor.size() - 1, 0.0);
    for (std::size_t i = 0; i < poly.size(); ++i) {
      for (std::size_t j = 0; j < factor.size(); ++j) out[i + j] += poly[i] * factor[j];
    }
    poly = std::move(out);
  };
  for (const auto& [radius, angle] : pole_pairs) multiply({1.0, -2.0 * radius * std::cos(angle), radius * radius});
  for (double p : real_poles) multiply({1.0, -p});
  std::vector<double> ar(poly.size() - 1);
  for (std::size_t k = 1; k < poly.size(); ++k) ar[k - 1] = -poly[k];
  return ar;
}

AudioClip synthesize_clip(const SyntheticSpeakerSpec& spec, std::size_t index) {
  spec.validate();
  Rng rng(derive_seed(spec.seed, "clip", index));
  std::uniform_real_distribution<double> dur(spec.min_duration_s, spec.max_duration_s);
  const double seconds = dur(rng);
  const auto n = static_cast<std::size_t>(std::lround(seconds * kTargetRateHz));

  std::normal_distribution<double> gauss;
  const std::size_t p = spec.ar_coeffs.size();
  std::vector<double> y(n + kBurnInSamples, 0.0);
  for (std::size_t t = 0; t < y.size(); ++t) {
    double acc = gauss(rng);
    for (std::size_t k = 1; k <= p && k <= t; ++k) acc += spec.ar_coeffs[k - 1] * y[t - k];
    y[t] = acc;
  }
  AudioClip clip;
  clip.sample_rate_hz = kTargetRateHz;
  clip.samples.assign(y.begin() + static_cast<std::ptrdiff_t>(kBurnInSamples), y.end());
  const double level = rms(clip.samples);
  const double scale = level > 0.0 ? spec.gain / level : 0.0;
  for (double& s : clip.samples) s = std::clamp(s * scale, -1.0, 1.0);
  return clip;
}

std::vector<AudioClip> generate_synthetic_speaker(const SyntheticSpeakerSpec& spec, std::size_t n_clips) {
  spec.validate();
  std::vector<AudioClip> clips;
  clips.reserve(n_clips);
  for (std::size_t i = 0; i < n_clips; ++i) clips.push_back(synthesize_clip(spec, i));
  return clips;
}

AudioClip add_noise(const AudioClip& clip, double snr_db, std::uint64_t seed) {
  require(std::isfinite(snr_db), ErrorCode::kInvalidArgument, "SNR must be finite");
  const double noise_rms = rms(clip.samples) / std::pow(10.0, snr_db / 20.0);
  Rng rng(seed);
  std::normal_distribution<double> gauss(0.0, noise_rms);
  AudioClip out = clip;
  for (double& s : out.samples) s = std::clamp(s + gauss(rng), -1.0, 1.0);
  return out;
}

void CorpusManifest::validate() const {
  require(!speakers.empty(), ErrorCode::kInvalidManifest, "no speakers");
  std::set<std::string> ids;
  for (const auto& spk : speakers) {
    require(!spk.id.empty(), ErrorCode::kInvalidManifest, "speaker with empty id");
    require(ids.insert(spk.id).second, ErrorCode::kInvalidManifest, "duplicate speaker id '" + spk.id + "'");
    require(!spk.train.empty(), ErrorCode::kInvalidManifest, "speaker '" + spk.id + "' has no training clips");
    require(!spk.test.empty(), ErrorCode::kInvalidManifest, "speaker '" + spk.id + "' has no test clips");
    for (const auto& a : spk.train) {
      for (const auto& b : spk.test) {
        const bool same = a.index() == b.index() &&
                          (std::holds_alternative<std::string>(a)
                               ? std::get<std::string>(a) == std::get<std::string>(b)
                               : std::get<SyntheticClipRef>(a).index == std::get<SyntheticClipRef>(b).index);
        require(!same, ErrorCode::kInvalidManifest,
                "speaker '" + spk.id + "' uses " + source_label(a) + " for both training and testing");
      }
    }
    const auto uses_synthetic = [](const std::vector<ClipSource>& v) {
      return std::any_of(v.begin(), v.end(), [](const ClipSource& s) { return s.index() == 1; });
    };
    if (uses_synthetic(spk.train) || uses_synthetic(spk.test)) {
      require(spk.synthetic.has_value(), ErrorCode::kInvalidManifest,
              "speaker '" + spk.id + "' references synthetic clips without a synthetic spec");
    }
    if (spk.synthetic) spk.synthetic->validate();
  }
}

CorpusManifest parse_manifest(const std::string& json_text, const std::filesystem::path& base_dir) {
  Json j;
  try {
    j = Json::parse(json_text);
  } catch (const Json::exception& e) {
    fail(ErrorCode::kInvalidManifest, e.what());
  }
  CorpusManifest m;
  m.base_dir = base_dir;
  try {
    if (j.contains("format") && j["format"] != kManifestFormat) {
      fail(ErrorCode::kInvalidManifest, "unexpected format tag");
    }
    m.seed = j.value("seed", std::uint64_t{0});
    for (const auto& s : j.at("speakers")) {
      SpeakerEntry e;
      e.id = s.at("id").get<std::string>();
      if (s.contains("synthetic")) e.synthetic = spec_from_json(s["synthetic"]);
      for (const auto& c : s.value("train", Json::array())) e.train.push_back(source_from_json(c));
      for (const auto& c : s.value("test", Json::array())) e.test.push_back(source_from_json(c));
      m.speakers.push_back(std::move(e));
    }
  } catch (const Json::exception& e) {
    fail(ErrorCode::kInvalidManifest, e.what());
  }
  m.validate();
  return m;
}

std::string manifest_to_json(const CorpusManifest& manifest) {
  Json j;
  j["format"] = kManifestFormat;
  j["version"] = kManifestVersion;
  j["seed"] = manifest.seed;
  Json speakers = Json::array();
  for (const auto& spk : manifest.speakers) {
    Json s;
    s["id"] = spk.id;
    if (spk.synthetic) s["synthetic"] = spec_to_json(*spk.synthetic);
    s["train"] = Json::array();
    for (const auto& c : spk.train) s["train"].push_back(source_to_json(c));
    s["test"] = Json::array();
    for (const auto& c : spk.test) s["test"].push_back(source_to_json(c));
    speakers.push_back(std::move(s));
  }
  j["speakers"] = std::move(speakers);
  return j.dump(2) + "\n";
}

CorpusManifest load_manifest(const std::filesystem::path& path) {
  return parse_manifest(read_text(path), path.parent_path());
}

void save_manifest(const std::filesystem::path& path, const CorpusManifest& manifest) {
  write_text(path, manifest_to_json(manifest));
}

std::string corpus_hash(const CorpusManifest& manifest) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fnv1a64(manifest_to_json(manifest))));
  return buf;
}

CorpusManifest manifest_from_directory(const std::filesystem::path& root, std::uint64_t seed) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(root)) fail(ErrorCode::kMissingFile, root.string());
  CorpusManifest m;
  m.seed = seed;
  m.base_dir = root;
  std::vector<fs::path> speaker_dirs;
  for (const auto& entry : fs::directory_iterator(root)) {
    if (entry.is_directory()) speaker_dirs.push_back(entry.path());
  }
  std::sort(speaker_dirs.begin(), speaker_dirs.end());
  auto wavs = [&root](const fs::path& dir) {
    std::vector<ClipSource> out;
    if (!fs::is_directory(dir)) return out;
    std::vector<std::string> names;
    for (const auto& f : fs::directory_iterator(dir)) {
      if (f.is_regular_file() && f.path().extension() == ".wav") {
        names.push_back(fs::relative(f.path(), root).generic_string());
      }
    }
    std::sort(names.begin(), names.end());
    out.assign(names.begin(), names.end());
    return out;
  };
  for (const auto& dir : speaker_dirs) {
    SpeakerEntry e;
    e.id = dir.filename().string();
    e.train = wavs(dir / "train");
    e.test = wavs(dir / "test");
    m.speakers.push_back(std::move(e));
  }
  m.validate();
  return m;
}

AudioClip load_clip(const CorpusManifest& manifest, std::size_t speaker, const ClipSource& source) {
  if (const auto* path = std::get_if<std::string>(&source)) {
    std::filesystem::path p(*path);
    if (p.is_relative()) p = manifest.base_dir / p;
    return read_wav(p);
  }
  const auto& spk = manifest.speakers.at(speaker);
  require(spk.synthetic.has_value(), ErrorCode::kInvalidManifest, "speaker '" + spk.id + "' has no synthetic spec");
  const auto& ref = std::get<SyntheticClipRef>(source);
  AudioClip clip = synthesize_clip(*spk.synthetic, ref.index);
  if (ref.snr_db) clip = add_noise(clip, *ref.snr_db, derive_seed(spk.synthetic->seed, "noise", ref.index));
  return clip;
}

LoadedCorpus load_corpus(const std::filesystem::path& manifest_path, std::size_t jobs) {
  LoadedCorpus c;
  c.manifest = load_manifest(manifest_path);
  const std::size_t n = c.manifest.speakers.size();
  c.train.resize(n);
  c.test.resize(n);
  parallel_for(n, jobs, [&](std::size_t s) {
    for (const auto& src : c.manifest.speakers[s].train) c.train[s].push_back(load_clip(c.manifest, s, src));
    for (const auto& src : c.manifest.speakers[s].test) c.test[s].push_back(load_clip(c.manifest, s, src));
  });
  return c;
}

void SyntheticCorpusConfig::validate() const {
  require(n_speakers >= 1, ErrorCode::kInvalidArgument, "need at least one speaker");
  require(clips_per_speaker >= 2, ErrorCode::kInvalidArgument, "need at least two clips per speaker");
  const std::size_t tr = train_clips == 0 ? clips_per_speaker / 2 : train_clips;
  require(tr >= 1 && tr < clips_per_speaker, ErrorCode::kInvalidArgument,
          "train clips must leave at least one test clip");
  require(speaker_spread >= 0.0 && gain > 0.0, ErrorCode::kInvalidArgument, "spread >= 0 and gain > 0 required");
}

std::vector<SyntheticSpeakerSpec> synthetic_voices(const SyntheticCorpusConfig& config) {
  config.validate();
  constexpr std::size_t kPairs = kVoiceOrder / 2;
  Rng base_rng(derive_seed(config.seed, "voice-base"));
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  // Shared resonances spread over the band, one per sixth of [0, pi).
  std::vector<std::pair<double, double>> base(kPairs);
  for (std::size_t j = 0; j < kPairs; ++j) {
    const double angle = std::numbers::pi * (static_cast<double>(j) + 0.2 + 0.6 * unit(base_rng)) / kPairs;
    const double radius = 0.80 + 0.12 * unit(base_rng);
    base[j] = {radius, angle};
  }

  std::vector<SyntheticSpeakerSpec> voices;
  voices.reserve(config.n_speakers);
  for (std::size_t s = 0; s < config.n_speakers; ++s) {
    Rng rng(derive_seed(config.seed, "voice", s));
    std::normal_distribution<double> gauss;
    std::vector<std::pair<double, double>> poles(kPairs);
    for (std::size_t j = 0; j < kPairs; ++j) {
      const double angle = base[j].second + config.speaker_spread * (std::numbers::pi / (2.0 * kPairs)) * gauss(rng);
      const double radius = base[j].first + config.speaker_spread * 0.1 * gauss(rng);
      poles[j] = {std::clamp(radius, 0.5, 0.95), std::clamp(angle, 0.05, std::numbers::pi - 0.05)};
    }
    SyntheticSpeakerSpec spec;
    spec.ar_coeffs = ar_from_poles(poles);
    spec.gain = config.gain;
    spec.seed = derive_seed(config.seed, "voice-clips", s);
    voices.push_back(std::move(spec));
  }
  return voices;
}

CorpusManifest synthetic_manifest(const SyntheticCorpusConfig& config) {
  const auto voices = synthetic_voices(config);
  const std::size_t n_train = config.train_clips == 0 ? config.clips_per_speaker / 2 : config.train_clips;
  CorpusManifest m;
  m.seed = config.seed;
  for (std::size_t s = 0; s < voices.size(); ++s) {
    SpeakerEntry e;
    e.id = speaker_name(s);
    e.synthetic = voices[s];
    for (std::size_t c = 0; c < config.clips_per_speaker; ++c) {
      if (c < n_train) {
        e.train.push_back(SyntheticClipRef{c, std::nullopt});
      } else {
        e.test.push_back(SyntheticClipRef{c, config.test_snr_db});
      }
    }
    m.speakers.push_back(std::move(e));
  }
  m.validate();
  return m;
}

CorpusManifest write_synthetic_corpus(const SyntheticCorpusConfig& config, const std::filesystem::path& out_dir,
                                      std::size_t jobs) {
  namespace fs = std::filesystem;
  const CorpusManifest synth = synthetic_manifest(config);
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) fail(ErrorCode::kIo, "cannot create " + out_dir.string() + ": " + ec.message());

  CorpusManifest files = synth;
  files.base_dir = out_dir;
  const std::size_t n = synth.speakers.size();
  for (std::size_t s = 0; s < n; ++s) {
    fs::create_directories(out_dir / synth.speakers[s].id, ec);
    if (ec) fail(ErrorCode::kIo, "cannot create speaker directory: " + ec.message());
  }
  parallel_for(n, jobs, [&](std::size_t s) {
    const auto& spk = synth.speakers[s];
    auto write_all = [&](const std::vector<ClipSource>& sources, const char* prefix, std::vector<ClipSource>& out) {
      out.clear();
      for (const auto& src : sources) {
        const auto ref = std::get<SyntheticClipRef>(src);
        const std::string rel = spk.id + "/" + prefix + "_" + two_digit(ref.index) + ".wav";
        write_wav(out_dir / rel, load_clip(synth, s, src));
        out.emplace_back(rel);
      }
    };
    write_all(spk.train, "train", files.speakers[s].train);
    write_all(spk.test, "test", files.speakers[s].test);
  });
  save_manifest(out_dir / "manifest.json", files);
  return files;
}

void EnrollConfig::validate() const {
  require(size_bits >= kMinCodebookBits && size_bits <= kMaxCodebookBits, ErrorCode::kInvalidArgument,
          "codebook size must be 1..10 bits, got " + std::to_string(size_bits));
  train.validate();
  frontend.validate();
}

std::vector<SpeakerFeatures> extract_train_features(const CorpusManifest& manifest, const FrontendConfig& frontend,
                                                    std::size_t jobs) {
  const std::size_t n = manifest.speakers.size();
  std::vector<SpeakerFeatures> out(n);
  parallel_for(n, jobs, [&](std::size_t s) {
    auto& dst = out[s];
    dst.frames = FeatureSet(static_cast<std::size_t>(frontend.lpc_order));
    for (const auto& src : manifest.speakers[s].train) {
      const auto seq = extract_lpcc(load_clip(manifest, s, src), frontend);
      dst.frames.append(seq.frames);
      dst.zero_energy_frames += seq.zero_energy_frames;
    }
  });
  return out;
}

std::vector<LabeledUtterance> extract_test_set(const CorpusManifest& manifest, const FrontendConfig& frontend,
                                               std::size_t jobs) {
  std::vector<std::pair<std::size_t, const ClipSource*>> items;
  for (std::size_t s = 0; s < manifest.speakers.size(); ++s) {
    for (const auto& src : manifest.speakers[s].test) items.emplace_back(s, &src);
  }
  std::vector<LabeledUtterance> out(items.size());
  parallel_for(items.size(), jobs, [&](std::size_t i) {
    const auto [s, src] = items[i];
    out[i].speaker = s;
    out[i].name = manifest.speakers[s].id + ":" + source_label(*src);
    out[i].frames = extract_lpcc(load_clip(manifest, s, *src), frontend).frames;
  });
  return out;
}

std::vector<Codebook> train_codebooks(std::span<const SpeakerFeatures> features, int size_bits, std::uint64_t root_seed,
                                      std::size_t jobs) {
  std::vector<Codebook> out(features.size());
  parallel_for(features.size(), jobs, [&](std::size_t s) {
    out[s] = lbg_train(features[s].frames, size_bits, derive_seed(root_seed, "codebook", s));
  });
  return out;
}

std::vector<MlpModel> train_networks(std::span<const SpeakerFeatures> features, const TrainConfig& config,
                                     std::uint64_t root_seed, std::size_t jobs, std::vector<TrainReport>* reports) {
  require(features.size() >= 2, ErrorCode::kInsufficientData, "network training needs at least two speakers");
  std::vector<MlpModel> out(features.size());
  std::vector<TrainReport> reps(features.size());
  parallel_for(features.size(), jobs, [&](std::size_t s) {
    FeatureSet impostors(features[s].frames.dim());
    for (std::size_t o = 0; o < features.size(); ++o) {
      if (o != s) impostors.append(features[o].frames);
    }
    const auto& own = features[s].frames;
    const FeatureSet inhibitory =
        compress_impostors(impostors, std::min(own.size(), impostors.size()), derive_seed(root_seed, "impostors", s));
    TrainConfig cfg = config;
    cfg.seed = derive_seed(root_seed, "mlp", s);
    out[s] = lm_train(own, inhibitory, cfg, &reps[s]);
  });
  if (reports) *reports = std::move(reps);
  return out;
}

Enrollment enroll(const CorpusManifest& manifest, const EnrollConfig& config) {
  manifest.validate();
  config.validate();
  const auto features = extract_train_features(manifest, config.frontend, config.jobs);
  const auto codebooks = train_codebooks(features, config.size_bits, manifest.seed, config.jobs);
  std::vector<TrainReport> reports;
  const auto networks = train_networks(features, config.train, manifest.seed, config.jobs, &reports);

  Enrollment e;
  for (std::size_t s = 0; s < manifest.speakers.size(); ++s) {
    e.models.push_back({manifest.speakers[s].id, codebooks[s], networks[s]});
    e.summary.push_back({manifest.speakers[s].id, features[s].frames.size(), features[s].zero_energy_frames,
                         codebooks[s].train_distortion, reports[s].final_sse, reports[s].selected_start});
  }
  return e;
}

}  // namespace hybrid_spkr
