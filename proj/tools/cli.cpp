#include "cli.hpp"

#include <CLI11.hpp>
#include <cstdio>
#include <fstream>
#include <json.hpp>
#include <optional>
#include <sstream>

#include "hybrid_spkr/corpus.hpp"
#include "hybrid_spkr/cost.hpp"
#include "hybrid_spkr/csv.hpp"
#include "hybrid_spkr/error.hpp"
#include "hybrid_spkr/hybrid.hpp"
#include "hybrid_spkr/model_store.hpp"
#include "hybrid_spkr/parallel.hpp"
#include "json_config.hpp"

namespace hybrid_spkr::cli {
namespace {

using Json = nlohmann::ordered_json;
namespace fs = std::filesystem;

struct Globals {
  std::uint64_t seed = 1;
  bool seed_given = false;
  std::size_t jobs = 1;
};

struct GenCorpusArgs {
  std::size_t speakers = 10;
  std::size_t clips = 10;
  std::size_t train_clips = 0;
  double test_snr_db = 5.0;
  bool clean_test = false;
  double spread = 0.4;
  double gain = 0.1;
  std::string out;
};

struct EnrollArgs {
  std::string manifest;
  std::string models;
  int bits = 5;
  std::size_t starts = 4;
  std::size_t warmup_epochs = 8;
  std::size_t final_epochs = 50;
  std::size_t hidden = kDefaultHiddenUnits;
  bool normalize = false;
};

struct ScoringArgs {
  std::string models;
  std::string mode = "hybrid";
  std::size_t k = 2;
  std::optional<double> alpha;
  std::string criterion = "mse";
};

struct IdentifyArgs {
  std::string wav;
  ScoringArgs scoring;
};

struct EvaluateArgs {
  std::string manifest;
  ScoringArgs scoring;
  std::vector<int> codebook_sizes;
  std::string json_out;
};

struct SweepArgs {
  std::string manifest;
  ScoringArgs scoring;
  std::string param;
  std::size_t points = 100;
  std::string out;
};

struct CostArgs {
  std::int64_t n = 38;
  std::int64_t p = 12;
  std::int64_t tcl = 32;
  std::int64_t tcl_baseline = 128;
  std::int64_t k = 2;
  std::int64_t ni = 12;
  std::int64_t nh1 = 16;
  std::int64_t ctg = 10;
  bool curve = false;
  std::int64_t n_max = 100;
};

std::string percent(std::size_t errors, std::size_t total) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%6.2f%% (%zu/%zu)", 100.0 * static_cast<double>(errors) / static_cast<double>(total),
                errors, total);
  return buf;
}

void write_text_file(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::kIo, "cannot write " + path.string());
  out << text;
  if (!out) fail(ErrorCode::kIo, "short write to " + path.string());
}

// CSV goes to a file when a path is given, otherwise to standard output.
void emit_csv(const CsvTable& table, const std::string& path, std::ostream& out) {
  std::ostringstream text;
  write_csv(text, table);
  if (path.empty() || path == "-") {
    out << text.str();
  } else {
    write_text_file(path, text.str());
  }
}

ModelStore load_store(const std::string& dir) {
  auto store = load_models(dir);
  for (const auto& m : store.models) m.validate();
  return store;
}

void check_corpus(const CorpusManifest& manifest, const ModelStore& store) {
  const auto hash = corpus_hash(manifest);
  require(hash == store.index.corpus_hash, ErrorCode::kInvalidManifest,
          "models were enrolled on corpus " + store.index.corpus_hash + " but the manifest hashes to " + hash);
  require(manifest.speakers.size() == store.models.size(), ErrorCode::kInvalidManifest,
          "manifest and model store list different speaker counts");
}

struct AlphaChoice {
  double alpha = 0.0;
  std::string source;
};

AlphaChoice resolve_alpha(const ScoreTable& table, std::size_t k, std::optional<double> given) {
  if (given) return {*given, "flag"};
  const auto grid = default_alpha_grid(table);
  return {select_alpha(sweep_alpha(table, grid, k)).alpha, "swept"};
}

Json error_json(const EvalReport& r) {
  Json j;
  j["errors"] = r.errors;
  j["total"] = r.total;
  j["error_rate"] = r.error_rate;
  return j;
}

std::vector<SpeakerModel> with_codebooks(const std::vector<SpeakerModel>& models, const std::vector<Codebook>& cbs) {
  auto out = models;
  for (std::size_t s = 0; s < out.size(); ++s) out[s].codebook = cbs[s];
  return out;
}

// ---- subcommands ----

int cmd_gen_corpus(const GenCorpusArgs& a, const Globals& g, std::ostream& out) {
  SyntheticCorpusConfig cfg;
  cfg.n_speakers = a.speakers;
  cfg.clips_per_speaker = a.clips;
  cfg.train_clips = a.train_clips;
  cfg.seed = g.seed;
  cfg.test_snr_db = a.clean_test ? std::nullopt : std::optional<double>(a.test_snr_db);
  cfg.speaker_spread = a.spread;
  cfg.gain = a.gain;
  write_synthetic_corpus(cfg, a.out, g.jobs);
  out << (fs::path(a.out) / "manifest.json").generic_string() << "\n";
  return kExitOk;
}

int cmd_enroll(const EnrollArgs& a, const Globals& g, std::ostream& out) {
  auto manifest = load_manifest(a.manifest);
  if (g.seed_given) manifest.seed = g.seed;

  EnrollConfig cfg;
  cfg.size_bits = a.bits;
  cfg.jobs = g.jobs;
  cfg.train.n_starts = a.starts;
  cfg.train.epochs_per_start = a.warmup_epochs;
  cfg.train.final_epochs = a.final_epochs;
  cfg.train.n_hidden = a.hidden;
  cfg.train.normalize_inputs = a.normalize;
  const auto enrollment = enroll(manifest, cfg);

  ModelIndex idx;
  // Hash the manifest as stored on disk so later commands can match it.
  idx.corpus_hash = corpus_hash(load_manifest(a.manifest));
  idx.seed = manifest.seed;
  idx.size_bits = a.bits;
  idx.frontend = cfg.frontend;
  idx.train = cfg.train;
  save_models(a.models, enrollment.models, idx);

  CsvTable table;
  table.header = {"speaker", "train_frames", "zero_energy_frames", "train_distortion", "final_sse"};
  for (const auto& s : enrollment.summary) {
    table.rows.push_back({s.id, std::to_string(s.train_frames), std::to_string(s.zero_energy_frames),
                          format_double(s.train_distortion), format_double(s.final_sse)});
  }
  write_csv(out, table);
  return kExitOk;
}

int cmd_identify(const IdentifyArgs& a, std::ostream& out) {
  const IdMode mode = parse_mode(a.scoring.mode);
  const DistortionCriterion crit = parse_criterion(a.scoring.criterion);
  require(mode != IdMode::kPreselectMlp, ErrorCode::kInvalidArgument, "identify supports vq, mlp and hybrid");
  require(mode != IdMode::kHybrid || a.scoring.alpha.has_value(), ErrorCode::kInvalidArgument,
          "--alpha is required with --mode hybrid");
  const auto store = load_store(a.scoring.models);
  const auto frames = extract_lpcc(read_wav(a.wav), store.index.frontend).frames;

  std::vector<RankedSpeaker> ranking;
  if (mode == IdMode::kVq) {
    std::vector<Codebook> cbs;
    for (const auto& m : store.models) cbs.push_back(m.codebook);
    ranking = vq_identify(frames, cbs, crit);
  } else if (mode == IdMode::kMlp) {
    std::vector<MlpModel> nets;
    for (const auto& m : store.models) nets.push_back(m.mlp);
    ranking = mlp_identify(frames, nets);
  } else {
    for (const auto& c : hybrid_identify(frames, store.models, HybridConfig{*a.scoring.alpha, a.scoring.k, crit})) {
      ranking.push_back({c.speaker, c.combined});
    }
  }

  CsvTable table;
  table.header = {"rank", "speaker", "score"};
  for (std::size_t r = 0; r < ranking.size(); ++r) {
    table.rows.push_back({std::to_string(r + 1), store.models[ranking[r].index].id, format_double(ranking[r].score)});
  }
  write_csv(out, table);
  return kExitOk;
}

int cmd_evaluate(const EvaluateArgs& a, const Globals& g, std::ostream& out) {
  const auto& sc = a.scoring;
  const IdMode mode = parse_mode(sc.mode);
  const DistortionCriterion crit = parse_criterion(sc.criterion);
  const auto manifest = load_manifest(a.manifest);
  const auto store = load_store(sc.models);
  check_corpus(manifest, store);
  HybridConfig base{sc.alpha.value_or(0.0), sc.k, crit};
  base.validate(store.models.size());

  const auto test = extract_test_set(manifest, store.index.frontend, g.jobs);
  const auto stored_mse = score_table(test, store.models, DistortionCriterion::kMse, g.jobs);

  std::vector<int> sizes = a.codebook_sizes;
  if (sizes.empty()) sizes.push_back(store.index.size_bits);
  std::vector<SpeakerFeatures> features;

  Json rows = Json::array();
  std::vector<std::string> human;
  for (int bits : sizes) {
    require(bits >= kMinCodebookBits && bits <= kMaxCodebookBits, ErrorCode::kInvalidArgument,
            "codebook sizes must be 1..10 bits");
    std::vector<SpeakerModel> models = store.models;
    if (bits != store.index.size_bits) {
      if (features.empty()) features = extract_train_features(manifest, store.index.frontend, g.jobs);
      models = with_codebooks(store.models, train_codebooks(features, bits, store.index.seed, g.jobs));
    }
    const auto mse = bits == store.index.size_bits ? stored_mse
                                                   : score_table(test, models, DistortionCriterion::kMse, g.jobs);
    const auto mad = score_table(test, models, DistortionCriterion::kMad, g.jobs);

    const auto vq = evaluate(mse, IdMode::kVq, base);
    Json row;
    row["bits"] = bits;
    row["vq"] = error_json(vq);
    std::string line = std::to_string(bits);
    line.resize(6, ' ');
    line += percent(vq.errors, vq.total);
    for (const auto* table : {&mse, &mad}) {
      const auto choice = resolve_alpha(*table, sc.k, sc.alpha);
      const auto rep = evaluate(*table, IdMode::kHybrid, HybridConfig{choice.alpha, sc.k, table->criterion});
      Json j = error_json(rep);
      j["alpha"] = choice.alpha;
      j["alpha_source"] = choice.source;
      row[table == &mse ? "combined_mse" : "combined_mad"] = std::move(j);
      line += "   " + percent(rep.errors, rep.total);
    }
    rows.push_back(std::move(row));
    human.push_back(line);
  }

  // Per-utterance detail for the requested mode on the stored models.
  const auto detail_table = crit == DistortionCriterion::kMse
                                ? stored_mse
                                : score_table(test, store.models, DistortionCriterion::kMad, g.jobs);
  HybridConfig detail_cfg = base;
  if (mode == IdMode::kHybrid) detail_cfg.alpha = resolve_alpha(detail_table, sc.k, sc.alpha).alpha;
  const auto detail = evaluate(detail_table, mode, detail_cfg);
  const auto mlp_only = evaluate(stored_mse, IdMode::kMlp, base);
  const double correlation = score_correlation(stored_mse);

  Json report;
  report["format"] = "hybrid-spkr-report";
  report["version"] = 1;
  report["corpus_hash"] = store.index.corpus_hash;
  report["seed"] = store.index.seed;
  report["enrolled_bits"] = store.index.size_bits;
  report["k"] = sc.k;
  report["test_utterances"] = test.size();
  report["rows"] = std::move(rows);
  report["mlp_only"] = error_json(mlp_only);
  report["score_correlation"] = correlation;
  Json detail_json;
  detail_json["mode"] = to_string(mode);
  detail_json["criterion"] = to_string(crit);
  detail_json["alpha"] = detail_cfg.alpha;
  detail_json["k"] = detail_cfg.k;
  detail_json["errors"] = detail.errors;
  detail_json["total"] = detail.total;
  detail_json["error_rate"] = detail.error_rate;
  detail_json["confusion"] = detail.confusion;
  Json utts = Json::array();
  for (const auto& u : detail.utterances) {
    Json ju;
    ju["name"] = u.name;
    ju["label"] = store.models[u.label].id;
    ju["predicted"] = store.models[u.predicted].id;
    Json ranking = Json::array();
    for (const auto& r : u.ranking) ranking.push_back({{"speaker", store.models[r.index].id}, {"score", r.score}});
    ju["ranking"] = std::move(ranking);
    utts.push_back(std::move(ju));
  }
  detail_json["utterances"] = std::move(utts);
  report["detail"] = std::move(detail_json);

  if (!a.json_out.empty()) write_text_file(a.json_out, report.dump(2) + "\n");

  out << "bits  VQ                 combined MSE       combined MAD\n";
  for (const auto& line : human) out << line << "\n";
  char corr[64];
  std::snprintf(corr, sizeof(corr), "%.4f", correlation);
  out << "MLP only: " << percent(mlp_only.errors, mlp_only.total) << "\n";
  out << "score correlation: " << corr << "\n";
  return kExitOk;
}

int cmd_sweep(const SweepArgs& a, const Globals& g, std::ostream& out) {
  const auto& sc = a.scoring;
  const DistortionCriterion crit = parse_criterion(sc.criterion);
  const auto manifest = load_manifest(a.manifest);
  const auto store = load_store(sc.models);
  check_corpus(manifest, store);
  HybridConfig{sc.alpha.value_or(0.0), sc.k, crit}.validate(store.models.size());
  const auto test = extract_test_set(manifest, store.index.frontend, g.jobs);
  const auto table = score_table(test, store.models, crit, g.jobs);

  CsvTable csv;
  if (a.param == "k") {
    const double alpha = resolve_alpha(table, sc.k, sc.alpha).alpha;
    csv.header = {"K", "combined_error", "mlp_only_error"};
    for (const auto& r : sweep_k(table, alpha)) {
      csv.rows.push_back({std::to_string(r.k), format_double(r.combined_error), format_double(r.mlp_only_error)});
    }
  } else {
    const auto grid = default_alpha_grid(table, a.points);
    csv.header = {"alpha", "error"};
    for (const auto& r : sweep_alpha(table, grid, sc.k)) {
      csv.rows.push_back({format_double(r.alpha), format_double(r.error)});
    }
  }
  emit_csv(csv, a.out, out);
  return kExitOk;
}

int cmd_cost(const CostArgs& a, std::ostream& out) {
  auto params = [&](std::int64_t n) {
    CostModelParams base{n, a.p, a.tcl_baseline, a.k, a.ni, a.nh1, a.ctg};
    CostModelParams comb{n, a.p, a.tcl, a.k, a.ni, a.nh1, a.ctg};
    base.validate();
    comb.validate();
    return std::pair{base, comb};
  };
  CsvTable csv;
  if (a.curve) {
    require(a.n_max >= 1, ErrorCode::kInvalidArgument, "--n-max must be positive");
    csv.header = {"N", "ratio"};
    for (std::int64_t n = 1; n <= a.n_max; ++n) {
      const auto [base, comb] = params(n);
      csv.rows.push_back({std::to_string(n), format_double(cost_ratio(base, comb))});
    }
  } else {
    const auto [base, comb] = params(a.n);
    csv.header = {"N", "vq_ops", "combined_ops", "ratio"};
    csv.rows.push_back({std::to_string(a.n), std::to_string(cost_vq(base)), std::to_string(cost_combined(comb)),
                        format_double(cost_ratio(base, comb))});
  }
  write_csv(out, csv);
  return kExitOk;
}

void add_scoring(CLI::App* sub, ScoringArgs& s, bool hybrid_default) {
  sub->add_option("--models", s.models, "Model directory written by enroll")->required();
  sub->add_option("--mode", s.mode, "Identification mode")
      ->check(CLI::IsMember({"vq", "mlp", "hybrid", "preselect-mlp"}))
      ->capture_default_str();
  if (!hybrid_default) s.mode = "vq";
  sub->add_option("--k", s.k, "Number of VQ candidates rescored by the networks")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  sub->add_option("--alpha", s.alpha, "Fusion weight; swept over the default grid when omitted")
      ->check(CLI::NonNegativeNumber);
  sub->add_option("--criterion", s.criterion, "Distortion criterion")
      ->check(CLI::IsMember({"mse", "mad"}))
      ->capture_default_str();
}

int category_exit(ErrorCategory c) {
  switch (c) {
    case ErrorCategory::kValidation: return kExitValidation;
    case ErrorCategory::kIo: return kExitIo;
    case ErrorCategory::kNumeric: return kExitNumeric;
    case ErrorCategory::kInternal: return kExitInternal;
  }
  return kExitInternal;
}

}  // namespace

int run(int argc, char** argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Hybrid VQ/MLP text-independent speaker identification", "hybrid-spkr"};
  app.config_formatter(std::make_shared<JsonConfig>());
  app.set_config("--config", "", "JSON file with option values; command-line flags take precedence");
  app.require_subcommand(1);
  app.allow_config_extras(CLI::config_extras_mode::error);

  Globals g;
  g.jobs = default_jobs();
  auto* seed_opt = app.add_option("--seed", g.seed, "Root seed")->envname("HYBRID_SPKR_SEED")->capture_default_str();
  app.add_option("--jobs", g.jobs, "Worker threads")->check(CLI::PositiveNumber)->capture_default_str();

  GenCorpusArgs gen;
  auto* gen_cmd = app.add_subcommand("gen-corpus", "Write a seeded synthetic corpus and its manifest");
  gen_cmd->add_option("--speakers", gen.speakers, "Number of speakers")->check(CLI::PositiveNumber)->capture_default_str();
  gen_cmd->add_option("--clips", gen.clips, "Clips per speaker")->check(CLI::Range(2, 1000))->capture_default_str();
  gen_cmd->add_option("--train-clips", gen.train_clips, "Training clips per speaker (0 = half)")->capture_default_str();
  gen_cmd->add_option("--test-snr-db", gen.test_snr_db, "SNR of the noise added to test clips")->capture_default_str();
  gen_cmd->add_flag("--clean-test", gen.clean_test, "Leave test clips noise-free");
  gen_cmd->add_option("--spread", gen.spread, "Spread of voices around the shared base")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  gen_cmd->add_option("--gain", gen.gain, "RMS level of each clip")->check(CLI::PositiveNumber)->capture_default_str();
  gen_cmd->add_option("--out", gen.out, "Output directory")->required();

  EnrollArgs en;
  auto* enroll_cmd = app.add_subcommand("enroll", "Train a codebook and a network per speaker");
  enroll_cmd->add_option("--manifest", en.manifest, "Corpus manifest")->required()->check(CLI::ExistingFile);
  enroll_cmd->add_option("--models", en.models, "Output model directory")->required();
  enroll_cmd->add_option("--bits", en.bits, "Codebook size in bits")->check(CLI::Range(1, 10))->capture_default_str();
  enroll_cmd->add_option("--starts", en.starts, "Random initialisations")->check(CLI::PositiveNumber)->capture_default_str();
  enroll_cmd->add_option("--warmup-epochs", en.warmup_epochs, "Epochs per initialisation")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  enroll_cmd->add_option("--final-epochs", en.final_epochs, "Epochs for the selected start")->capture_default_str();
  enroll_cmd->add_option("--hidden", en.hidden, "Hidden units")->check(CLI::PositiveNumber)->capture_default_str();
  enroll_cmd->add_flag("--normalize-inputs", en.normalize, "Standardise network inputs");

  IdentifyArgs id;
  auto* id_cmd = app.add_subcommand("identify", "Rank enrolled speakers for one WAV file");
  id_cmd->add_option("wav", id.wav, "8 or 16 kHz mono PCM WAV")->required();
  add_scoring(id_cmd, id.scoring, false);

  EvaluateArgs ev;
  auto* eval_cmd = app.add_subcommand("evaluate", "Error rates on the manifest's test clips");
  eval_cmd->add_option("--manifest", ev.manifest, "Corpus manifest")->required()->check(CLI::ExistingFile);
  add_scoring(eval_cmd, ev.scoring, true);
  eval_cmd->add_option("--codebook-sizes", ev.codebook_sizes, "Codebook sizes in bits; networks are reused")
      ->delimiter(',');
  eval_cmd->add_option("--json", ev.json_out, "Write the JSON report here");

  SweepArgs sw;
  auto* sweep_cmd = app.add_subcommand("sweep", "Error rate as a function of K or alpha");
  sweep_cmd->add_option("--manifest", sw.manifest, "Corpus manifest")->required()->check(CLI::ExistingFile);
  add_scoring(sweep_cmd, sw.scoring, true);
  sweep_cmd->add_option("--param", sw.param, "Swept parameter")->required()->check(CLI::IsMember({"k", "alpha"}));
  sweep_cmd->add_option("--points", sw.points, "Alpha grid size")->check(CLI::Range(2, 100000))->capture_default_str();
  sweep_cmd->add_option("--out", sw.out, "CSV output path (standard output when omitted)");

  CostArgs co;
  auto* cost_cmd = app.add_subcommand("cost", "Operation counts of VQ and the combined system");
  cost_cmd->add_option("--n", co.n, "Enrolled speakers")->capture_default_str();
  cost_cmd->add_option("--p", co.p, "LPCC order")->capture_default_str();
  cost_cmd->add_option("--tcl", co.tcl, "Codebook size of the combined system")->capture_default_str();
  cost_cmd->add_option("--tcl-baseline", co.tcl_baseline, "Codebook size of the VQ baseline")->capture_default_str();
  cost_cmd->add_option("--k", co.k, "Rescored candidates")->capture_default_str();
  cost_cmd->add_option("--ni", co.ni, "Network inputs")->capture_default_str();
  cost_cmd->add_option("--nh1", co.nh1, "Hidden units")->capture_default_str();
  cost_cmd->add_option("--ctg", co.ctg, "Cost of one sigmoid in operations")->capture_default_str();
  cost_cmd->add_flag("--curve", co.curve, "Print the ratio for N = 1..--n-max");
  cost_cmd->add_option("--n-max", co.n_max, "Last N of the curve")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "hybrid-spkr: " << e.what() << "\n";
    return kExitValidation;
  }
  g.seed_given = seed_opt->count() > 0;

  try {
    if (*gen_cmd) return cmd_gen_corpus(gen, g, out);
    if (*enroll_cmd) return cmd_enroll(en, g, out);
    if (*id_cmd) return cmd_identify(id, out);
    if (*eval_cmd) return cmd_evaluate(ev, g, out);
    if (*sweep_cmd) return cmd_sweep(sw, g, out);
    if (*cost_cmd) return cmd_cost(co, out);
  } catch (const Error& e) {
    err << "hybrid-spkr: " << e.what() << "\n";
    return category_exit(e.category());
  } catch (const std::exception& e) {
    err << "hybrid-spkr: internal error: " << e.what() << "\n";
    return kExitInternal;
  }
  return kExitInternal;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  std::vector<std::string> storage;
  storage.reserve(args.size() + 1);
  storage.emplace_back("hybrid-spkr");
  storage.insert(storage.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& s : storage) argv.push_back(s.data());
  argv.push_back(nullptr);
  return run(static_cast<int>(storage.size()), argv.data(), out, err);
}

}  // namespace hybrid_spkr::cli
