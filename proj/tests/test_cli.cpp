#include <cstdlib>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "cli.hpp"
#include "doctest.h"
#include "hybrid_spkr/csv.hpp"
#include "test_support.hpp"

namespace fs = std::filesystem;
using hybrid_spkr::CsvTable;
using hybrid_spkr::read_csv;

namespace {

struct Result {
  int code = 0;
  std::string out;
  std::string err;
};

Result cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = hybrid_spkr::cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

CsvTable csv_of(const std::string& text) {
  std::istringstream in(text);
  return read_csv(in);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// One small enrolled corpus shared by the scoring tests.
struct Enrolled {
  fs::path root;
  std::string manifest;
  std::string models;
};

const Enrolled& enrolled() {
  static const Enrolled e = [] {
    Enrolled x;
    x.root = test_support::scratch_dir("cli_shared");
    x.manifest = (x.root / "corpus" / "manifest.json").string();
    x.models = (x.root / "models").string();
    REQUIRE(cli({"--seed", "3", "gen-corpus", "--speakers", "3", "--clips", "4", "--out",
                 (x.root / "corpus").string()})
                .code == 0);
    const auto r = cli({"--jobs", "2", "enroll", "--manifest", x.manifest, "--models", x.models, "--bits", "2",
                        "--final-epochs", "3"});
    REQUIRE(r.code == 0);
    return x;
  }();
  return e;
}

}  // namespace

TEST_CASE("cost defaults") {
  const auto r = cli({"cost"});
  CHECK(r.code == 0);
  CHECK(r.err.empty());
  const auto t = csv_of(r.out);
  CHECK(t.header == std::vector<std::string>{"N", "vq_ops", "combined_ops", "ratio"});
  CHECK(t.rows.at(0).at(1) == "58368");
  CHECK(t.rows.at(0).at(2) == "15328");
  CHECK(hybrid_spkr::parse_double(t.rows[0][3]) == doctest::Approx(3.81).epsilon(0.002));
}

TEST_CASE("cost without rescoring and the ratio curve") {
  const auto same = csv_of(cli({"cost", "--k", "0", "--tcl", "128"}).out);
  CHECK(same.rows[0][1] == same.rows[0][2]);

  const auto curve = csv_of(cli({"cost", "--curve", "--n-max", "200"}).out);
  CHECK(curve.header == std::vector<std::string>{"N", "ratio"});
  REQUIRE(curve.rows.size() == 200);
  double prev = 0.0;
  for (const auto& row : curve.rows) {
    const double r = hybrid_spkr::parse_double(row[1]);
    CHECK(r > prev);
    CHECK(r < 4.0);
    prev = r;
  }
  CHECK(cli({"cost", "--n", "0"}).code == hybrid_spkr::cli::kExitValidation);
}

TEST_CASE("argument errors exit with the validation code") {
  CHECK(cli({}).code == 2);
  CHECK(cli({"frobnicate"}).code == 2);
  CHECK(cli({"cost", "--n", "abc"}).code == 2);
  const auto help = cli({"--help"});
  CHECK(help.code == 0);
  CHECK(help.out.find("gen-corpus") != std::string::npos);
}

TEST_CASE("config file values apply unless a flag overrides them") {
  const auto dir = test_support::scratch_dir("cli_config");
  std::ofstream(dir / "cfg.json") << R"({"cost": {"n": 20, "tcl": 32}})";
  const auto cfg = (dir / "cfg.json").string();
  CHECK(csv_of(cli({"--config", cfg, "cost"}).out).rows[0][0] == "20");
  CHECK(csv_of(cli({"--config", cfg, "cost", "--n", "5"}).out).rows[0][0] == "5");

  std::ofstream(dir / "bad.json") << "[1, 2";
  CHECK(cli({"--config", (dir / "bad.json").string(), "cost"}).code == 2);
  std::ofstream(dir / "extra.json") << R"({"cost": {"bogus": 1}})";
  CHECK(cli({"--config", (dir / "extra.json").string(), "cost"}).code == 2);
}

TEST_CASE("gen-corpus writes a reproducible corpus") {
  const auto d1 = test_support::scratch_dir("cli_gen1");
  const auto d2 = test_support::scratch_dir("cli_gen2");
  const auto r = cli({"--seed", "11", "gen-corpus", "--out", d1.string()});
  CHECK(r.code == 0);
  CHECK(r.out.find("manifest.json") != std::string::npos);

  ::setenv("HYBRID_SPKR_SEED", "11", 1);
  const auto r2 = cli({"--jobs", "3", "gen-corpus", "--out", d2.string()});
  ::unsetenv("HYBRID_SPKR_SEED");
  CHECK(r2.code == 0);

  std::size_t wavs = 0;
  for (const auto& e : fs::recursive_directory_iterator(d1)) {
    if (!e.is_regular_file()) continue;
    if (e.path().extension() == ".wav") ++wavs;
    CHECK(slurp(e.path()) == slurp(d2 / fs::relative(e.path(), d1)));
  }
  CHECK(wavs == 100);
  CHECK(fs::exists(d1 / "manifest.json"));
  CHECK(cli({"gen-corpus", "--speakers", "0", "--out", d1.string()}).code == 2);
}

TEST_CASE("enroll writes one model per speaker") {
  const auto& e = enrolled();
  for (const char* f : {"index.json", "model_000.json", "model_001.json", "model_002.json"}) {
    CHECK(fs::exists(fs::path(e.models) / f));
  }
  const auto model = nlohmann::json::parse(slurp(fs::path(e.models) / "model_001.json"));
  CHECK(model["codebook"]["centroids"].size() == 4 * 12);

  const auto again = test_support::scratch_dir("cli_enroll_again");
  const auto r = cli({"--jobs", "1", "enroll", "--manifest", e.manifest, "--models", again.string(), "--bits", "2",
                      "--final-epochs", "3"});
  CHECK(r.code == 0);
  CHECK(csv_of(r.out).rows.size() == 3);
  for (const char* f : {"index.json", "model_000.json", "model_001.json", "model_002.json"}) {
    CHECK(slurp(fs::path(e.models) / f) == slurp(again / f));
  }
  CHECK(cli({"enroll", "--manifest", e.manifest, "--models", again.string(), "--bits", "11"}).code == 2);
}

TEST_CASE("identify listings") {
  const auto& e = enrolled();
  const auto wav = (e.root / "corpus" / "spk001" / "test_03.wav").string();
  const auto vq = csv_of(cli({"identify", wav, "--models", e.models, "--mode", "vq"}).out);
  REQUIRE(vq.rows.size() == 3);
  for (std::size_t i = 1; i < 3; ++i) {
    CHECK(hybrid_spkr::parse_double(vq.rows[i - 1][2]) <= hybrid_spkr::parse_double(vq.rows[i][2]));
  }
  const auto hy2 = csv_of(cli({"identify", wav, "--models", e.models, "--mode", "hybrid", "--k", "2", "--alpha", "0.1"}).out);
  CHECK(hy2.rows.size() == 2);
  const auto hy1 = csv_of(cli({"identify", wav, "--models", e.models, "--mode", "hybrid", "--k", "1", "--alpha", "5"}).out);
  CHECK(hy1.rows.at(0).at(1) == vq.rows[0][1]);
  CHECK(csv_of(cli({"identify", wav, "--models", e.models, "--mode", "mlp"}).out).rows.size() == 3);

  CHECK(cli({"identify", wav, "--models", e.models, "--mode", "hybrid"}).code == 2);
  CHECK(cli({"identify", wav, "--models", e.models, "--mode", "hybrid", "--k", "4", "--alpha", "1"}).code == 2);
  CHECK(cli({"identify", "/nonexistent.wav", "--models", e.models}).code == 3);
  const auto empty = test_support::scratch_dir("cli_empty_models");
  const auto r = cli({"identify", wav, "--models", empty.string()});
  CHECK(r.code == 3);
  CHECK_FALSE(r.err.empty());
}

TEST_CASE("evaluate reports the same numbers in JSON and text") {
  const auto& e = enrolled();
  const auto json_path = (e.root / "report.json").string();
  const auto r = cli({"evaluate", "--manifest", e.manifest, "--models", e.models, "--codebook-sizes", "1,2",
                      "--json", json_path});
  REQUIRE(r.code == 0);
  CHECK(r.err.empty());
  const auto report = nlohmann::json::parse(slurp(json_path));
  REQUIRE(report["rows"].size() == 2);
  CHECK(report["rows"][0]["bits"] == 1);
  CHECK(report["test_utterances"] == 6);
  for (const auto& row : report["rows"]) {
    for (const char* col : {"vq", "combined_mse", "combined_mad"}) {
      const std::string frac =
          "(" + std::to_string(row[col]["errors"].get<int>()) + "/" + std::to_string(row[col]["total"].get<int>()) + ")";
      CHECK(r.out.find(frac) != std::string::npos);
    }
  }
  CHECK(report["detail"]["utterances"].size() == 6);

  // Re-running gives the same bytes.
  const auto json2 = (e.root / "report2.json").string();
  cli({"--jobs", "3", "evaluate", "--manifest", e.manifest, "--models", e.models, "--codebook-sizes", "1,2",
       "--json", json2});
  CHECK(slurp(json_path) == slurp(json2));
}

TEST_CASE("evaluate refuses models from another corpus") {
  const auto& e = enrolled();
  const auto other = test_support::scratch_dir("cli_other");
  cli({"--seed", "4", "gen-corpus", "--speakers", "3", "--clips", "4", "--out", other.string()});
  const auto r = cli({"evaluate", "--manifest", (other / "manifest.json").string(), "--models", e.models});
  CHECK(r.code == 2);
}

TEST_CASE("sweep CSV schemas") {
  const auto& e = enrolled();
  const auto k = cli({"sweep", "--manifest", e.manifest, "--models", e.models, "--param", "k", "--alpha", "0.1"});
  REQUIRE(k.code == 0);
  const auto kt = csv_of(k.out);
  CHECK(kt.header == std::vector<std::string>{"K", "combined_error", "mlp_only_error"});
  CHECK(kt.rows.size() == 3);

  const auto path = (e.root / "alpha.csv").string();
  const auto a = cli({"sweep", "--manifest", e.manifest, "--models", e.models, "--param", "alpha", "--out", path});
  REQUIRE(a.code == 0);
  CHECK(a.out.empty());
  const auto text = slurp(path);
  const auto at = csv_of(text);
  CHECK(at.header == std::vector<std::string>{"alpha", "error"});
  CHECK(at.rows.size() == 100);
  std::ostringstream back;
  hybrid_spkr::write_csv(back, at);
  CHECK(back.str() == text);
  for (const auto& row : at.rows) {
    CHECK(hybrid_spkr::format_double(hybrid_spkr::parse_double(row[0])) == row[0]);
  }
  CHECK(cli({"sweep", "--manifest", e.manifest, "--models", e.models, "--param", "beta"}).code == 2);
}
