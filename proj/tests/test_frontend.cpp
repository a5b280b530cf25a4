#include <cmath>
#include <complex>
#include <numbers>
#include <random>
#include <sstream>

#include "doctest.h"
#include "hybrid_spkr/csv.hpp"
#include "hybrid_spkr/error.hpp"
#include "hybrid_spkr/frontend.hpp"
#include "test_support.hpp"

using namespace hybrid_spkr;

namespace {

double rms(const std::vector<double>& x, std::size_t skip) {
  double acc = 0.0;
  std::size_t n = 0;
  for (std::size_t i = skip; i + skip < x.size(); ++i, ++n) acc += x[i] * x[i];
  return std::sqrt(acc / static_cast<double>(n));
}

AudioClip tone(double freq_hz, int rate, std::size_t n) {
  AudioClip c;
  c.sample_rate_hz = rate;
  c.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) c.samples[i] = 0.5 * std::sin(2.0 * std::numbers::pi * freq_hz * i / rate);
  return c;
}

// Dense solve of the Toeplitz normal equations by Gaussian elimination.
std::vector<double> solve_normal_equations(const std::vector<double>& r, std::size_t p) {
  std::vector<std::vector<double>> m(p, std::vector<double>(p + 1));
  for (std::size_t i = 0; i < p; ++i) {
    for (std::size_t j = 0; j < p; ++j) m[i][j] = r[i > j ? i - j : j - i];
    m[i][p] = r[i + 1];
  }
  for (std::size_t c = 0; c < p; ++c) {
    std::size_t piv = c;
    for (std::size_t i = c + 1; i < p; ++i) {
      if (std::abs(m[i][c]) > std::abs(m[piv][c])) piv = i;
    }
    std::swap(m[c], m[piv]);
    for (std::size_t i = c + 1; i < p; ++i) {
      const double f = m[i][c] / m[c][c];
      for (std::size_t j = c; j <= p; ++j) m[i][j] -= f * m[c][j];
    }
  }
  std::vector<double> a(p);
  for (std::size_t i = p; i-- > 0;) {
    double acc = m[i][p];
    for (std::size_t j = i + 1; j < p; ++j) acc -= m[i][j] * a[j];
    a[i] = acc / m[i][i];
  }
  return a;
}

}  // namespace

TEST_CASE("frontend config defaults give 240-sample frames with an 80-sample shift") {
  FrontendConfig cfg;
  CHECK(cfg.frame_length() == 240);
  CHECK(cfg.frame_shift() == 80);
  CHECK_NOTHROW(cfg.validate());
  cfg.preemphasis_coeff = 1.0;
  CHECK_THROWS_AS(cfg.validate(), Error);
}

TEST_CASE("resampler halves the length and rejects other rates") {
  AudioClip c;
  c.sample_rate_hz = 16000;
  c.samples.assign(1000, 0.1);
  const auto out = resample_16k_to_8k(c);
  CHECK(out.sample_rate_hz == 8000);
  CHECK(out.samples.size() == 500);

  c.samples.assign(1001, 0.1);
  CHECK(resample_16k_to_8k(c).samples.size() == 501);

  c.sample_rate_hz = 8000;
  try {
    resample_16k_to_8k(c);
    FAIL("expected rate mismatch");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kRateMismatch);
  }
}

TEST_CASE("resampler passes DC once the filter has settled") {
  AudioClip c;
  c.sample_rate_hz = 16000;
  c.samples.assign(2000, 0.5);
  const auto out = resample_16k_to_8k(c);
  const std::size_t settle = decimation_filter().size() / 2;
  for (std::size_t i = settle; i + settle < out.samples.size(); ++i) CHECK(std::abs(out.samples[i] - 0.5) < 1e-6);
}

TEST_CASE("resampler attenuates a 7 kHz tone by at least 40 dB") {
  const auto in = tone(7000.0, 16000, 16000);
  const auto out = resample_16k_to_8k(in);
  const double ratio_db = 20.0 * std::log10(rms(out.samples, 64) / rms(in.samples, 128));
  CHECK(ratio_db <= -40.0);
  // A 1 kHz tone is passed nearly unchanged.
  const auto low = resample_16k_to_8k(tone(1000.0, 16000, 16000));
  CHECK(std::abs(rms(low.samples, 64) - rms(tone(1000.0, 16000, 16000).samples, 128)) < 0.01);
}

TEST_CASE("pre-emphasis follows the first-order recursion") {
  AudioClip c{{1.0, 1.0, 1.0}, 8000};
  const auto y = preemphasize(c, 0.95);
  CHECK(y.samples[0] == doctest::Approx(1.0));
  CHECK(y.samples[1] == doctest::Approx(0.05));
  CHECK(y.samples[2] == doctest::Approx(0.05));

  const auto z = preemphasize(AudioClip{{2.0, 0.0}, 8000}, 0.95);
  CHECK(z.samples[0] == doctest::Approx(2.0));
  CHECK(z.samples[1] == doctest::Approx(-1.9));

  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-1, 1);
  AudioClip r;
  for (int i = 0; i < 257; ++i) r.samples.push_back(u(rng));
  CHECK(preemphasize(r, 0.0).samples == r.samples);

  CHECK_THROWS_AS(preemphasize(AudioClip{}, 0.95), Error);
}

TEST_CASE("framing arithmetic") {
  FrontendConfig cfg;
  CHECK(frame_count(800, cfg) == 8);
  CHECK(frame_count(240, cfg) == 1);
  CHECK(frame_count(239, cfg) == 0);
  for (std::size_t len = 240; len < 3000; len += 37) CHECK(frame_count(len, cfg) == (len - 240) / 80 + 1);

  AudioClip ones{std::vector<double>(240, 1.0), 8000};
  const auto frames = frame_signal(ones, cfg);
  REQUIRE(frames.size() == 1);
  CHECK(frames[0] == hamming_window(240));

  AudioClip shorty{std::vector<double>(100, 1.0), 8000};
  try {
    frame_signal(shorty, cfg);
    FAIL("expected too-short");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kTooShort);
  }
}

TEST_CASE("Levinson-Durbin recovers an AR(2) process") {
  const auto x = test_support::ar_process({1.2, -0.72}, 100000, 2024);
  const auto lpc = lpc_analyze(x, 2);
  REQUIRE(lpc.has_value());
  CHECK(std::abs(lpc->coeffs[0] - 1.2) < 0.02);
  CHECK(std::abs(lpc->coeffs[1] + 0.72) < 0.02);
}

TEST_CASE("white noise yields a near-zero predictor") {
  std::mt19937_64 rng(99);
  std::normal_distribution<double> g;
  std::vector<double> x(10000);
  for (double& v : x) v = g(rng);
  const auto lpc = lpc_analyze(x, 12);
  REQUIRE(lpc.has_value());
  for (double a : lpc->coeffs) CHECK(std::abs(a) <= 0.2);
}

TEST_CASE("zero-energy frame is flagged") {
  std::vector<double> zero(240, 0.0);
  CHECK_FALSE(lpc_analyze(zero, 12).has_value());
}

TEST_CASE("Levinson-Durbin solves the normal equations and keeps reflections inside the unit circle") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> g;
  const auto window = hamming_window(240);
  for (int trial = 0; trial < 50; ++trial) {
    const auto x = test_support::ar_process({0.9, -0.5, 0.2}, 240, 1000 + trial);
    std::vector<double> frame(240);
    for (std::size_t i = 0; i < 240; ++i) frame[i] = (x[i] + 0.1 * g(rng)) * window[i];
    const auto lpc = lpc_analyze(frame, 12);
    REQUIRE(lpc.has_value());
    const auto& r = lpc->autocorr;
    double worst = 0.0;
    for (std::size_t i = 0; i < 12; ++i) {
      double acc = 0.0;
      for (std::size_t j = 0; j < 12; ++j) acc += r[i > j ? i - j : j - i] * lpc->coeffs[j];
      worst = std::max(worst, std::abs(acc - r[i + 1]));
    }
    CHECK(worst <= 1e-8 * r[0]);
    for (double k : lpc->reflection) CHECK(std::abs(k) < 1.0);

    // Independent dense solve agrees.
    const auto dense = solve_normal_equations(r, 12);
    for (std::size_t i = 0; i < 12; ++i) CHECK(lpc->coeffs[i] == doctest::Approx(dense[i]).epsilon(1e-6));
  }
}

TEST_CASE("LPC to cepstrum recursion") {
  const std::vector<double> zero(12, 0.0);
  CHECK(lpc_to_cepstrum(zero) == zero);

  const auto c = lpc_to_cepstrum(std::vector<double>{0.5, 0.0, 0.0});
  CHECK(c[0] == 0.5);
  CHECK(c[1] == doctest::Approx(0.125));
  CHECK(c[2] == doctest::Approx(1.0 / 24.0));

  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int t = 0; t < 20; ++t) {
    std::vector<double> a(12);
    for (double& v : a) v = u(rng);
    const auto first = lpc_to_cepstrum(a);
    CHECK(first[0] == a[0]);
    CHECK(lpc_to_cepstrum(a) == first);
  }
}

TEST_CASE("LPC to cepstrum matches the log-spectrum cepstrum of the all-pole model") {
  // Real cepstrum of 1/A(z) by numerical integration of log|1/A(e^jw)| on a dense grid.
  const std::vector<double> a{0.9, -0.4, 0.1};
  const auto c = lpc_to_cepstrum(a);
  const int n_fft = 4096;
  for (std::size_t n = 1; n <= a.size(); ++n) {
    double acc = 0.0;
    for (int k = 0; k < n_fft; ++k) {
      const double w = 2.0 * std::numbers::pi * k / n_fft;
      std::complex<double> A(1.0, 0.0);
      for (std::size_t m = 1; m <= a.size(); ++m) A -= a[m - 1] * std::polar(1.0, -w * static_cast<double>(m));
      const double log_mag = -std::log(std::abs(A));
      acc += log_mag * std::cos(w * static_cast<double>(n));
    }
    CHECK(c[n - 1] == doctest::Approx(2.0 * acc / n_fft).epsilon(1e-6));
  }
}

TEST_CASE("extract_lpcc composes the pipeline") {
  const auto x = test_support::ar_process({1.2, -0.72}, 800, 11);
  AudioClip clip{x, 8000};
  for (double& v : clip.samples) v *= 0.05;
  const auto seq = extract_lpcc(clip);
  CHECK(seq.frames.size() == 8);
  CHECK(seq.frames.dim() == 12);
  CHECK(seq.zero_energy_frames == 0);
  for (double v : seq.frames.data()) CHECK(std::isfinite(v));

  AudioClip wide{std::vector<double>(1600, 0.0), 16000};
  const auto y = test_support::ar_process({0.5}, 1600, 12);
  for (std::size_t i = 0; i < 1600; ++i) wide.samples[i] = 0.05 * y[i];
  CHECK(extract_lpcc(wide).frames.size() == extract_lpcc(AudioClip{std::vector<double>(800, 0.1), 8000}).frames.size());

  AudioClip silence{std::vector<double>(800, 0.0), 8000};
  const auto s = extract_lpcc(silence);
  CHECK(s.frames.size() == 8);
  CHECK(s.zero_energy_frames == 8);
  for (double v : s.frames.data()) CHECK(v == 0.0);

  AudioClip odd{std::vector<double>(800, 0.1), 44100};
  CHECK_THROWS_AS(extract_lpcc(odd), Error);
}

TEST_CASE("LPCC CSV export has one full-precision row per frame") {
  const auto x = test_support::ar_process({1.2, -0.72}, 800, 21);
  AudioClip clip{x, 8000};
  for (double& v : clip.samples) v *= 0.05;
  const auto seq = extract_lpcc(clip);
  std::ostringstream out;
  write_lpcc_csv(out, seq.frames);
  std::istringstream in("h\n" + out.str());
  const auto table = read_csv(in);
  REQUIRE(table.rows.size() == seq.frames.size());
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    REQUIRE(table.rows[i].size() == 12);
    for (std::size_t j = 0; j < 12; ++j) CHECK(parse_double(table.rows[i][j]) == seq.frames[i][j]);
  }
}
