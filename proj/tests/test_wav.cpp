#include <fstream>

#include "doctest.h"
#include "hybrid_spkr/audio.hpp"
#include "hybrid_spkr/error.hpp"
#include "test_support.hpp"

using namespace hybrid_spkr;

namespace {

ErrorCode code_of(const std::vector<unsigned char>& bytes) {
  try {
    decode_wav(bytes, "mem");
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::kInternal;
}

void put_u32(std::vector<unsigned char>& b, std::size_t at, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) b[at + i] = static_cast<unsigned char>((v >> (8 * i)) & 0xFF);
}

}  // namespace

TEST_CASE("16-bit PCM samples are normalised by 32768") {
  AudioClip clip{{0.0, 0.5, -1.0, 32767.0 / 32768.0, -0.25}, 8000};
  const auto bytes = encode_wav(clip);
  CHECK(bytes.size() == 44 + 2 * clip.samples.size());
  const auto back = decode_wav(bytes, "mem");
  CHECK(back.sample_rate_hz == 8000);
  CHECK(back.samples == clip.samples);
}

TEST_CASE("encoding clamps out-of-range samples") {
  AudioClip clip{{2.0, -2.0}, 16000};
  const auto back = decode_wav(encode_wav(clip), "mem");
  CHECK(back.samples[0] == doctest::Approx(32767.0 / 32768.0));
  CHECK(back.samples[1] == -1.0);
  CHECK(back.sample_rate_hz == 16000);
}

TEST_CASE("unknown chunks before the data chunk are skipped") {
  AudioClip clip{{0.25, -0.25, 0.125}, 8000};
  auto bytes = encode_wav(clip);
  // Insert a LIST chunk with an odd payload (padded) after fmt.
  std::vector<unsigned char> list{'L', 'I', 'S', 'T', 3, 0, 0, 0, 'a', 'b', 'c', 0};
  bytes.insert(bytes.begin() + 36, list.begin(), list.end());
  put_u32(bytes, 4, static_cast<std::uint32_t>(bytes.size() - 8));
  CHECK(decode_wav(bytes, "mem").samples == clip.samples);
}

TEST_CASE("malformed and unsupported files are reported distinctly") {
  const auto good = encode_wav(AudioClip{{0.1, 0.2}, 8000});

  CHECK(code_of({'n', 'o', 'p', 'e'}) == ErrorCode::kMalformedWav);

  auto rate = good;
  put_u32(rate, 24, 44100);
  CHECK(code_of(rate) == ErrorCode::kUnsupportedRate);

  auto stereo = good;
  stereo[22] = 2;
  CHECK(code_of(stereo) == ErrorCode::kMalformedWav);

  auto truncated = good;
  truncated.resize(40);
  CHECK(code_of(truncated) == ErrorCode::kMalformedWav);
}

TEST_CASE("file round trip and missing-file error") {
  const auto dir = test_support::scratch_dir("wav");
  AudioClip clip{{0.5, -0.5, 0.0, 0.125}, 16000};
  write_wav(dir / "a.wav", clip);
  CHECK(read_wav(dir / "a.wav").samples == clip.samples);
  try {
    read_wav(dir / "missing.wav");
    FAIL("expected missing file");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kMissingFile);
    CHECK(std::string(e.what()).find("missing.wav") != std::string::npos);
  }
}
