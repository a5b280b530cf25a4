#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace hybrid_spkr {

inline constexpr int kTargetRateHz = 8000;
inline constexpr int kWideRateHz = 16000;

// Mono PCM audio with samples normalized to [-1, 1].
struct AudioClip {
  std::vector<double> samples;
  int sample_rate_hz = kTargetRateHz;
};

// Reads a RIFF/WAVE file holding 16-bit mono PCM at 8 or 16 kHz.
// Samples are divided by 32768.
AudioClip read_wav(const std::filesystem::path& path);

// Writes 16-bit mono PCM. Samples are scaled by 32768, rounded and clamped.
void write_wav(const std::filesystem::path& path, const AudioClip& clip);

// In-memory forms of the above, used by the file functions and by tests.
AudioClip decode_wav(const std::vector<unsigned char>& bytes, const std::string& origin);
std::vector<unsigned char> encode_wav(const AudioClip& clip);

}  // namespace hybrid_spkr
