#pragma once

#include <filesystem>
#include <span>
#include <vector>

namespace ftb {

struct WavData {
  std::vector<float> samples;
  int sample_rate = 0;
};

// Mono WAV, 32-bit IEEE float PCM.
void write_wav(const std::filesystem::path& path, std::span<const float> samples,
               int sample_rate);

// Accepts mono float32 and mono int16 (converted to float).
WavData read_wav(const std::filesystem::path& path);

}  // namespace ftb
