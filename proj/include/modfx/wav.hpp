#pragma once

// Mono RIFF/WAVE I/O. Reads 16-bit PCM and 32-bit IEEE float (plain or
// WAVE_FORMAT_EXTENSIBLE); writes 32-bit float. Samples are used as stored,
// with no normalisation beyond the integer-to-float scale of 1/32768.

#include <filesystem>
#include <vector>

namespace modfx {

struct Audio {
  std::vector<double> samples;
  double sample_rate = 44100.0;
};

Audio read_wav(const std::filesystem::path& path);
void write_wav(const std::filesystem::path& path, const Audio& audio);

} // namespace modfx
