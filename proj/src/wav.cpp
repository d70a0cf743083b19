#include "modfx/wav.hpp"

#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>
#include <string>

#include "modfx/error.hpp"

namespace modfx {

namespace {

static_assert(std::endian::native == std::endian::little, "WAV I/O assumes a little-endian host");

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

template <class T>
T load(const std::uint8_t* p)
{
  T v;
  std::memcpy(&v, p, sizeof v);
  return v;
}

template <class T>
void store(std::ofstream& out, T v)
{
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

} // namespace

Audio read_wav(const std::filesystem::path& path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw DataError("cannot open WAV file '" + path.string() + "'");
  }
  const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                        std::istreambuf_iterator<char>());
  const std::string name = "'" + path.string() + "'";
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0
      || std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
    throw DataError(name + " is not a RIFF/WAVE file");
  }

  std::uint16_t format = 0;
  std::uint16_t channels = 0;
  std::uint32_t rate = 0;
  std::uint16_t bits = 0;
  const std::uint8_t* data = nullptr;
  std::size_t data_size = 0;
  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const std::uint8_t* hdr = bytes.data() + pos;
    const std::size_t size = load<std::uint32_t>(hdr + 4);
    const std::size_t body = pos + 8;
    const std::size_t avail = std::min(size, bytes.size() - body);
    if (std::memcmp(hdr, "fmt ", 4) == 0) {
      if (avail < 16) {
        throw DataError(name + ": truncated fmt chunk");
      }
      format = load<std::uint16_t>(hdr + 8);
      channels = load<std::uint16_t>(hdr + 10);
      rate = load<std::uint32_t>(hdr + 12);
      bits = load<std::uint16_t>(hdr + 22);
      if (format == kFormatExtensible) {
        if (avail < 26) {
          throw DataError(name + ": truncated extensible fmt chunk");
        }
        format = load<std::uint16_t>(hdr + 8 + 24); // first two bytes of the sub-format GUID
      }
    } else if (std::memcmp(hdr, "data", 4) == 0) {
      data = bytes.data() + body;
      data_size = avail;
    }
    pos = body + size + (size & 1);
  }
  if (format == 0) {
    throw DataError(name + ": missing fmt chunk");
  }
  if (data == nullptr) {
    throw DataError(name + ": missing data chunk");
  }
  const bool pcm16 = format == kFormatPcm && bits == 16;
  const bool float32 = format == kFormatFloat && bits == 32;
  if (!pcm16 && !float32) {
    throw DataError(name + ": unsupported WAV format (format tag " + std::to_string(format) + ", "
                    + std::to_string(bits) + " bit); expected 16-bit PCM or 32-bit float");
  }
  if (channels != 1) {
    throw DataError(name + ": unsupported WAV format (" + std::to_string(channels)
                    + " channels); expected mono");
  }
  Audio a;
  a.sample_rate = rate;
  const std::size_t width = bits / 8;
  const std::size_t n = data_size / width;
  a.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint8_t* p = data + i * width;
    a.samples[i] = pcm16 ? load<std::int16_t>(p) / 32768.0 : static_cast<double>(load<float>(p));
  }
  return a;
}

void write_wav(const std::filesystem::path& path, const Audio& audio)
{
  if (!(audio.sample_rate > 0.0) || audio.sample_rate > std::numeric_limits<std::uint32_t>::max()) {
    throw InvalidArgument("write_wav: invalid sample rate");
  }
  const std::uint64_t data_bytes = audio.samples.size() * sizeof(float);
  if (data_bytes + 36 > std::numeric_limits<std::uint32_t>::max()) {
    throw InvalidArgument("write_wav: signal too long for a RIFF file");
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw DataError("cannot open '" + path.string() + "' for writing");
  }
  const auto rate = static_cast<std::uint32_t>(std::lround(audio.sample_rate));
  out.write("RIFF", 4);
  store<std::uint32_t>(out, static_cast<std::uint32_t>(36 + data_bytes));
  out.write("WAVEfmt ", 8);
  store<std::uint32_t>(out, 16);
  store<std::uint16_t>(out, kFormatFloat);
  store<std::uint16_t>(out, 1);
  store<std::uint32_t>(out, rate);
  store<std::uint32_t>(out, rate * 4);
  store<std::uint16_t>(out, 4);
  store<std::uint16_t>(out, 32);
  out.write("data", 4);
  store<std::uint32_t>(out, static_cast<std::uint32_t>(data_bytes));
  for (double v : audio.samples) {
    store<float>(out, static_cast<float>(v));
  }
  if (!out) {
    throw DataError("failed writing '" + path.string() + "'");
  }
}

} // namespace modfx
