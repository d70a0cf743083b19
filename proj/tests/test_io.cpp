#include <catch_amalgamated.hpp>

#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>

#include "modfx/csv.hpp"
#include "modfx/diffmodel.hpp"
#include "modfx/error.hpp"
#include "modfx/params_io.hpp"
#include "modfx/wav.hpp"
#include "oracles.hpp"

using namespace modfx;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name)
{
  const fs::path p = fs::temp_directory_path() / ("modfx_io_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

void put_u32(std::ofstream& o, std::uint32_t v)
{
  for (int i = 0; i < 4; ++i) {
    o.put(static_cast<char>((v >> (8 * i)) & 0xff));
  }
}

void put_u16(std::ofstream& o, std::uint16_t v)
{
  o.put(static_cast<char>(v & 0xff));
  o.put(static_cast<char>(v >> 8));
}

// Little-endian PCM file with the given format fields and raw data bytes.
void write_raw_wav(const fs::path& p, std::uint16_t format, std::uint16_t channels, std::uint16_t bits,
                   const std::vector<char>& data)
{
  std::ofstream o(p, std::ios::binary);
  o.write("RIFF", 4);
  put_u32(o, static_cast<std::uint32_t>(36 + data.size()));
  o.write("WAVEfmt ", 8);
  put_u32(o, 16);
  put_u16(o, format);
  put_u16(o, channels);
  put_u32(o, 8000);
  put_u32(o, 8000u * channels * bits / 8);
  put_u16(o, static_cast<std::uint16_t>(channels * bits / 8));
  put_u16(o, bits);
  o.write("data", 4);
  put_u32(o, static_cast<std::uint32_t>(data.size()));
  o.write(data.data(), static_cast<std::streamsize>(data.size()));
}

} // namespace

TEST_CASE("csv round trip is bit-exact")
{
  const auto dir = scratch_dir("csv");
  const std::vector<double> v{0.1, -1.0 / 3.0, 1e-310, 6.02214076e23, std::nextafter(0.5, 1.0), 0.0};
  {
    CsvWriter w(dir / "a.csv", {"i", "x", "tag"});
    for (std::size_t i = 0; i < v.size(); ++i) {
      w.cell(static_cast<std::uint64_t>(i)).cell(v[i]).cell("ok").end_row();
    }
    w.close();
  }
  const auto t = read_csv(dir / "a.csv");
  CHECK(t.numbers("x") == v);
  CHECK(t.rows[2][2] == "ok");
  CHECK_THROWS_AS(t.column("missing"), DataError);
  CHECK_THROWS_AS(parse_double("1.5x", "test"), DataError);
  CHECK_THROWS_AS(read_csv(dir / "nope.csv"), DataError);

  CsvWriter w(dir / "b.csv", {"a", "b"});
  w.cell(1.0);
  CHECK_THROWS_AS(w.end_row(), InvalidArgument);
}

TEST_CASE("wav float round trip")
{
  const auto dir = scratch_dir("wav");
  Audio a{oracle::noise(1000, 1, 0.3), 48000.0};
  write_wav(dir / "f.wav", a);
  const auto b = read_wav(dir / "f.wav");
  CHECK(b.sample_rate == 48000.0);
  REQUIRE(b.samples.size() == a.samples.size());
  for (std::size_t i = 0; i < a.samples.size(); ++i) {
    REQUIRE(b.samples[i] == static_cast<double>(static_cast<float>(a.samples[i])));
  }
  CHECK_THROWS_AS(write_wav(dir / "z.wav", Audio{{0.0}, 0.0}), InvalidArgument);
}

TEST_CASE("wav 16-bit and unsupported formats")
{
  const auto dir = scratch_dir("wav16");
  const std::int16_t pcm[] = {0, 16384, -32768, 32767};
  std::vector<char> bytes(sizeof pcm);
  std::memcpy(bytes.data(), pcm, sizeof pcm);
  write_raw_wav(dir / "i16.wav", 1, 1, 16, bytes);
  const auto a = read_wav(dir / "i16.wav");
  CHECK(a.sample_rate == 8000.0);
  CHECK(a.samples == std::vector<double>{0.0, 0.5, -1.0, 32767.0 / 32768.0});

  write_raw_wav(dir / "u8.wav", 1, 1, 8, {1, 2, 3});
  CHECK_THROWS_AS(read_wav(dir / "u8.wav"), DataError);
  write_raw_wav(dir / "st.wav", 1, 2, 16, bytes);
  CHECK_THROWS_AS(read_wav(dir / "st.wav"), DataError);
  {
    std::ofstream o(dir / "junk.wav", std::ios::binary);
    o << "not a wave file at all";
  }
  CHECK_THROWS_AS(read_wav(dir / "junk.wav"), DataError);
  CHECK_THROWS_AS(read_wav(dir / "absent.wav"), DataError);
}

TEST_CASE("params json round trip")
{
  ModelShape s;
  s.variant = Variant::ApfCascade;
  s.feedback = FeedbackConfig::II;
  s.sections = 5;
  s.frame_length = 256;
  s.frame_count = 12;
  s.channels = 2;
  auto p = init_params(3, s);
  p.channels[1].bypass_svf2 = true;
  p.channels[0].comb.a1 = 1.0 / 3.0;
  const auto text = params_to_json(p);
  CHECK(params_from_json(text) == p);

  const auto dir = scratch_dir("params");
  save_params(dir / "p.json", p);
  CHECK(load_params(dir / "p.json") == p);
  CHECK_THROWS_AS(load_params(dir / "absent.json"), DataError);

  SECTION("corrupt field names its path")
  {
    auto bad = text;
    const auto pos = bad.find("\"b0\"");
    REQUIRE(pos != std::string::npos);
    bad.insert(bad.find(':', pos) + 1, " \"oops\",\"ignored\":");
    try {
      (void)params_from_json(bad);
      FAIL("expected DataError");
    } catch (const DataError& e) {
      CHECK(std::string(e.what()).find("channels[0].comb.b0") != std::string::npos);
    }
  }
  SECTION("malformed and wrong format")
  {
    CHECK_THROWS_AS(params_from_json("{"), DataError);
    CHECK_THROWS_AS(params_from_json("{\"format\": \"other\"}"), DataError);
  }
  SECTION("non-finite parameters are not written")
  {
    auto q = p;
    q.channels[0].lfo.b2 = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(params_to_json(q), NumericError);
  }
}
