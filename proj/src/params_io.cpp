#include "modfx/params_io.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "modfx/error.hpp"

namespace modfx {

namespace {

using nlohmann::json;

constexpr const char* kFormatName = "modfx-params";

json svf_to_json(const SVFParams& s)
{
  return {{"f_raw", s.f_raw}, {"r_raw", s.r_raw}, {"m_low", s.m_low}, {"m_band", s.m_band},
          {"m_high", s.m_high}};
}

template <std::size_t W>
json array_to_json(const std::array<double, W>& a)
{
  return json(std::vector<double>(a.begin(), a.end()));
}

const json& field(const json& obj, const std::string& key, const std::string& where)
{
  if (!obj.is_object()) {
    throw DataError("params: '" + where + "' is not an object");
  }
  const auto it = obj.find(key);
  if (it == obj.end()) {
    throw DataError("params: missing field '" + where + "." + key + "'");
  }
  return *it;
}

double number(const json& obj, const std::string& key, const std::string& where)
{
  const json& v = field(obj, key, where);
  if (!v.is_number()) {
    throw DataError("params: field '" + where + "." + key + "' must be a number");
  }
  const double d = v.get<double>();
  if (!std::isfinite(d)) {
    throw DataError("params: field '" + where + "." + key + "' is not finite");
  }
  return d;
}

std::size_t count(const json& obj, const std::string& key, const std::string& where)
{
  const json& v = field(obj, key, where);
  if (!v.is_number_unsigned()) {
    throw DataError("params: field '" + where + "." + key + "' must be a non-negative integer");
  }
  return v.get<std::size_t>();
}

std::string text(const json& obj, const std::string& key, const std::string& where)
{
  const json& v = field(obj, key, where);
  if (!v.is_string()) {
    throw DataError("params: field '" + where + "." + key + "' must be a string");
  }
  return v.get<std::string>();
}

bool flag(const json& obj, const std::string& key, const std::string& where)
{
  const auto it = obj.find(key);
  if (it == obj.end()) {
    return false;
  }
  if (!it->is_boolean()) {
    throw DataError("params: field '" + where + "." + key + "' must be a boolean");
  }
  return it->get<bool>();
}

std::vector<double> numbers(const json& obj, const std::string& key, const std::string& where)
{
  const json& v = field(obj, key, where);
  if (!v.is_array()) {
    throw DataError("params: field '" + where + "." + key + "' must be an array");
  }
  std::vector<double> out;
  out.reserve(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!v[i].is_number() || !std::isfinite(v[i].get<double>())) {
      throw DataError("params: field '" + where + "." + key + "[" + std::to_string(i)
                      + "]' must be a finite number");
    }
    out.push_back(v[i].get<double>());
  }
  return out;
}

template <std::size_t W>
std::array<double, W> fixed(const json& obj, const std::string& key, const std::string& where)
{
  const auto v = numbers(obj, key, where);
  if (v.size() != W) {
    throw DataError("params: field '" + where + "." + key + "' must have " + std::to_string(W)
                    + " entries, found " + std::to_string(v.size()));
  }
  std::array<double, W> a{};
  std::copy(v.begin(), v.end(), a.begin());
  return a;
}

SVFParams svf_from_json(const json& obj, const std::string& where)
{
  SVFParams s;
  s.f_raw = number(obj, "f_raw", where);
  s.r_raw = number(obj, "r_raw", where);
  s.m_low = number(obj, "m_low", where);
  s.m_band = number(obj, "m_band", where);
  s.m_high = number(obj, "m_high", where);
  return s;
}

template <class E, class F>
E enum_field(const json& obj, const std::string& key, const std::string& where, F parse)
{
  const std::string s = text(obj, key, where);
  try {
    return parse(s);
  } catch (const InvalidArgument& e) {
    throw DataError("params: field '" + where + "." + key + "': " + e.what());
  }
}

} // namespace

std::string params_to_json(const ModelParams& params)
{
  for (double v : flatten(params)) {
    if (!std::isfinite(v)) {
      throw NumericError("params_to_json: refusing to write non-finite parameters");
    }
  }
  json chans = json::array();
  for (const auto& ch : params.channels) {
    chans.push_back({
        {"variant", to_string(ch.variant)},
        {"sections", ch.sections},
        {"feedback", to_string(ch.feedback)},
        {"bypass_svf1", ch.bypass_svf1},
        {"bypass_svf2", ch.bypass_svf2},
        {"comb", {{"b0", ch.comb.b0}, {"b1", ch.comb.b1}, {"a1", ch.comb.a1}}},
        {"svf1", svf_to_json(ch.svf1)},
        {"svf2", svf_to_json(ch.svf2)},
        {"lfo",
         {{"lut", ch.lfo.lut},
          {"w1", array_to_json(ch.lfo.w1)},
          {"b1", array_to_json(ch.lfo.b1)},
          {"w2", array_to_json(ch.lfo.w2)},
          {"b2", ch.lfo.b2}}},
    });
  }
  const json doc = {
      {"format", kFormatName},
      {"version", kParamsFormatVersion},
      {"frame_length", params.frame_length},
      {"frame_count", params.frame_count},
      {"sample_rate", params.sample_rate},
      {"channels", chans},
  };
  return doc.dump(2) + "\n";
}

ModelParams params_from_json(const std::string& input)
{
  json doc;
  try {
    doc = json::parse(input);
  } catch (const json::parse_error& e) {
    throw DataError(std::string("params: malformed JSON: ") + e.what());
  }
  const std::string root = "params";
  if (text(doc, "format", root) != kFormatName) {
    throw DataError("params: field 'params.format' is not '" + std::string(kFormatName) + "'");
  }
  const std::size_t version = count(doc, "version", root);
  if (version != static_cast<std::size_t>(kParamsFormatVersion)) {
    throw DataError("params: unsupported version " + std::to_string(version) + " in 'params.version'");
  }
  ModelParams p;
  p.frame_length = count(doc, "frame_length", root);
  p.frame_count = count(doc, "frame_count", root);
  p.sample_rate = number(doc, "sample_rate", root);
  if (p.frame_length < 2 || p.frame_length % 2 != 0) {
    throw DataError("params: field 'params.frame_length' must be even and >= 2");
  }
  if (!(p.sample_rate > 0.0)) {
    throw DataError("params: field 'params.sample_rate' must be positive");
  }
  const json& chans = field(doc, "channels", root);
  if (!chans.is_array() || chans.empty()) {
    throw DataError("params: field 'params.channels' must be a non-empty array");
  }
  for (std::size_t c = 0; c < chans.size(); ++c) {
    const std::string where = "channels[" + std::to_string(c) + "]";
    const json& j = chans[c];
    ChannelParams ch;
    ch.variant = enum_field<Variant>(j, "variant", where, variant_from_string);
    ch.feedback = enum_field<FeedbackConfig>(j, "feedback", where, feedback_from_string);
    const json& k = field(j, "sections", where);
    if (!k.is_number_integer() || k.get<long long>() < 1) {
      throw DataError("params: field '" + where + ".sections' must be a positive integer");
    }
    ch.sections = k.get<int>();
    ch.bypass_svf1 = flag(j, "bypass_svf1", where);
    ch.bypass_svf2 = flag(j, "bypass_svf2", where);
    const json& comb = field(j, "comb", where);
    ch.comb.b0 = number(comb, "b0", where + ".comb");
    ch.comb.b1 = number(comb, "b1", where + ".comb");
    ch.comb.a1 = number(comb, "a1", where + ".comb");
    ch.svf1 = svf_from_json(field(j, "svf1", where), where + ".svf1");
    ch.svf2 = svf_from_json(field(j, "svf2", where), where + ".svf2");
    const json& lfo = field(j, "lfo", where);
    const std::string lw = where + ".lfo";
    ch.lfo.lut = numbers(lfo, "lut", lw);
    if (ch.lfo.lut.size() != p.frame_count) {
      throw DataError("params: field '" + lw + ".lut' has " + std::to_string(ch.lfo.lut.size())
                      + " entries, frame_count is " + std::to_string(p.frame_count));
    }
    ch.lfo.w1 = fixed<kMlpWidth>(lfo, "w1", lw);
    ch.lfo.b1 = fixed<kMlpWidth>(lfo, "b1", lw);
    ch.lfo.w2 = fixed<kMlpWidth>(lfo, "w2", lw);
    ch.lfo.b2 = number(lfo, "b2", lw);
    p.channels.push_back(std::move(ch));
  }
  return p;
}

void save_params(const std::filesystem::path& path, const ModelParams& params)
{
  const std::string s = params_to_json(params);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw DataError("cannot open '" + path.string() + "' for writing");
  }
  out << s;
  if (!out) {
    throw DataError("failed writing '" + path.string() + "'");
  }
}

ModelParams load_params(const std::filesystem::path& path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw DataError("cannot open params file '" + path.string() + "'");
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return params_from_json(ss.str());
}

} // namespace modfx
