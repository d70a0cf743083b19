#pragma once

// Versioned JSON parameter files. Doubles are written in shortest round-trip
// form, so save -> load reproduces every parameter bit-exactly. Parse errors
// name the offending field.

#include <filesystem>
#include <string>

#include "modfx/diffmodel.hpp"

namespace modfx {

inline constexpr int kParamsFormatVersion = 1;

std::string params_to_json(const ModelParams& params);
ModelParams params_from_json(const std::string& text);

void save_params(const std::filesystem::path& path, const ModelParams& params);
ModelParams load_params(const std::filesystem::path& path);

} // namespace modfx
