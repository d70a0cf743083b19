#pragma once

// Minimal CSV I/O. Numbers are written in the shortest form that parses back
// to the same double, so files round-trip bit-exactly.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

namespace modfx {

std::string format_double(double v);
double parse_double(std::string_view text, std::string_view what);

class CsvWriter {
public:
  CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header);

  CsvWriter& cell(double v);
  CsvWriter& cell(std::int64_t v);
  CsvWriter& cell(std::uint64_t v);
  CsvWriter& cell(int v) { return cell(static_cast<std::int64_t>(v)); }
  CsvWriter& cell(std::string_view v);
  CsvWriter& cell(const char* v) { return cell(std::string_view(v)); }
  void end_row();
  void close();

private:
  std::filesystem::path path_;
  std::ofstream out_;
  std::size_t columns_ = 0;
  std::size_t in_row_ = 0;
};

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(std::string_view name) const;
  std::vector<double> numbers(std::string_view name) const;
};

CsvTable read_csv(const std::filesystem::path& path);

} // namespace modfx
