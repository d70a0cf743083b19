#include "modfx/csv.hpp"

#include <charconv>

#include "modfx/error.hpp"

namespace modfx {

std::string format_double(double v)
{
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

double parse_double(std::string_view text, std::string_view what)
{
  double v = 0.0;
  const char* end = text.data() + text.size();
  const auto r = std::from_chars(text.data(), end, v);
  if (r.ec != std::errc{} || r.ptr != end) {
    throw DataError("cannot parse '" + std::string(text) + "' as a number for "
                    + std::string(what));
  }
  return v;
}

CsvWriter::CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header)
    : path_(path), out_(path, std::ios::binary | std::ios::trunc), columns_(header.size())
{
  if (!out_) {
    throw DataError("cannot open '" + path.string() + "' for writing");
  }
  for (const auto& h : header) {
    cell(h);
  }
  end_row();
}

CsvWriter& CsvWriter::cell(double v)
{
  return cell(std::string_view(format_double(v)));
}

CsvWriter& CsvWriter::cell(std::int64_t v)
{
  return cell(std::string_view(std::to_string(v)));
}

CsvWriter& CsvWriter::cell(std::uint64_t v)
{
  return cell(std::string_view(std::to_string(v)));
}

CsvWriter& CsvWriter::cell(std::string_view v)
{
  if (in_row_ > 0) {
    out_ << ',';
  }
  if (v.find_first_of(",\"\n") != std::string_view::npos) {
    out_ << '"';
    for (char c : v) {
      if (c == '"') {
        out_ << '"';
      }
      out_ << c;
    }
    out_ << '"';
  } else {
    out_ << v;
  }
  ++in_row_;
  return *this;
}

void CsvWriter::end_row()
{
  if (in_row_ != columns_) {
    throw InvalidArgument("CsvWriter: row has " + std::to_string(in_row_) + " cells, header has "
                          + std::to_string(columns_));
  }
  out_ << '\n';
  in_row_ = 0;
}

void CsvWriter::close()
{
  out_.close();
  if (!out_) {
    throw DataError("failed writing '" + path_.string() + "'");
  }
}

namespace {

std::vector<std::string> split_line(const std::string& line)
{
  std::vector<std::string> cells;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      cells.push_back(std::move(cur));
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  cells.push_back(std::move(cur));
  return cells;
}

} // namespace

std::size_t CsvTable::column(std::string_view name) const
{
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) {
      return i;
    }
  }
  throw DataError("CSV has no column '" + std::string(name) + "'");
}

std::vector<double> CsvTable::numbers(std::string_view name) const
{
  const std::size_t c = column(name);
  std::vector<double> out;
  out.reserve(rows.size());
  for (const auto& r : rows) {
    if (c >= r.size()) {
      throw DataError("CSV row too short for column '" + std::string(name) + "'");
    }
    out.push_back(parse_double(r[c], name));
  }
  return out;
}

CsvTable read_csv(const std::filesystem::path& path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw DataError("cannot open '" + path.string() + "'");
  }
  CsvTable t;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty()) {
      continue;
    }
    if (first) {
      t.header = split_line(line);
      first = false;
    } else {
      t.rows.push_back(split_line(line));
    }
  }
  if (first) {
    throw DataError("'" + path.string() + "' is empty");
  }
  return t;
}

} // namespace modfx
