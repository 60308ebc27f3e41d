#include "hdpf/csv.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>

#include "hdpf/error.hpp"

namespace hdpf {

std::string format_double(double v) {
  std::array<char, 32> buf{};
  const auto result = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), result.ptr);
}

CsvWriter::CsvWriter(std::ostream& out, std::vector<std::string> header)
    : out_(out), columns_(header.size()) {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (i) out_ << ',';
    out_ << header[i];
  }
  out_ << '\n';
}

void CsvWriter::throw_column_mismatch(std::size_t got) const {
  throw Error("csv: row has " + std::to_string(got) + " fields, header has " +
              std::to_string(columns_));
}

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return s;
}

bool is_non_finite_token(const std::string& field) {
  std::string s = lower(field);
  if (!s.empty() && (s[0] == '+' || s[0] == '-')) s.erase(0, 1);
  return s == "nan" || s == "inf" || s == "infinity" || s.rfind("nan(", 0) == 0;
}

}  // namespace

CsvTable read_csv_strict(std::istream& in) {
  CsvTable table;
  std::string line;
  if (!std::getline(in, line) || line.empty()) {
    throw Error("csv: missing header row");
  }
  table.header = split_line(line);
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) throw Error("csv: empty line " + std::to_string(line_no));
    auto fields = split_line(line);
    if (fields.size() != table.header.size()) {
      throw Error("csv: line " + std::to_string(line_no) + " has " +
                  std::to_string(fields.size()) + " fields, expected " +
                  std::to_string(table.header.size()));
    }
    for (const auto& f : fields) {
      if (f.empty()) {
        throw Error("csv: empty field on line " + std::to_string(line_no));
      }
      if (is_non_finite_token(f)) {
        throw Error("csv: non-finite value '" + f + "' on line " +
                    std::to_string(line_no));
      }
    }
    table.rows.push_back(std::move(fields));
  }
  return table;
}

CsvTable read_csv_strict(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("csv: cannot open " + path.string());
  return read_csv_strict(in);
}

std::size_t CsvTable::column(std::string_view name) const {
  const auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) {
    throw Error("csv: no column named '" + std::string(name) + "'");
  }
  return static_cast<std::size_t>(it - header.begin());
}

double CsvTable::number(std::size_t row, std::string_view name) const {
  const std::string& field = rows.at(row).at(column(name));
  double v = 0.0;
  const auto res = std::from_chars(field.data(), field.data() + field.size(), v);
  if (res.ec != std::errc{} || res.ptr != field.data() + field.size() ||
      !std::isfinite(v)) {
    throw Error("csv: field '" + field + "' in column '" + std::string(name) +
                "' is not a finite number");
  }
  return v;
}

const std::string& CsvTable::text(std::size_t row, std::string_view name) const {
  return rows.at(row).at(column(name));
}

}  // namespace hdpf
