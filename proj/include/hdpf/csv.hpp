#pragma once

// Minimal CSV emission and a strict reader used to validate emitted files.

#include <charconv>
#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <ostream>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

namespace hdpf {

/// Shortest text that parses back to exactly `v`.
std::string format_double(double v);

class CsvWriter {
 public:
  CsvWriter(std::ostream& out, std::vector<std::string> header);

  template <class... Fields>
  void row(const Fields&... fields) {
    if (sizeof...(Fields) != columns_) {
      throw_column_mismatch(sizeof...(Fields));
    }
    bool first = true;
    ((emit(fields, first)), ...);
    out_ << '\n';
  }

 private:
  template <class T>
  void emit(const T& value, bool& first) {
    if (!first) out_ << ',';
    first = false;
    if constexpr (std::is_floating_point_v<T>) {
      out_ << format_double(static_cast<double>(value));
    } else if constexpr (std::is_integral_v<T>) {
      out_ << value;
    } else {
      out_ << std::string_view(value);
    }
  }

  [[noreturn]] void throw_column_mismatch(std::size_t got) const;

  std::ostream& out_;
  std::size_t columns_;
};

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Index of a named column; throws Error if absent.
  std::size_t column(std::string_view name) const;
  double number(std::size_t row, std::string_view name) const;
  const std::string& text(std::size_t row, std::string_view name) const;
};

/// Parses a CSV with a header row. Rejects rows whose column count differs
/// from the header, empty fields, and numeric-looking non-finite fields
/// (nan, inf).
CsvTable read_csv_strict(std::istream& in);
CsvTable read_csv_strict(const std::filesystem::path& path);

}  // namespace hdpf
