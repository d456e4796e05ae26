#pragma once

#include <initializer_list>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace felce {

// Shortest round-trip decimal form; independent of the global locale.
std::string format_double(double value);

// Minimal comma-separated writer. Fields are written verbatim; callers only
// emit numbers and identifiers, so no quoting is performed.
class CsvWriter {
 public:
  explicit CsvWriter(std::ostream& out) : out_(out) {}

  void header(const std::vector<std::string>& columns);
  void row(const std::vector<std::string>& fields);

  CsvWriter& field(std::string_view text);
  CsvWriter& field(double value);
  CsvWriter& field(long long value);
  CsvWriter& field(unsigned long long value);
  CsvWriter& field(std::size_t value) {
    return field(static_cast<unsigned long long>(value));
  }
  CsvWriter& field(int value) { return field(static_cast<long long>(value)); }
  void end_row();

 private:
  std::ostream& out_;
  bool fresh_row_ = true;
};

}  // namespace felce
