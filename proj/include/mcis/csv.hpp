// Copyright 2026 The MCIS Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef MCIS_CSV_HPP
#define MCIS_CSV_HPP

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace mcis {

/// Shortest decimal representation that round-trips (std::to_chars); "nan"/"inf"/"-inf" for
/// non-finite values.
std::string format_double(double value);

/// Inverse of format_double. Throws ParseError with the given position on malformed input.
double parse_double(std::string_view text, std::size_t line = 0, std::size_t column = 0);

/// Splits one comma-separated line (no quoting).
std::vector<std::string_view> split_csv_line(std::string_view line);

/// Appends comma-separated fields to a string buffer.
class CsvRow {
 public:
  explicit CsvRow(std::string& out) : out_(out) {}
  ~CsvRow() { out_.push_back('\n'); }
  CsvRow(const CsvRow&) = delete;
  CsvRow& operator=(const CsvRow&) = delete;

  CsvRow& operator<<(std::string_view s);
  CsvRow& operator<<(double v);
  CsvRow& operator<<(std::int64_t v);
  CsvRow& operator<<(std::uint64_t v);
  CsvRow& operator<<(int v) { return *this << static_cast<std::int64_t>(v); }

 private:
  void separator();
  std::string& out_;
  bool first_ = true;
};

}  // namespace mcis

#endif  // MCIS_CSV_HPP
