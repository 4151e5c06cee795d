#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "roughball/g2.hpp"
#include "roughball/rough_path.hpp"

namespace roughball {

// Fixture formats:
//   G2Element      [d, b_1..b_d, c_11..c_dd]
//   CMPath         {"times": [...], "values": [[x_1..x_d], ...]}
//   GridRoughPath  {"times": [...], "steps": [[flat G2Element], ...]}

nlohmann::json to_json(const G2Element& x);
G2Element g2_from_json(const nlohmann::json& j);

nlohmann::json to_json(const CMPath& h);
CMPath cm_path_from_json(const nlohmann::json& j);

nlohmann::json to_json(const GridRoughPath& x);
GridRoughPath rough_path_from_json(const nlohmann::json& j);

/// Lower-case hex SHA-256 of a byte string.
std::string sha256_hex(std::string_view bytes);

/// Writes `content` to a temporary file next to `path`, then renames it into place.
void write_atomic(const std::filesystem::path& path, std::string_view content);

std::string read_file(const std::filesystem::path& path);

/// Shortest round-trip decimal form, independent of the locale ("nan", "inf", "-inf" for non-finite values).
std::string format_number(double x);

/// CSV text with '.' decimals and '\n' line endings. An optional leading comment carries the config hash.
class CsvWriter {
 public:
  explicit CsvWriter(std::vector<std::string> header, std::string config_hash = {});

  CsvWriter& cell(double x);
  CsvWriter& cell(long long x);
  CsvWriter& cell(unsigned long long x);
  CsvWriter& cell(int x) { return cell(static_cast<long long>(x)); }
  CsvWriter& cell(std::size_t x) { return cell(static_cast<unsigned long long>(x)); }
  CsvWriter& cell(bool x);
  CsvWriter& cell(std::string_view s);
  CsvWriter& cell(const char* s) { return cell(std::string_view(s)); }
  /// Ends the current row; throws if its width differs from the header.
  void end_row();

  const std::string& str() const { return text_; }

 private:
  void put(std::string_view raw);

  std::size_t width_;
  std::size_t column_ = 0;
  std::string text_;
};

}  // namespace roughball
