#include "roughball/io.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <system_error>

#include <openssl/evp.h>

#include "roughball/error.hpp"

namespace roughball {

namespace {

std::vector<double> number_array(const nlohmann::json& j, const char* what) {
  if (!j.is_array()) throw InvalidArgument(std::string(what) + " must be an array of numbers");
  std::vector<double> out;
  out.reserve(j.size());
  for (const auto& v : j) {
    if (!v.is_number()) throw InvalidArgument(std::string(what) + " must be an array of numbers");
    out.push_back(v.get<double>());
  }
  return out;
}

const nlohmann::json& member(const nlohmann::json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) throw InvalidArgument(std::string("fixture lacks \"") + key + "\"");
  return j.at(key);
}

}  // namespace

nlohmann::json to_json(const G2Element& x) { return x.to_flat(); }

G2Element g2_from_json(const nlohmann::json& j) { return G2Element::from_flat(number_array(j, "G2 element")); }

nlohmann::json to_json(const CMPath& h) {
  nlohmann::json values = nlohmann::json::array();
  for (Eigen::Index k = 0; k < h.values.rows(); ++k) {
    std::vector<double> row(h.values.cols());
    for (Eigen::Index c = 0; c < h.values.cols(); ++c) row[static_cast<std::size_t>(c)] = h.values(k, c);
    values.push_back(row);
  }
  return {{"times", h.times}, {"values", values}};
}

CMPath cm_path_from_json(const nlohmann::json& j) {
  auto times = number_array(member(j, "times"), "times");
  const auto& rows = member(j, "values");
  if (!rows.is_array() || rows.empty()) throw InvalidArgument("values must be a nonempty array of rows");
  const auto d = number_array(rows.front(), "values row").size();
  Eigen::MatrixXd values(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(d));
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const auto row = number_array(rows[k], "values row");
    if (row.size() != d) throw InvalidArgument("values rows must share one dimension");
    for (std::size_t c = 0; c < d; ++c) values(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(c)) = row[c];
  }
  return CMPath(std::move(times), std::move(values));
}

nlohmann::json to_json(const GridRoughPath& x) {
  nlohmann::json steps = nlohmann::json::array();
  for (std::size_t k = 0; k < x.num_steps(); ++k) steps.push_back(x.step(k).to_flat());
  return {{"times", x.times()}, {"steps", steps}};
}

GridRoughPath rough_path_from_json(const nlohmann::json& j) {
  auto times = number_array(member(j, "times"), "times");
  const auto& raw = member(j, "steps");
  if (!raw.is_array() || raw.empty()) throw InvalidArgument("steps must be a nonempty array");
  std::vector<G2Element> steps;
  steps.reserve(raw.size());
  for (const auto& s : raw) steps.push_back(g2_from_json(s));
  return GridRoughPath(std::move(times), steps);
}

std::string sha256_hex(std::string_view bytes) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int length = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest.data(), &length, EVP_sha256(), nullptr) != 1) {
    throw NumericalError("SHA-256 digest failed");
  }
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * length);
  for (unsigned int i = 0; i < length; ++i) {
    out.push_back(hex[digest[i] >> 4]);
    out.push_back(hex[digest[i] & 15]);
  }
  return out;
}

void write_atomic(const std::filesystem::path& path, std::string_view content) {
  namespace fs = std::filesystem;
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) throw std::runtime_error("write to " + tmp.string() + " failed");
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp);
    throw std::runtime_error("cannot move " + tmp.string() + " into place: " + ec.message());
  }
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

std::string format_number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  if (x == 0.0) return "0";
  std::array<char, 32> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), x);
  return std::string(buf.data(), res.ptr);
}

CsvWriter::CsvWriter(std::vector<std::string> header, std::string config_hash) : width_(header.size()) {
  if (header.empty()) throw InvalidArgument("CSV header must not be empty");
  if (!config_hash.empty()) text_ = "# config_sha256: " + config_hash + "\n";
  for (const auto& h : header) cell(std::string_view(h));
  end_row();
}

void CsvWriter::put(std::string_view raw) {
  if (column_ == width_) throw InvalidArgument("CSV row is wider than the header");
  if (column_ > 0) text_.push_back(',');
  text_.append(raw);
  ++column_;
}

CsvWriter& CsvWriter::cell(double x) {
  put(format_number(x));
  return *this;
}

CsvWriter& CsvWriter::cell(long long x) {
  put(std::to_string(x));
  return *this;
}

CsvWriter& CsvWriter::cell(unsigned long long x) {
  put(std::to_string(x));
  return *this;
}

CsvWriter& CsvWriter::cell(bool x) {
  put(x ? "true" : "false");
  return *this;
}

CsvWriter& CsvWriter::cell(std::string_view s) {
  if (s.find_first_of(",\"\n\r") == std::string_view::npos) {
    put(s);
    return *this;
  }
  std::string quoted = "\"";
  for (char c : s) {
    if (c == '"') quoted.push_back('"');
    quoted.push_back(c);
  }
  quoted.push_back('"');
  put(quoted);
  return *this;
}

void CsvWriter::end_row() {
  if (column_ != width_) throw InvalidArgument("CSV row width differs from the header");
  text_.push_back('\n');
  column_ = 0;
}

}  // namespace roughball
