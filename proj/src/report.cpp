#include "relax/report.hpp"

#include "relax/common.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <iterator>
#include <sstream>

namespace relax {

const char* to_string(Status s) {
  switch (s) {
    case Status::Pass: return "PASS";
    case Status::Fail: return "FAIL";
    case Status::Skip: return "SKIP";
  }
  return "FAIL";
}

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

std::string CheckLine::summary() const {
  char head[32];
  std::snprintf(head, sizeof head, "%s [%2d] ", to_string(status), criterion);
  std::string s = head + title;
  if (!metrics.empty()) s += ":";
  for (const auto& [k, v] : metrics) s += " " + k + "=" + format_number(v);
  if (!note.empty()) s += " (" + note + ")";
  return s;
}

std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

namespace {

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw RelaxError(ErrorKind::Io, "cannot read " + p.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::string csv_line(const std::vector<std::string>& cells) {
  std::string s;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) s += ',';
    const bool quote = cells[i].find_first_of(",\"\n") != std::string::npos;
    if (!quote) {
      s += cells[i];
      continue;
    }
    s += '"';
    for (char c : cells[i]) s += c == '"' ? std::string("\"\"") : std::string(1, c);
    s += '"';
  }
  return s + "\n";
}

}  // namespace

Report::Report(std::filesystem::path dir) : dir_(std::move(dir)) {
  std::error_code ec;
  std::filesystem::create_directories(dir_, ec);
  if (ec) throw RelaxError(ErrorKind::Io, "cannot create output directory " + dir_.string() + ": " + ec.message());
}

void Report::write_text(const std::string& name, const std::string& text) {
  const auto path = dir_ / name;
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
  out.close();
  if (!out) throw RelaxError(ErrorKind::Io, "write failed: " + path.string());
  if (std::find(artifacts_.begin(), artifacts_.end(), name) == artifacts_.end()) artifacts_.push_back(name);
}

void Report::write_csv(const std::string& name, const std::vector<std::string>& header,
                       const std::vector<std::vector<double>>& rows) {
  std::vector<std::vector<std::string>> cells;
  cells.reserve(rows.size());
  for (const auto& r : rows) {
    std::vector<std::string> c;
    for (double v : r) c.push_back(format_number(v));
    cells.push_back(std::move(c));
  }
  write_csv(name, header, cells);
}

void Report::write_csv(const std::string& name, const std::vector<std::string>& header,
                       const std::vector<std::vector<std::string>>& rows) {
  std::string s = csv_line(header);
  for (const auto& r : rows) {
    if (r.size() != header.size()) throw RelaxError(ErrorKind::InvalidInput, name + ": row width mismatch");
    s += csv_line(r);
  }
  write_text(name, s);
}

bool Report::all_pass() const {
  return std::none_of(checks_.begin(), checks_.end(), [](const CheckLine& c) { return c.failed(); });
}

std::string Report::index_json(const std::string& subcommand, const std::string& timestamp) const {
  nlohmann::ordered_json j;
  j["subcommand"] = subcommand;
  j["generated_at"] = timestamp;
  auto names = artifacts_;
  std::sort(names.begin(), names.end());
  j["artifacts"] = nlohmann::ordered_json::array();
  for (const auto& n : names) {
    const std::string bytes = read_file(dir_ / n);
    j["artifacts"].push_back({{"name", n}, {"bytes", bytes.size()}, {"fnv1a64", hex64(fnv1a64(bytes))}});
  }
  j["checks"] = nlohmann::ordered_json::array();
  for (const auto& c : checks_) j["checks"].push_back({{"criterion", c.criterion}, {"status", to_string(c.status)}});
  j["all_pass"] = all_pass();
  return j.dump(2) + "\n";
}

void Report::finalize(const std::string& subcommand, const std::string& timestamp) {
  if (checks_.empty() && artifacts_.empty())
    throw RelaxError(ErrorKind::InvalidInput, "report: no results to summarise");
  std::vector<std::vector<std::string>> rows;
  std::string summary;
  for (const auto& c : checks_) {
    summary += c.summary() + "\n";
    if (c.metrics.empty()) rows.push_back({std::to_string(c.criterion), c.title, to_string(c.status), "", ""});
    for (const auto& [k, v] : c.metrics)
      rows.push_back({std::to_string(c.criterion), c.title, to_string(c.status), k, format_number(v)});
  }
  write_csv("checks.csv", {"criterion", "title", "status", "metric", "value"}, rows);
  write_text("summary.txt", summary);
  const auto path = dir_ / "index.json";
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << index_json(subcommand, timestamp);
  out.close();
  if (!out) throw RelaxError(ErrorKind::Io, "write failed: " + path.string());
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace relax
