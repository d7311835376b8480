#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace relax {

enum class Status { Pass, Fail, Skip };
const char* to_string(Status s);

/// One PASS/FAIL line; `metrics` are the numbers behind the verdict.
struct CheckLine {
  int criterion = 0;
  std::string title;
  Status status = Status::Fail;
  std::vector<std::pair<std::string, double>> metrics;
  std::string note;
  double seconds = 0.0;

  bool failed() const { return status == Status::Fail; }
  /// "PASS [ 7] evans: winding_big=0 ..."
  std::string summary() const;
};

std::uint64_t fnv1a64(const std::string& bytes);
std::string hex64(std::uint64_t v);

/// Fixed formatting for every number written by the tools.
std::string format_number(double v);

/// Collects artifacts in one output directory and writes the index.
class Report {
 public:
  explicit Report(std::filesystem::path dir);

  const std::filesystem::path& dir() const { return dir_; }

  void write_text(const std::string& name, const std::string& text);
  void write_csv(const std::string& name, const std::vector<std::string>& header,
                 const std::vector<std::vector<double>>& rows);
  void write_csv(const std::string& name, const std::vector<std::string>& header,
                 const std::vector<std::vector<std::string>>& rows);

  void add_check(CheckLine line) { checks_.push_back(std::move(line)); }
  const std::vector<CheckLine>& checks() const { return checks_; }
  bool all_pass() const;

  /// Writes checks.csv, summary.txt and index.json. The timestamp is the only
  /// run-dependent field of the index. Throws when nothing was produced.
  void finalize(const std::string& subcommand, const std::string& timestamp);

  /// index.json content without writing it.
  std::string index_json(const std::string& subcommand, const std::string& timestamp) const;

 private:
  std::filesystem::path dir_;
  std::vector<std::string> artifacts_;
  std::vector<CheckLine> checks_;
};

std::string utc_timestamp();

}  // namespace relax
