#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace qnet::cli {

inline constexpr const char* kReportSchema = "qnetsim-report/1";

/// Line-oriented run report: `key=value` lines after a fixed header, with an
/// equivalent JSON rendering.
class Report {
 public:
  Report(std::vector<std::string> command, std::optional<std::uint64_t> seed);

  void add(std::string key, std::string value);
  /// A line printed verbatim in text form (e.g. a state dump).
  void raw(std::string line);
  void set_status(std::string status) { status_ = std::move(status); }
  const std::string& status() const noexcept { return status_; }

  std::string text() const;
  std::string json() const;

 private:
  struct Entry {
    std::string key;  // empty for raw lines
    std::string value;
  };
  std::vector<std::string> command_;
  std::optional<std::uint64_t> seed_;
  std::vector<Entry> entries_;
  std::string status_ = "ok";
};

std::string format_real(double x);

struct CommandResult {
  int exit_code = 0;
  std::string out;
  std::string err;
};

inline constexpr int kExitOk = 0;
inline constexpr int kExitProtocol = 1;
inline constexpr int kExitUsage = 2;

/// Runs one qnetsim invocation; `args` excludes the program name. Never
/// throws: diagnostics go to `err` and the exit code classifies them.
CommandResult run(const std::vector<std::string>& args);

}  // namespace qnet::cli
