#include <fmt/format.h>

#include <json.hpp>

#include "qnet/cli.hpp"

namespace qnet::cli {

Report::Report(std::vector<std::string> command, std::optional<std::uint64_t> seed)
    : command_(std::move(command)), seed_(seed) {}

void Report::add(std::string key, std::string value) { entries_.push_back({std::move(key), std::move(value)}); }

void Report::raw(std::string line) { entries_.push_back({"", std::move(line)}); }

std::string format_real(double x) {
  if (x == 0.0) x = 0.0;  // no "-0"
  std::string s = fmt::format("{:.12f}", x);
  return s == "-0.000000000000" ? "0.000000000000" : s;
}

std::string Report::text() const {
  std::string out = fmt::format("schema={}\n", kReportSchema);
  out += "command=";
  for (std::size_t i = 0; i < command_.size(); ++i) out += (i ? " " : "") + command_[i];
  out += '\n';
  out += fmt::format("seed={}\n", seed_ ? std::to_string(*seed_) : "-");
  for (const auto& e : entries_) {
    out += e.key.empty() ? e.value : e.key + "=" + e.value;
    out += '\n';
  }
  out += fmt::format("status={}\n", status_);
  return out;
}

std::string Report::json() const {
  nlohmann::ordered_json j;
  j["schema"] = kReportSchema;
  j["command"] = command_;
  j["seed"] = seed_ ? nlohmann::ordered_json(*seed_) : nlohmann::ordered_json(nullptr);
  auto entries = nlohmann::ordered_json::array();
  for (const auto& e : entries_) {
    if (e.key.empty()) {
      entries.push_back({{"line", e.value}});
    } else {
      entries.push_back({{"key", e.key}, {"value", e.value}});
    }
  }
  j["entries"] = std::move(entries);
  j["status"] = status_;
  return j.dump(2) + "\n";
}

}  // namespace qnet::cli
