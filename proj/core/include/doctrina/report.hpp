#pragma once

#include <array>
#include <string>
#include <vector>

#include <json.hpp>

namespace doctrina {

enum class Verdict { Holds, Fails, SizeExceededV };

std::string to_string(Verdict v);

// One named property verdict. A Fails verdict always carries a replayable
// witness: the json names the check, the offending objects/elements by index
// (and display name where available), and enough arguments to re-run the
// single failing instance.
struct CheckResult {
  std::string check;
  Verdict verdict = Verdict::Holds;
  nlohmann::json witness;            // null unless verdict == Fails
  std::vector<std::string> skipped;  // out-of-cap scope notes

  static CheckResult holds(std::string name) {
    return {std::move(name), Verdict::Holds, nullptr, {}};
  }
  static CheckResult fails(std::string name, nlohmann::json w) {
    return {std::move(name), Verdict::Fails, std::move(w), {}};
  }
  static CheckResult size_exceeded(std::string name, std::string why) {
    CheckResult r{std::move(name), Verdict::SizeExceededV, nullptr, {}};
    r.skipped.push_back(std::move(why));
    return r;
  }
};

struct StructureReport {
  std::vector<CheckResult> checks;

  void add(CheckResult r) { checks.push_back(std::move(r)); }
  void merge(const StructureReport& other) {
    checks.insert(checks.end(), other.checks.begin(), other.checks.end());
  }
  bool all_hold() const;       // no Fails entries
  bool any_fails() const;
  bool any_size_exceeded() const;
  const CheckResult* find(const std::string& name) const;

  nlohmann::json to_json() const;
  std::string to_text() const;
};

}  // namespace doctrina
