#include "doctrina/report.hpp"

#include <sstream>

namespace doctrina {

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::Holds: return "holds";
    case Verdict::Fails: return "fails";
    case Verdict::SizeExceededV: return "size-exceeded";
  }
  return "?";
}

bool StructureReport::all_hold() const { return !any_fails(); }

bool StructureReport::any_fails() const {
  for (const auto& c : checks)
    if (c.verdict == Verdict::Fails) return true;
  return false;
}

bool StructureReport::any_size_exceeded() const {
  for (const auto& c : checks)
    if (c.verdict == Verdict::SizeExceededV) return true;
  return false;
}

const CheckResult* StructureReport::find(const std::string& name) const {
  for (const auto& c : checks)
    if (c.check == name) return &c;
  return nullptr;
}

nlohmann::json StructureReport::to_json() const {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& c : checks) {
    nlohmann::json e;
    e["check"] = c.check;
    e["verdict"] = to_string(c.verdict);
    if (c.verdict == Verdict::Fails) e["witness"] = c.witness;
    if (!c.skipped.empty()) e["skipped"] = c.skipped;
    arr.push_back(std::move(e));
  }
  return arr;
}

std::string StructureReport::to_text() const {
  std::ostringstream os;
  for (const auto& c : checks) {
    os << c.check << ": " << to_string(c.verdict) << '\n';
    if (c.verdict == Verdict::Fails)
      os << "  witness: " << c.witness.dump() << '\n';
    for (const auto& s : c.skipped) os << "  skipped: " << s << '\n';
  }
  return os.str();
}

}  // namespace doctrina
