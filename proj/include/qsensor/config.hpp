// Minimal TOML-style experiment specs: [section] headers, key = value lines,
// strings, numbers, booleans and flat numeric arrays. Unknown keys are rejected
// against a per-command schema so specs stay self-describing.
#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace qs {

struct SpecValue {
  enum class Type { String, Number, Boolean, NumberList } type = Type::String;
  std::string str;
  double num = 0.0;
  bool boolean = false;
  std::vector<double> list;
};

class ExperimentSpec {
 public:
  // keys are "section.name"; top-level keys have no dot
  static ExperimentSpec parse_file(const std::string& path);
  static ExperimentSpec parse_string(const std::string& text, const std::string& origin = "<string>");

  bool has(const std::string& key) const { return values_.count(key) > 0; }
  double number(const std::string& key) const;
  double number_or(const std::string& key, double fallback) const;
  std::string text(const std::string& key) const;
  std::string text_or(const std::string& key, const std::string& fallback) const;
  bool flag_or(const std::string& key, bool fallback) const;
  std::vector<double> list_or(const std::string& key, std::vector<double> fallback) const;

  void override_value(const std::string& key, const SpecValue& v) { values_[key] = v; }

  // copy every key of `other` over this spec (user values over defaults)
  void overlay(const ExperimentSpec& other) {
    for (const auto& [key, value] : other.values_) values_[key] = value;
  }

  // throws std::invalid_argument when a key outside `allowed` is present
  void enforce_schema(const std::set<std::string>& allowed) const;

  // canonical "key = value" listing, sorted by key (used for output headers)
  std::vector<std::string> canonical_lines() const;

 private:
  std::map<std::string, SpecValue> values_;
};

}  // namespace qs
