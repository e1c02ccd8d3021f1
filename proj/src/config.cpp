#include "qsensor/config.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace qs {

namespace {

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r");
  size_t b = s.find_last_not_of(" \t\r");
  if (a == std::string::npos) return "";
  return s.substr(a, b - a + 1);
}

SpecValue parse_value(const std::string& raw, const std::string& where) {
  SpecValue v;
  if (raw.empty()) throw std::invalid_argument(where + ": empty value");
  if (raw.front() == '"') {
    if (raw.size() < 2 || raw.back() != '"')
      throw std::invalid_argument(where + ": unterminated string");
    v.type = SpecValue::Type::String;
    v.str = raw.substr(1, raw.size() - 2);
    return v;
  }
  if (raw == "true" || raw == "false") {
    v.type = SpecValue::Type::Boolean;
    v.boolean = raw == "true";
    return v;
  }
  if (raw.front() == '[') {
    if (raw.back() != ']') throw std::invalid_argument(where + ": unterminated array");
    v.type = SpecValue::Type::NumberList;
    std::stringstream ss(raw.substr(1, raw.size() - 2));
    std::string item;
    while (std::getline(ss, item, ',')) {
      item = trim(item);
      if (item.empty()) continue;
      size_t used = 0;
      v.list.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(where + ": bad array element " + item);
    }
    return v;
  }
  size_t used = 0;
  try {
    v.num = std::stod(raw, &used);
  } catch (const std::exception&) {
    throw std::invalid_argument(where + ": cannot parse value '" + raw + "'");
  }
  if (used != raw.size())
    throw std::invalid_argument(where + ": trailing characters in value '" + raw + "'");
  v.type = SpecValue::Type::Number;
  return v;
}

}  // namespace

ExperimentSpec ExperimentSpec::parse_string(const std::string& text, const std::string& origin) {
  ExperimentSpec spec;
  std::stringstream ss(text);
  std::string line, section;
  int line_no = 0;
  while (std::getline(ss, line)) {
    ++line_no;
    const std::string where = origin + ":" + std::to_string(line_no);
    const size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw std::invalid_argument(where + ": bad section header");
      section = trim(line.substr(1, line.size() - 2));
      if (section.empty()) throw std::invalid_argument(where + ": empty section name");
      continue;
    }
    const size_t eq = line.find('=');
    if (eq == std::string::npos) throw std::invalid_argument(where + ": expected key = value");
    std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw std::invalid_argument(where + ": empty key");
    const std::string full_key = section.empty() ? key : section + "." + key;
    if (spec.values_.count(full_key))
      throw std::invalid_argument(where + ": duplicate key " + full_key);
    spec.values_[full_key] = parse_value(trim(line.substr(eq + 1)), where);
  }
  return spec;
}

ExperimentSpec ExperimentSpec::parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open spec file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_string(ss.str(), path);
}

double ExperimentSpec::number(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) throw std::invalid_argument("missing required key " + key);
  if (it->second.type != SpecValue::Type::Number)
    throw std::invalid_argument("key " + key + " is not a number");
  return it->second.num;
}

double ExperimentSpec::number_or(const std::string& key, double fallback) const {
  auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  if (it->second.type != SpecValue::Type::Number)
    throw std::invalid_argument("key " + key + " is not a number");
  return it->second.num;
}

std::string ExperimentSpec::text(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) throw std::invalid_argument("missing required key " + key);
  if (it->second.type != SpecValue::Type::String)
    throw std::invalid_argument("key " + key + " is not a string");
  return it->second.str;
}

std::string ExperimentSpec::text_or(const std::string& key, const std::string& fallback) const {
  return has(key) ? text(key) : fallback;
}

bool ExperimentSpec::flag_or(const std::string& key, bool fallback) const {
  auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  if (it->second.type != SpecValue::Type::Boolean)
    throw std::invalid_argument("key " + key + " is not a boolean");
  return it->second.boolean;
}

std::vector<double> ExperimentSpec::list_or(const std::string& key,
                                            std::vector<double> fallback) const {
  auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  if (it->second.type != SpecValue::Type::NumberList)
    throw std::invalid_argument("key " + key + " is not an array");
  return it->second.list;
}

void ExperimentSpec::enforce_schema(const std::set<std::string>& allowed) const {
  for (const auto& [key, value] : values_) {
    (void)value;
    if (!allowed.count(key)) throw std::invalid_argument("unknown key " + key);
  }
}

std::vector<std::string> ExperimentSpec::canonical_lines() const {
  std::vector<std::string> lines;
  char buf[64];
  for (const auto& [key, v] : values_) {
    std::string rhs;
    switch (v.type) {
      case SpecValue::Type::String: rhs = "\"" + v.str + "\""; break;
      case SpecValue::Type::Boolean: rhs = v.boolean ? "true" : "false"; break;
      case SpecValue::Type::Number: {
        std::snprintf(buf, sizeof buf, "%.17g", v.num);
        rhs = buf;
        break;
      }
      case SpecValue::Type::NumberList: {
        rhs = "[";
        for (size_t i = 0; i < v.list.size(); ++i) {
          std::snprintf(buf, sizeof buf, "%.17g", v.list[i]);
          rhs += (i ? ", " : "") + std::string(buf);
        }
        rhs += "]";
        break;
      }
    }
    lines.push_back(key + " = " + rhs);
  }
  return lines;
}

}  // namespace qs
