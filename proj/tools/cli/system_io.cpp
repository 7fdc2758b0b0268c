#include "system_io.hpp"

#include <cmath>

namespace carpetdim::cli {

using nlohmann::json;

Param parse_param(const json& value, const std::string& field) {
  if (value.is_number_integer()) {
    if (value.is_number_unsigned() && value.get<std::uint64_t>() > static_cast<std::uint64_t>(INT64_MAX)) {
      throw SystemFileError(field, "integer out of range");
    }
    return Param::rational(Rational(value.get<std::int64_t>()));
  }
  if (value.is_number_float()) {
    const double v = value.get<double>();
    if (!std::isfinite(v)) throw SystemFileError(field, "non-finite number");
    return Param::real(v);
  }
  if (value.is_string()) {
    try {
      return Param::rational(Rational::parse(value.get<std::string>()));
    } catch (const std::exception& e) {
      throw SystemFileError(field, "cannot parse '" + value.get<std::string>() + "' as a rational");
    }
  }
  throw SystemFileError(field, "expected a number or a \"p/q\" string");
}

namespace {

const json& require(const json& doc, const char* key) {
  auto it = doc.find(key);
  if (it == doc.end()) throw SystemFileError(key, "missing required key");
  return *it;
}

std::vector<Param> parse_ratio_list(const json& doc, const char* key) {
  const json& list = require(doc, key);
  if (!list.is_array()) throw SystemFileError(key, "expected an array");
  std::vector<Param> out;
  for (std::size_t i = 0; i < list.size(); ++i) {
    out.push_back(parse_param(list[i], std::string(key) + "[" + std::to_string(i) + "]"));
  }
  return out;
}

int parse_index(const json& v, const std::string& field) {
  if (!v.is_number_integer()) throw SystemFileError(field, "expected a 1-based integer index");
  const auto i = v.get<std::int64_t>();
  if (i < 1 || i > 1'000'000) throw SystemFileError(field, "index must be between 1 and 1000000");
  return static_cast<int>(i - 1);
}

// Object keyed by 1-based index, or an array aligned with the strips
// (null entries allowed for empty strips).
std::map<int, Param> parse_translations(const json& doc, const char* key) {
  const json& t = require(doc, key);
  std::map<int, Param> out;
  if (t.is_object()) {
    for (const auto& [k, v] : t.items()) {
      const std::string field = std::string(key) + "." + k;
      std::size_t used = 0;
      long long index = 0;
      try {
        index = std::stoll(k, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != k.size() || index < 1 || index > 1'000'000) {
        throw SystemFileError(field, "keys must be 1-based integer indices");
      }
      out.emplace(static_cast<int>(index - 1), parse_param(v, field));
    }
  } else if (t.is_array()) {
    for (std::size_t i = 0; i < t.size(); ++i) {
      if (t[i].is_null()) continue;
      out.emplace(static_cast<int>(i), parse_param(t[i], std::string(key) + "[" + std::to_string(i) + "]"));
    }
  } else {
    throw SystemFileError(key, "expected an object or an array");
  }
  return out;
}

}  // namespace

SystemSpec spec_from_json(const json& doc) {
  if (!doc.is_object()) throw SystemFileError("<root>", "expected a JSON object");
  SystemSpec spec;
  spec.column_widths = parse_ratio_list(doc, "column_widths");
  spec.row_heights = parse_ratio_list(doc, "row_heights");
  const json& pattern = require(doc, "pattern");
  if (!pattern.is_array()) throw SystemFileError("pattern", "expected an array of [column, row] pairs");
  for (std::size_t n = 0; n < pattern.size(); ++n) {
    const std::string field = "pattern[" + std::to_string(n) + "]";
    const json& pair = pattern[n];
    if (!pair.is_array() || pair.size() != 2) throw SystemFileError(field, "expected a [column, row] pair");
    spec.pattern.push_back({parse_index(pair[0], field), parse_index(pair[1], field)});
  }
  spec.column_translations = parse_translations(doc, "column_translations");
  spec.row_translations = parse_translations(doc, "row_translations");
  return spec;
}

json param_to_json(const Param& p) {
  if (p.is_exact()) return p.exact->to_string();
  return p.value;
}

json spec_to_json(const SystemSpec& spec) {
  json doc = json::object();
  auto list = [](const std::vector<Param>& ps) {
    json a = json::array();
    for (const auto& p : ps) a.push_back(param_to_json(p));
    return a;
  };
  auto translations = [](const std::map<int, Param>& ts) {
    json o = json::object();
    for (const auto& [i, p] : ts) o[std::to_string(i + 1)] = param_to_json(p);
    return o;
  };
  doc["column_widths"] = list(spec.column_widths);
  doc["row_heights"] = list(spec.row_heights);
  json pattern = json::array();
  for (const Cell& c : spec.pattern) pattern.push_back({c.col + 1, c.row + 1});
  doc["pattern"] = pattern;
  doc["column_translations"] = translations(spec.column_translations);
  doc["row_translations"] = translations(spec.row_translations);
  return doc;
}

BaranskiSystem parse_system(const std::string& text) { return validate(spec_from_json(json::parse(text))); }

std::string serialize_system(const BaranskiSystem& system) { return spec_to_json(system.to_spec()).dump(2) + "\n"; }

}  // namespace carpetdim::cli
