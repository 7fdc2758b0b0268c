#pragma once

#include <stdexcept>
#include <string>

#include <json.hpp>

#include "carpetdim/system.hpp"

namespace carpetdim::cli {

// Malformed system file content: names the offending JSON field.
class SystemFileError : public std::runtime_error {
 public:
  SystemFileError(std::string field, const std::string& message)
      : std::runtime_error(field + ": " + message), field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

// Integers and "p/q" or decimal strings are exact; JSON floats are reals.
Param parse_param(const nlohmann::json& value, const std::string& field);

SystemSpec spec_from_json(const nlohmann::json& doc);
nlohmann::json spec_to_json(const SystemSpec& spec);

// Throws SystemFileError, ValidationError, nlohmann::json::parse_error.
BaranskiSystem parse_system(const std::string& text);
std::string serialize_system(const BaranskiSystem& system);

nlohmann::json param_to_json(const Param& p);

}  // namespace carpetdim::cli
