#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "carpetdim/system.hpp"

namespace carpetdim::cli {

enum class Command { Dims, Hausdorff, Box, Diagnose, Approx, Empirical, Render };
enum class Format { Text, Json };

const char* to_string(Command c);

struct RunConfig {
  Command command = Command::Dims;
  std::string input_path;
  std::string output_path;  // empty: stdout
  Format format = Format::Text;
  std::uint64_t seed = 0;
  int threads = 1;
  std::optional<int> kmax;  // diagnose depth, or largest k for approx
  int qmin = 2;
  int qmax = 8;
  double base = 3.0;
  int resolution = 512;
  std::optional<double> delta;          // render scale, default 1/resolution
  std::optional<std::uint64_t> budget;  // word or rectangle cap
  int starts = 16;
  bool strict_ratio = false;
};

enum ExitCode : int {
  kExitOk = 0,
  kExitInternal = 1,
  kExitValidation = 2,
  kExitUnreadable = 3,
  kExitBudget = 4,
};

// Bad flags or flag combinations.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// File missing, unreadable, or not JSON.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// argv[0] is the program name. Throws UsageError; returns nullopt after
// printing help to out.
std::optional<RunConfig> parse_config(const std::vector<std::string>& args, std::ostream& out);

// Throws InputError, SystemFileError, ValidationError.
BaranskiSystem load_system(const std::string& path);

int execute(const RunConfig& config, const BaranskiSystem& system, std::ostream& out, std::ostream& err);

// Parse, load, execute, and map failures to exit codes.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace carpetdim::cli
