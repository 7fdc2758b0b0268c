#include "app.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "carpetdim/approx.hpp"
#include "carpetdim/boxcount.hpp"
#include "carpetdim/error.hpp"
#include "carpetdim/moran.hpp"
#include "carpetdim/overlap.hpp"
#include "carpetdim/variational.hpp"
#include "system_io.hpp"

namespace carpetdim::cli {

using nlohmann::json;

namespace {

constexpr int kSchemaVersion = 1;

enum class LogLevel { Quiet, Warn, Info, Debug };

LogLevel log_level() {
  const char* env = std::getenv("CARPETDIM_LOG");
  if (!env) return LogLevel::Warn;
  const std::string v(env);
  if (v == "quiet" || v == "0" || v == "off") return LogLevel::Quiet;
  if (v == "info" || v == "2") return LogLevel::Info;
  if (v == "debug" || v == "3") return LogLevel::Debug;
  return LogLevel::Warn;
}

void log(std::ostream& err, LogLevel level, const std::string& message) {
  if (log_level() < level) return;
  static const char* names[] = {"", "warn", "info", "debug"};
  err << "[" << names[static_cast<int>(level)] << "] " << message << "\n";
}

std::string num(double v, int precision = 10) {
  std::ostringstream os;
  os << std::setprecision(precision) << v;
  return os.str();
}

void row(std::ostream& out, const std::string& key, const std::string& value) {
  out << std::left << std::setw(24) << key << value << "\n";
}

const char* to_string(SystemKind k) {
  return k == SystemKind::BedfordMcMullenType ? "BedfordMcMullenType" : "GeneralBaranski";
}

json cell_json(const Cell& c) { return json::array({c.col + 1, c.row + 1}); }

json system_json(const BaranskiSystem& system, const SystemClass& cls) {
  json j;
  j["columns"] = system.columns();
  j["rows"] = system.rows();
  j["cells"] = system.size();
  j["classification"] = to_string(cls.kind);
  if (cls.is_bm()) {
    j["m_tilde"] = cls.m_tilde;
    j["n_tilde"] = cls.n_tilde;
  }
  j["uniform_vertical_fibres"] = cls.uniform_vertical_fibres;
  j["uniform_horizontal_fibres"] = cls.uniform_horizontal_fibres;
  return j;
}

void print_system(std::ostream& out, const BaranskiSystem& system, const SystemClass& cls) {
  row(out, "grid", std::to_string(system.columns()) + " x " + std::to_string(system.rows()) + ", " +
                       std::to_string(system.size()) + " cells");
  std::string kind = to_string(cls.kind);
  if (cls.is_bm()) kind += " (" + num(cls.m_tilde) + ", " + num(cls.n_tilde) + ")";
  row(out, "classification", kind);
  row(out, "uniform fibres", std::string(cls.uniform_vertical_fibres ? "vertical " : "") +
                                 (cls.uniform_horizontal_fibres ? "horizontal" : "") +
                                 (!cls.uniform_vertical_fibres && !cls.uniform_horizontal_fibres ? "none" : ""));
}

json exponents_json(const MoranExponents& e) {
  return json{{"t_A", e.t_a}, {"t_B", e.t_b}, {"D_A", e.d_a}, {"D_B", e.d_b}};
}

GammaOptions gamma_options(const RunConfig& config) {
  GammaOptions o;
  o.k_max = config.kmax.value_or(10);
  if (config.budget) o.word_budget = *config.budget;
  o.threads = config.threads;
  o.strict_ratio = config.strict_ratio;
  return o;
}

ExpandOptions expand_options(const RunConfig& config) {
  ExpandOptions o;
  if (config.budget) o.max_rects = *config.budget;
  o.threads = config.threads;
  return o;
}

MaximizeOptions maximize_options(const RunConfig& config) {
  MaximizeOptions o;
  o.random_starts = config.starts;
  o.seed = config.seed;
  o.threads = config.threads;
  return o;
}

json gamma_json(const GammaSequence& seq) {
  json levels = json::array();
  for (const auto& l : seq.levels) {
    json e;
    e["k"] = l.k;
    e["gamma"] = l.gamma ? json(l.gamma->to_string()) : json("inf");
    if (std::isnan(l.rate)) {
      e["rate"] = nullptr;
    } else if (std::isinf(l.rate)) {
      e["rate"] = "inf";
    } else {
      e["rate"] = l.rate;
    }
    levels.push_back(e);
  }
  return json{{"levels", levels}, {"budget_exceeded", seq.budget_exceeded}};
}

json axis_json(const AxisReport& a) {
  json j;
  j["status"] = to_string(a.status);
  j["level"] = a.level;
  if (a.secc) {
    j["secc"] = to_string(a.secc->verdict);
    j["heuristic"] = a.secc->heuristic;
    j["gamma"] = gamma_json(a.secc->trace);
  }
  return j;
}

json exceptional_json(const ExceptionalReport& r, bool full) {
  json j;
  j["verdict"] = to_string(r.verdict);
  j["dim_E_constant"] = r.dim_e_constant;
  json x = axis_json(r.x_axis);
  json y = axis_json(r.y_axis);
  if (!full) {
    x.erase("gamma");
    y.erase("gamma");
  }
  j["x_axis"] = x;
  j["y_axis"] = y;
  json hits = json::array();
  for (const auto& h : r.hyperplane_hits) {
    hits.push_back(json{{"axis", std::string(1, h.axis)}, {"first", h.first + 1}, {"second", h.second + 1},
                        {"equal_ratio", h.equal_ratio}});
  }
  j["hyperplane_hits"] = hits;
  return j;
}

std::string axis_text(const AxisReport& a) {
  std::string s = to_string(a.status);
  if (a.status != AxisStatus::NotChecked) s += " (k=" + std::to_string(a.level) + ")";
  if (a.secc && a.secc->verdict != SeccVerdict::ExactOverlap) s += std::string(", ") + to_string(a.secc->verdict);
  return s;
}

struct HausdorffResult {
  double value = 0.0;
  std::string method;
  ProbabilityWeights weights;
  std::optional<MaximizeResult> search;
};

HausdorffResult hausdorff_dimension(const BaranskiSystem& system, const SystemClass& cls, const RunConfig& config,
                                    bool always_search) {
  HausdorffResult h;
  if (cls.is_bm()) {
    h.value = bm_closed_form(system).dim_h;
    h.method = "closed_form";
    h.weights = bm_optimal_weights(system);
  }
  if (!cls.is_bm() || always_search) {
    MaximizeResult m = maximize_g(system, maximize_options(config));
    if (!cls.is_bm()) {
      h.value = m.value;
      h.method = "variational";
      h.weights = m.weights;
    }
    h.search = std::move(m);
  }
  return h;
}

// Failed consistency check: prints and returns kExitInternal.
int assertion_failure(std::ostream& err, const std::string& what) {
  err << "internal assertion failed: " << what << "\n";
  return kExitInternal;
}

int cmd_dims(const RunConfig& config, const BaranskiSystem& system, std::ostream& out, std::ostream& err) {
  const SystemClass cls = classify(system);
  const MoranExponents e = box_dimension_analytic(system);
  const HausdorffResult h = hausdorff_dimension(system, cls, config, false);
  const ExceptionalReport ex = exceptional_report(system, gamma_options(config));
  const double dim_b = e.box_dimension();

  if (config.format == Format::Json) {
    json j;
    j["schema_version"] = kSchemaVersion;
    j["command"] = "dims";
    j["system"] = system_json(system, cls);
    j["dim_H"] = json{{"value", h.value}, {"method", h.method}};
    json b = exponents_json(e);
    b["value"] = dim_b;
    j["dim_B"] = b;
    j["dim_P"] = dim_b;
    j["exceptional"] = exceptional_json(ex, false);
    j["warnings"] = system.warnings();
    out << j.dump(2) << "\n";
  } else {
    print_system(out, system, cls);
    row(out, "dim_H", num(h.value) + " (" + h.method + ")");
    row(out, "dim_B = dim_P", num(dim_b));
    row(out, "t_A, t_B", num(e.t_a) + ", " + num(e.t_b));
    row(out, "D_A, D_B", num(e.d_a) + ", " + num(e.d_b));
    row(out, "exceptional set", std::string(to_string(ex.verdict)) + " (dim_E constant " +
                                    std::to_string(ex.dim_e_constant) + ")");
    row(out, "  x axis", axis_text(ex.x_axis));
    row(out, "  y axis", axis_text(ex.y_axis));
    for (const auto& w : system.warnings()) row(out, "warning", w);
  }

  if (!(h.value >= -1e-12)) return assertion_failure(err, "dim_H is negative");
  if (h.value > dim_b + 1e-6) return assertion_failure(err, "dim_H exceeds dim_B");
  if (dim_b > 2.0 + 1e-9) return assertion_failure(err, "dim_B exceeds 2");
  return kExitOk;
}

int cmd_hausdorff(const RunConfig& config, const BaranskiSystem& system, std::ostream& out) {
  const SystemClass cls = classify(system);
  const HausdorffResult h = hausdorff_dimension(system, cls, config, true);
  const GValue g = eval_g(system, h.weights);
  const auto& cells = system.cells();
  if (config.format == Format::Json) {
    json j;
    j["schema_version"] = kSchemaVersion;
    j["command"] = "hausdorff";
    j["system"] = system_json(system, cls);
    j["dim_H"] = json{{"value", h.value}, {"method", h.method}};
    json weights = json::array();
    for (std::size_t c = 0; c < cells.size(); ++c) weights.push_back(json{{"cell", cell_json(cells[c])}, {"p", h.weights.p[c]}});
    j["weights"] = weights;
    j["g_at_weights"] = g.value;
    j["region"] = to_string(g.region.region);
    if (h.search) {
      j["search"] = json{{"value", h.search->value},
                         {"converged", h.search->converged},
                         {"starts_run", h.search->starts_run},
                         {"best_start", h.search->best_start},
                         {"seed", config.seed}};
    }
    out << j.dump(2) << "\n";
  } else {
    print_system(out, system, cls);
    row(out, "dim_H", num(h.value) + " (" + h.method + ")");
    row(out, "g at weights", num(g.value) + " in " + to_string(g.region.region));
    if (h.search) {
      row(out, "search maximum", num(h.search->value) + (h.search->converged ? "" : " (not converged)") + ", best of " +
                                     std::to_string(h.search->starts_run) + " starts");
    }
    for (std::size_t c = 0; c < cells.size(); ++c) {
      row(out, "  p(" + std::to_string(cells[c].col + 1) + "," + std::to_string(cells[c].row + 1) + ")",
          num(h.weights.p[c]));
    }
  }
  return kExitOk;
}

int cmd_box(const RunConfig& config, const BaranskiSystem& system, std::ostream& out) {
  const SystemClass cls = classify(system);
  const MoranExponents e = box_dimension_analytic(system);
  const double dim_b = e.box_dimension();
  const double pressure = pressure_base(system, e, dim_b);
  if (config.format == Format::Json) {
    json j;
    j["schema_version"] = kSchemaVersion;
    j["command"] = "box";
    j["system"] = system_json(system, cls);
    json b = exponents_json(e);
    b["value"] = dim_b;
    j["dim_B"] = b;
    j["dim_P"] = dim_b;
    j["pressure_base_at_dim_B"] = pressure;
    if (cls.is_bm()) j["closed_form"] = bm_closed_form(system).dim_b;
    out << j.dump(2) << "\n";
  } else {
    print_system(out, system, cls);
    row(out, "dim_B = dim_P", num(dim_b));
    row(out, "t_A, t_B", num(e.t_a) + ", " + num(e.t_b));
    row(out, "D_A, D_B", num(e.d_a) + ", " + num(e.d_b));
    row(out, "pressure base at dim_B", num(pressure, 14));
    if (cls.is_bm()) row(out, "closed form", num(bm_closed_form(system).dim_b));
  }
  return kExitOk;
}

int cmd_diagnose(const RunConfig& config, const BaranskiSystem& system, std::ostream& out) {
  const ExceptionalReport ex = exceptional_report(system, gamma_options(config));
  if (config.format == Format::Json) {
    json j = exceptional_json(ex, true);
    j["schema_version"] = kSchemaVersion;
    j["command"] = "diagnose";
    out << j.dump(2) << "\n";
    return kExitOk;
  }
  row(out, "verdict", to_string(ex.verdict));
  row(out, "dim_E constant", std::to_string(ex.dim_e_constant));
  for (const auto* axis : {&ex.x_axis, &ex.y_axis}) {
    const char* name = axis == &ex.x_axis ? "x axis" : "y axis";
    row(out, name, axis_text(*axis));
    if (!axis->secc) continue;
    for (const auto& l : axis->secc->trace.levels) {
      std::string value = l.gamma ? l.gamma->to_string() : "inf";
      if (l.gamma && !l.gamma->is_zero()) value += "  rate " + num(l.rate);
      row(out, "  gamma_" + std::to_string(l.k), value);
    }
    if (axis->secc->trace.budget_exceeded) row(out, "  note", "word budget reached");
  }
  for (const auto& h : ex.hyperplane_hits) {
    row(out, "coincident translation", std::string(1, h.axis) + " " + std::to_string(h.first + 1) + "," +
                                           std::to_string(h.second + 1) +
                                           (h.equal_ratio ? " (equal ratios)" : ""));
  }
  return kExitOk;
}

std::vector<int> k_ladder(int kmax) {
  std::vector<int> ks;
  for (long long e = 1; e <= kmax; e *= 10) {
    for (int m : {1, 2, 5}) {
      if (m * e <= kmax) ks.push_back(static_cast<int>(m * e));
    }
  }
  if (ks.empty() || ks.back() != kmax) ks.push_back(kmax);
  return ks;
}

std::ostream& open_output(const RunConfig& config, std::ofstream& file, std::ostream& fallback) {
  if (config.output_path.empty()) return fallback;
  file.open(config.output_path, std::ios::binary | std::ios::trunc);
  if (!file) throw InputError("cannot open output file " + config.output_path);
  return file;
}

int cmd_approx(const RunConfig& config, const BaranskiSystem& system, std::ostream& out) {
  const SystemClass cls = classify(system);
  const HausdorffResult h = hausdorff_dimension(system, cls, config, false);
  const MoranExponents e = box_dimension_analytic(system);
  std::ofstream file;
  std::ostream& dest = open_output(config, file, out);
  const auto ks = k_ladder(config.kmax.value_or(100000));
  if (config.format == Format::Json) {
    json rows = json::array();
    for (int k : ks) {
      rows.push_back(json{{"k", k},
                          {"s_k_hausdorff", build_uniform_approx(system, h.weights, k).s_k_value},
                          {"s_k_box", s_k_box(system, k)}});
    }
    json j{{"schema_version", kSchemaVersion}, {"command", "approx"},   {"weights_method", h.method},
           {"dim_H", h.value},                 {"dim_B", e.box_dimension()}, {"rows", rows}};
    dest << j.dump(2) << "\n";
    return kExitOk;
  }
  dest << std::setprecision(17) << "k,s_k_hausdorff,s_k_box\n";
  for (int k : ks) {
    dest << k << ',' << build_uniform_approx(system, h.weights, k).s_k_value << ',' << s_k_box(system, k) << '\n';
  }
  return kExitOk;
}

int cmd_empirical(const RunConfig& config, const BaranskiSystem& system, std::ostream& out) {
  const BoxDimensionEstimate est =
      estimate_box_dimension(system, config.qmin, config.qmax, config.base, expand_options(config));
  const double analytic = box_dimension_analytic(system).box_dimension();
  if (config.format == Format::Json) {
    if (!config.output_path.empty()) {
      std::ofstream file;
      write_samples_csv(open_output(config, file, out), est.samples);
    }
    json samples = json::array();
    for (const auto& s : est.samples) samples.push_back(json{{"q", s.q}, {"delta", s.delta}, {"N_delta", s.n_delta}});
    json j{{"schema_version", kSchemaVersion}, {"command", "empirical"}, {"base", config.base},
           {"slope", est.slope},               {"intercept", est.intercept}, {"residuals", est.residuals},
           {"dropped_coarse", est.dropped_coarse}, {"analytic_dim_B", analytic}, {"samples", samples}};
    out << j.dump(2) << "\n";
    return kExitOk;
  }
  std::ofstream file;
  write_samples_csv(open_output(config, file, out), est.samples);
  out << "# slope " << num(est.slope) << (est.dropped_coarse ? " (two coarsest samples dropped)" : "") << "\n";
  out << "# analytic dim_B " << num(analytic) << "\n";
  return kExitOk;
}

int cmd_render(const RunConfig& config, const BaranskiSystem& system, std::ostream& out) {
  const double delta = config.delta.value_or(1.0 / config.resolution);
  const Raster raster = render_image(system, delta, config.resolution, expand_options(config));
  std::ofstream file;
  write_pgm(open_output(config, file, out), raster);
  return kExitOk;
}

}  // namespace

const char* to_string(Command c) {
  switch (c) {
    case Command::Dims: return "dims";
    case Command::Hausdorff: return "hausdorff";
    case Command::Box: return "box";
    case Command::Diagnose: return "diagnose";
    case Command::Approx: return "approx";
    case Command::Empirical: return "empirical";
    case Command::Render: return "render";
  }
  return "unknown";
}

std::optional<RunConfig> parse_config(const std::vector<std::string>& args, std::ostream& out) {
  static const std::map<std::string, Command> commands{
      {"dims", Command::Dims},         {"hausdorff", Command::Hausdorff}, {"box", Command::Box},
      {"diagnose", Command::Diagnose}, {"approx", Command::Approx},       {"empirical", Command::Empirical},
      {"render", Command::Render}};

  RunConfig cfg;
  CLI::App app{"Dimensions of Baranski and Bedford-McMullen carpets", "carpetdim"};
  std::string command;
  std::string format = "text";
  int kmax = 0;
  double delta = 0.0;
  std::uint64_t budget = 0;
  app.add_option("command", command, "dims | hausdorff | box | diagnose | approx | empirical | render")
      ->required()
      ->check(CLI::IsMember(commands));
  app.add_option("-i,--input", cfg.input_path, "system definition (JSON)")->required();
  app.add_option("-o,--output", cfg.output_path, "output file (stdout if omitted)");
  app.add_option("--format", format, "text or json")->check(CLI::IsMember({"text", "json"}));
  app.add_option("--seed", cfg.seed, "seed for randomized search starts");
  app.add_option("--threads", cfg.threads, "worker threads")->check(CLI::Range(1, 1024));
  auto* kmax_opt = app.add_option("--kmax", kmax, "overlap depth (diagnose, dims) or largest k (approx)")
                       ->check(CLI::Range(1, 100'000'000));
  app.add_option("--qmin", cfg.qmin, "smallest exponent q, delta = base^-q")->check(CLI::Range(0, 60));
  app.add_option("--qmax", cfg.qmax, "largest exponent q")->check(CLI::Range(0, 60));
  app.add_option("--base", cfg.base, "scale ladder base")->check(CLI::PositiveNumber);
  app.add_option("--resolution", cfg.resolution, "raster side in pixels")->check(CLI::Range(1, 65536));
  auto* delta_opt = app.add_option("--delta", delta, "render expansion scale (default 1/resolution)");
  auto* budget_opt = app.add_option("--budget", budget, "cap on enumerated words or rectangles")
                         ->check(CLI::PositiveNumber);
  app.add_flag("--strict-ratio", cfg.strict_ratio, "overlap gaps only between words with equal ratio products");
  app.add_option("--starts", cfg.starts, "random starts for the variational search")->check(CLI::Range(0, 100000));

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  if (!reversed.empty()) reversed.pop_back();  // program name
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return std::nullopt;
  } catch (const CLI::ParseError& e) {
    throw UsageError(e.what());
  }

  cfg.command = commands.at(command);
  cfg.format = format == "json" ? Format::Json : Format::Text;
  if (kmax_opt->count()) cfg.kmax = kmax;
  if (budget_opt->count()) cfg.budget = budget;
  if (delta_opt->count()) {
    if (!(delta > 0.0 && delta <= 1.0)) throw UsageError("--delta must lie in (0, 1]");
    cfg.delta = delta;
  }
  if (!(cfg.base > 1.0)) throw UsageError("--base must exceed 1");
  if (cfg.qmin >= cfg.qmax) throw UsageError("--qmin must be smaller than --qmax");
  if (cfg.command == Command::Render && cfg.output_path.empty()) throw UsageError("render requires --output");
  return cfg;
}

BaranskiSystem load_system(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot read " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) throw InputError("cannot read " + path);
  try {
    return parse_system(buf.str());
  } catch (const nlohmann::json::parse_error& e) {
    throw InputError(path + " is not valid JSON: " + e.what());
  }
}

int execute(const RunConfig& config, const BaranskiSystem& system, std::ostream& out, std::ostream& err) {
  log(err, LogLevel::Info, std::string("running ") + to_string(config.command) + " on " + config.input_path);
  switch (config.command) {
    case Command::Dims: return cmd_dims(config, system, out, err);
    case Command::Hausdorff: return cmd_hausdorff(config, system, out);
    case Command::Box: return cmd_box(config, system, out);
    case Command::Diagnose: return cmd_diagnose(config, system, out);
    case Command::Approx: return cmd_approx(config, system, out);
    case Command::Empirical: return cmd_empirical(config, system, out);
    case Command::Render: return cmd_render(config, system, out);
  }
  return kExitInternal;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  std::optional<RunConfig> config;
  try {
    config = parse_config(args, out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kExitValidation;
  }
  if (!config) return kExitOk;

  std::optional<BaranskiSystem> system;
  try {
    system = load_system(config->input_path);
  } catch (const InputError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUnreadable;
  } catch (const SystemFileError& e) {
    err << "error: field `" << e.field() << "`: " << e.what() << "\n";
    return kExitValidation;
  } catch (const ValidationError& e) {
    err << "error: invalid system\n";
    for (const auto& issue : e.issues()) {
      err << "  " << carpetdim::to_string(issue.kind) << " in `" << issue.field << "`: " << issue.message << "\n";
    }
    return kExitValidation;
  }
  for (const auto& w : system->warnings()) log(err, LogLevel::Warn, w);

  try {
    return execute(*config, *system, out, err);
  } catch (const InputError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUnreadable;
  } catch (const CarpetError& e) {
    err << "error: " << e.what() << "\n";
    switch (e.code()) {
      case ErrorCode::BudgetExceeded: return kExitBudget;
      case ErrorCode::InternalInequalityViolation: return kExitInternal;
      case ErrorCode::InvalidArgument:
      case ErrorCode::NotBMType:
      case ErrorCode::NonRationalInput:
      case ErrorCode::NonHomogeneous: return kExitValidation;
      default: return kExitInternal;
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitInternal;
  }
}

}  // namespace carpetdim::cli
