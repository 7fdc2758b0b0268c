#include "carpetdim/system.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace carpetdim {
namespace {

std::string join_issues(const std::vector<ValidationIssue>& issues) {
  std::ostringstream os;
  for (std::size_t k = 0; k < issues.size(); ++k) {
    if (k) os << "; ";
    os << to_string(issues[k].kind) << " [" << issues[k].field << "]: " << issues[k].message;
  }
  return os.str();
}

bool all_exact(const std::vector<Param>& params) {
  return std::all_of(params.begin(), params.end(), [](const Param& p) { return p.is_exact(); });
}

// Sum == 1, exactly when every term is exact.
bool sums_to_one(const std::vector<Param>& params, double& real_sum) {
  real_sum = 0.0;
  for (const auto& p : params) real_sum += p.value;
  if (all_exact(params)) {
    Rational s;
    for (const auto& p : params) s += *p.exact;
    return s == Rational(1);
  }
  return std::abs(real_sum - 1.0) <= kSumTolerance;
}

std::optional<Param> max_param(const std::vector<Param>& params) {
  if (params.empty()) return std::nullopt;
  if (all_exact(params)) {
    Rational best = *params.front().exact;
    for (const auto& p : params) best = std::max(best, *p.exact);
    return Param::rational(best);
  }
  double best = params.front().value;
  for (const auto& p : params) best = std::max(best, p.value);
  return Param::real(best);
}

// 0 <= t <= 1 - max_ratio.
bool translation_in_range(const Param& t, const Param& max_ratio) {
  if (t.is_exact() && max_ratio.is_exact()) {
    return *t.exact >= Rational(0) && *t.exact <= Rational(1) - *max_ratio.exact;
  }
  return t.value >= -kSumTolerance && t.value <= 1.0 - max_ratio.value + kSumTolerance;
}

void check_ratios(const std::vector<Param>& params, const char* field,
                  std::vector<ValidationIssue>& issues) {
  if (params.empty()) {
    issues.push_back({IssueKind::SumNotOne, field, "no entries (sum is 0, expected 1)"});
    return;
  }
  for (std::size_t k = 0; k < params.size(); ++k) {
    const double v = params[k].value;
    bool ok = v > 0.0 && v < 1.0;
    if (params[k].is_exact()) ok = *params[k].exact > Rational(0) && *params[k].exact < Rational(1);
    if (!ok) {
      std::ostringstream os;
      os << "entry " << k + 1 << " = " << v << " is not in (0,1)";
      issues.push_back({IssueKind::RatioOutOfRange, field, os.str()});
    }
  }
  double sum = 0.0;
  if (!sums_to_one(params, sum)) {
    std::ostringstream os;
    os.precision(17);
    os << "entries sum to " << sum << ", expected 1";
    issues.push_back({IssueKind::SumNotOne, field, os.str()});
  }
}

void check_translations(const std::map<int, Param>& translations, const std::vector<int>& occupied,
                        std::size_t bound, const std::optional<Param>& max_ratio, const char* field,
                        std::vector<ValidationIssue>& issues) {
  for (const auto& [index, value] : translations) {
    if (index < 0 || static_cast<std::size_t>(index) >= bound) {
      std::ostringstream os;
      os << "index " << index + 1 << " outside 1.." << bound;
      issues.push_back({IssueKind::IndexOutOfBounds, field, os.str()});
      continue;
    }
    if (max_ratio && !translation_in_range(value, *max_ratio)) {
      std::ostringstream os;
      os << "translation " << value.value << " at index " << index + 1 << " outside [0, "
         << 1.0 - max_ratio->value << "]";
      issues.push_back({IssueKind::TranslationOutOfRange, field, os.str()});
    }
  }
  for (int index : occupied) {
    if (!translations.count(index)) {
      std::ostringstream os;
      os << "no translation for occupied index " << index + 1;
      issues.push_back({IssueKind::MissingTranslation, field, os.str()});
    }
  }
}

}  // namespace

const char* to_string(IssueKind kind) {
  switch (kind) {
    case IssueKind::SumNotOne: return "SumNotOne";
    case IssueKind::TranslationOutOfRange: return "TranslationOutOfRange";
    case IssueKind::EmptyPattern: return "EmptyPattern";
    case IssueKind::IndexOutOfBounds: return "IndexOutOfBounds";
    case IssueKind::RatioOutOfRange: return "RatioOutOfRange";
    case IssueKind::MissingTranslation: return "MissingTranslation";
  }
  return "Unknown";
}

ValidationError::ValidationError(std::vector<ValidationIssue> issues)
    : CarpetError(ErrorCode::InvalidSystem, join_issues(issues)), issues_(std::move(issues)) {}

std::optional<std::size_t> BaranskiSystem::index_of(Cell c) const {
  auto it = std::lower_bound(cells_.begin(), cells_.end(), c);
  if (it == cells_.end() || *it != c) return std::nullopt;
  return static_cast<std::size_t>(it - cells_.begin());
}

SystemSpec BaranskiSystem::to_spec() const {
  return SystemSpec{widths_, heights_, cells_, column_translations_, row_translations_};
}

BaranskiSystem validate(const SystemSpec& spec) {
  std::vector<ValidationIssue> issues;
  check_ratios(spec.column_widths, "column_widths", issues);
  check_ratios(spec.row_heights, "row_heights", issues);

  std::vector<Cell> cells = spec.pattern;
  std::sort(cells.begin(), cells.end());
  cells.erase(std::unique(cells.begin(), cells.end()), cells.end());
  if (cells.empty()) issues.push_back({IssueKind::EmptyPattern, "pattern", "pattern has no cells"});

  std::vector<int> occupied_cols;
  std::vector<int> occupied_rows;
  for (const auto& c : cells) {
    const bool col_ok = c.col >= 0 && static_cast<std::size_t>(c.col) < spec.column_widths.size();
    const bool row_ok = c.row >= 0 && static_cast<std::size_t>(c.row) < spec.row_heights.size();
    if (!col_ok || !row_ok) {
      std::ostringstream os;
      os << "cell (" << c.col + 1 << "," << c.row + 1 << ") outside the " << spec.column_widths.size()
         << "x" << spec.row_heights.size() << " grid";
      issues.push_back({IssueKind::IndexOutOfBounds, "pattern", os.str()});
      continue;
    }
    occupied_cols.push_back(c.col);
    occupied_rows.push_back(c.row);
  }
  for (auto* v : {&occupied_cols, &occupied_rows}) {
    std::sort(v->begin(), v->end());
    v->erase(std::unique(v->begin(), v->end()), v->end());
  }

  check_translations(spec.column_translations, occupied_cols, spec.column_widths.size(),
                     max_param(spec.column_widths), "column_translations", issues);
  check_translations(spec.row_translations, occupied_rows, spec.row_heights.size(),
                     max_param(spec.row_heights), "row_translations", issues);

  if (!issues.empty()) throw ValidationError(std::move(issues));

  BaranskiSystem system;
  system.widths_ = spec.column_widths;
  system.heights_ = spec.row_heights;
  system.cells_ = std::move(cells);
  system.column_translations_ = spec.column_translations;
  system.row_translations_ = spec.row_translations;
  if (system.cells_.size() == system.widths_.size() * system.heights_.size()) {
    system.warnings_.push_back("pattern is the full grid D_0; the attractor is the unit square");
  }
  return system;
}

PatternProjections project(const BaranskiSystem& system) {
  PatternProjections proj;
  proj.column_cells.resize(system.columns());
  proj.row_cells.resize(system.rows());
  for (const auto& c : system.cells()) {
    proj.column_cells[static_cast<std::size_t>(c.col)].push_back(c);
    proj.row_cells[static_cast<std::size_t>(c.row)].push_back(c);
  }
  for (std::size_t i = 0; i < proj.column_cells.size(); ++i) {
    if (!proj.column_cells[i].empty()) proj.occupied_columns.push_back(static_cast<int>(i));
  }
  for (std::size_t j = 0; j < proj.row_cells.size(); ++j) {
    if (!proj.row_cells[j].empty()) proj.occupied_rows.push_back(static_cast<int>(j));
  }
  return proj;
}

namespace {

// Common value over the selected parameters, or nullopt if they differ.
std::optional<double> common_value(const std::vector<Param>& params, const std::vector<int>& indices) {
  const Param& first = params[static_cast<std::size_t>(indices.front())];
  for (int k : indices) {
    const Param& p = params[static_cast<std::size_t>(k)];
    if (p.is_exact() && first.is_exact()) {
      if (*p.exact != *first.exact) return std::nullopt;
    } else if (std::abs(p.value - first.value) > kSumTolerance) {
      return std::nullopt;
    }
  }
  return first.value;
}

template <typename Fibres>
bool uniform(const Fibres& fibres) {
  std::size_t size = 0;
  for (const auto& f : fibres) {
    if (f.empty()) continue;
    if (size == 0) size = f.size();
    if (f.size() != size) return false;
  }
  return true;
}

}  // namespace

SystemClass classify(const BaranskiSystem& system) {
  const PatternProjections proj = project(system);
  SystemClass cls;
  cls.uniform_vertical_fibres = uniform(proj.column_cells);
  cls.uniform_horizontal_fibres = uniform(proj.row_cells);

  auto width = common_value(system.width_params(), proj.occupied_columns);
  auto height = common_value(system.height_params(), proj.occupied_rows);
  if (width && height) {
    const double m = 1.0 / *width;
    const double n = 1.0 / *height;
    if (n > m && m > 1.0) {
      cls.kind = SystemKind::BedfordMcMullenType;
      cls.m_tilde = m;
      cls.n_tilde = n;
    }
  }
  return cls;
}

}  // namespace carpetdim
