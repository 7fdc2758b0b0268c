#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "carpetdim/error.hpp"
#include "carpetdim/rational.hpp"

namespace carpetdim {

// A real parameter that may also carry its exact rational value. Overlap
// diagnostics only run on axes whose parameters are all exact.
struct Param {
  double value = 0.0;
  std::optional<Rational> exact;

  static Param real(double v) { return Param{v, std::nullopt}; }
  static Param rational(const Rational& r) { return Param{r.to_double(), r}; }

  bool is_exact() const { return exact.has_value(); }
  friend bool operator==(const Param&, const Param&) = default;
};

// Grid cell, 0-based column and row. File formats use 1-based indices.
struct Cell {
  int col = 0;
  int row = 0;

  friend bool operator==(const Cell&, const Cell&) = default;
  friend auto operator<=>(const Cell&, const Cell&) = default;
};

// Unvalidated description as read from a file or built in code.
struct SystemSpec {
  std::vector<Param> column_widths;
  std::vector<Param> row_heights;
  std::vector<Cell> pattern;
  std::map<int, Param> column_translations;  // keyed by 0-based column
  std::map<int, Param> row_translations;     // keyed by 0-based row
};

enum class IssueKind {
  SumNotOne,
  TranslationOutOfRange,
  EmptyPattern,
  IndexOutOfBounds,
  RatioOutOfRange,
  MissingTranslation,
};

const char* to_string(IssueKind kind);

struct ValidationIssue {
  IssueKind kind;
  std::string field;
  std::string message;
};

class ValidationError : public CarpetError {
 public:
  explicit ValidationError(std::vector<ValidationIssue> issues);
  const std::vector<ValidationIssue>& issues() const { return issues_; }

 private:
  std::vector<ValidationIssue> issues_;
};

inline constexpr double kSumTolerance = 1e-12;

// Validated carpet system. Immutable; cells are sorted and unique.
class BaranskiSystem {
 public:
  std::size_t columns() const { return widths_.size(); }
  std::size_t rows() const { return heights_.size(); }
  std::size_t size() const { return cells_.size(); }

  const std::vector<Param>& width_params() const { return widths_; }
  const std::vector<Param>& height_params() const { return heights_; }
  const std::vector<Cell>& cells() const { return cells_; }

  double width(int col) const { return widths_[static_cast<std::size_t>(col)].value; }
  double height(int row) const { return heights_[static_cast<std::size_t>(row)].value; }

  // Translation of an occupied column/row (or any one supplied in the spec).
  const Param& column_translation(int col) const { return column_translations_.at(col); }
  const Param& row_translation(int row) const { return row_translations_.at(row); }
  const std::map<int, Param>& column_translations() const { return column_translations_; }
  const std::map<int, Param>& row_translations() const { return row_translations_; }

  const std::vector<std::string>& warnings() const { return warnings_; }

  std::optional<std::size_t> index_of(Cell c) const;

  SystemSpec to_spec() const;

  friend BaranskiSystem validate(const SystemSpec& spec);

 private:
  std::vector<Param> widths_;
  std::vector<Param> heights_;
  std::vector<Cell> cells_;
  std::map<int, Param> column_translations_;
  std::map<int, Param> row_translations_;
  std::vector<std::string> warnings_;
};

// Throws ValidationError listing every violated invariant.
BaranskiSystem validate(const SystemSpec& spec);

struct PatternProjections {
  std::vector<int> occupied_columns;             // D_X, ascending
  std::vector<int> occupied_rows;                // D_Y, ascending
  std::vector<std::vector<Cell>> column_cells;   // I_i, indexed by column
  std::vector<std::vector<Cell>> row_cells;      // J_j, indexed by row

  std::size_t column_count(int col) const { return column_cells[static_cast<std::size_t>(col)].size(); }
  std::size_t row_count(int row) const { return row_cells[static_cast<std::size_t>(row)].size(); }
};

PatternProjections project(const BaranskiSystem& system);

enum class SystemKind { GeneralBaranski, BedfordMcMullenType };

struct SystemClass {
  SystemKind kind = SystemKind::GeneralBaranski;
  double m_tilde = 0.0;  // 1 / common occupied width (BM type only)
  double n_tilde = 0.0;  // 1 / common occupied height (BM type only)
  bool uniform_vertical_fibres = false;
  bool uniform_horizontal_fibres = false;

  bool is_bm() const { return kind == SystemKind::BedfordMcMullenType; }
};

SystemClass classify(const BaranskiSystem& system);

}  // namespace carpetdim
