#include "carpetdim/overlap.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <thread>

#include "carpetdim/error.hpp"

namespace carpetdim {
namespace {

struct Map1D {
  Rational ratio;
  Rational offset;
};

bool by_offset(const Map1D& a, const Map1D& b) {
  if (a.offset != b.offset) return a.offset < b.offset;
  return a.ratio < b.ratio;
}

bool by_ratio_then_offset(const Map1D& a, const Map1D& b) {
  if (a.ratio != b.ratio) return a.ratio < b.ratio;
  return a.offset < b.offset;
}

// Minimum gap over a sorted level; nullopt if no comparable pair exists.
std::optional<Rational> min_gap(const std::vector<Map1D>& sorted, bool strict_ratio) {
  std::optional<Rational> best;
  for (std::size_t k = 1; k < sorted.size(); ++k) {
    if (strict_ratio && sorted[k].ratio != sorted[k - 1].ratio) continue;
    Rational gap = sorted[k].offset - sorted[k - 1].offset;
    if (!best || gap < *best) best = gap;
    if (best->is_zero()) break;
  }
  return best;
}

double rate_of(const std::optional<Rational>& gamma, int k) {
  if (!gamma) return std::numeric_limits<double>::quiet_NaN();
  if (gamma->is_zero()) return std::numeric_limits<double>::infinity();
  const double log_gamma =
      std::log(static_cast<double>(gamma->num())) - std::log(static_cast<double>(gamma->den()));
  return -log_gamma / static_cast<double>(k);
}

std::optional<ExactIfs1D> axis_projection(const std::vector<Param>& ratios,
                                          const std::map<int, Param>& translations,
                                          const std::vector<int>& occupied) {
  ExactIfs1D ifs;
  for (int index : occupied) {
    const Param& r = ratios[static_cast<std::size_t>(index)];
    const Param& t = translations.at(index);
    if (!r.is_exact() || !t.is_exact()) return std::nullopt;
    ifs.ratios.push_back(*r.exact);
    ifs.offsets.push_back(*t.exact);
  }
  return ifs;
}

bool same_param(const Param& a, const Param& b) {
  if (a.is_exact() && b.is_exact()) return *a.exact == *b.exact;
  return std::abs(a.value - b.value) <= kSumTolerance;
}

void find_hits(char axis, const std::vector<Param>& ratios, const std::map<int, Param>& translations,
               const std::vector<int>& occupied, std::vector<HyperplaneHit>& hits) {
  for (std::size_t u = 0; u < occupied.size(); ++u) {
    for (std::size_t v = u + 1; v < occupied.size(); ++v) {
      const int a = occupied[u];
      const int b = occupied[v];
      if (!same_param(translations.at(a), translations.at(b))) continue;
      hits.push_back({axis, a, b,
                      same_param(ratios[static_cast<std::size_t>(a)], ratios[static_cast<std::size_t>(b)])});
    }
  }
}

AxisReport axis_report(const std::optional<ExactIfs1D>& ifs, const GammaOptions& options) {
  AxisReport report;
  if (!ifs) return report;
  report.secc = secc_diagnostic(*ifs, options);
  if (report.secc->verdict == SeccVerdict::ExactOverlap) {
    report.status = AxisStatus::ExactOverlapAt;
    report.level = report.secc->overlap_level;
  } else {
    report.status = AxisStatus::NoOverlapToDepth;
    report.level = static_cast<int>(report.secc->trace.levels.size());
  }
  return report;
}

}  // namespace

const char* to_string(SeccVerdict v) {
  switch (v) {
    case SeccVerdict::ExactOverlap: return "ExactOverlap";
    case SeccVerdict::BoundedRate: return "BoundedRate";
    case SeccVerdict::Inconclusive: return "Inconclusive";
  }
  return "Unknown";
}

const char* to_string(AxisStatus s) {
  switch (s) {
    case AxisStatus::ExactOverlapAt: return "exact_overlap_at_k";
    case AxisStatus::NoOverlapToDepth: return "no_overlap_to_depth";
    case AxisStatus::NotChecked: return "not_checked";
  }
  return "unknown";
}

const char* to_string(ExceptionalVerdict v) {
  switch (v) {
    case ExceptionalVerdict::LikelyOutsideE: return "likely_outside_E";
    case ExceptionalVerdict::InsideECandidate: return "inside_E_candidate";
    case ExceptionalVerdict::Inconclusive: return "inconclusive";
  }
  return "unknown";
}

AffineWord1D compose_word(const ExactIfs1D& ifs, std::span<const int> word) {
  AffineWord1D out;
  out.word.assign(word.begin(), word.end());
  // offset = sum_j (prod_{l<j} r_{w_l}) t_{w_j}
  Rational prefix(1);
  for (int letter : word) {
    if (letter < 0 || static_cast<std::size_t>(letter) >= ifs.size()) {
      throw CarpetError(ErrorCode::InvalidArgument, "letter index out of range");
    }
    const auto idx = static_cast<std::size_t>(letter);
    out.offset += prefix * ifs.offsets[idx];
    prefix *= ifs.ratios[idx];
  }
  out.ratio = prefix;
  return out;
}

AffineWord1D compose(const AffineWord1D& u, const AffineWord1D& v) {
  AffineWord1D out;
  out.word = u.word;
  out.word.insert(out.word.end(), v.word.begin(), v.word.end());
  out.ratio = u.ratio * v.ratio;
  out.offset = u.offset + u.ratio * v.offset;
  return out;
}

std::optional<ExactIfs1D> x_projection(const BaranskiSystem& system) {
  return axis_projection(system.width_params(), system.column_translations(),
                         project(system).occupied_columns);
}

std::optional<ExactIfs1D> y_projection(const BaranskiSystem& system) {
  return axis_projection(system.height_params(), system.row_translations(), project(system).occupied_rows);
}

GammaSequence gamma_sequence(const ExactIfs1D& ifs, const GammaOptions& options) {
  if (ifs.ratios.size() != ifs.offsets.size()) {
    throw CarpetError(ErrorCode::InvalidArgument, "ratio/offset length mismatch");
  }
  const std::size_t letters = ifs.size();
  GammaSequence out;
  if (letters == 0) return out;

  std::vector<Map1D> level{Map1D{Rational(1), Rational(0)}};  // empty word
  std::uint64_t total = 0;
  for (int k = 1; k <= options.k_max; ++k) {
    const std::uint64_t next_size = static_cast<std::uint64_t>(level.size()) * letters;
    if (total + next_size > options.word_budget) {
      out.budget_exceeded = true;
      break;
    }
    total += next_size;

    // Partition by first letter: S_i o S_w(0) = t_i + r_i * S_w(0).
    std::vector<std::vector<Map1D>> parts(letters);
    auto build = [&](std::size_t i) {
      auto& part = parts[i];
      part.reserve(level.size());
      for (const auto& m : level) part.push_back({ifs.ratios[i] * m.ratio, ifs.offsets[i] + ifs.ratios[i] * m.offset});
      std::sort(part.begin(), part.end(), options.strict_ratio ? by_ratio_then_offset : by_offset);
    };
    const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(std::max(options.threads, 1)), letters);
    if (workers <= 1) {
      for (std::size_t i = 0; i < letters; ++i) build(i);
    } else {
      std::vector<std::thread> pool;
      for (std::size_t t = 0; t < workers; ++t) {
        pool.emplace_back([&, t] {
          for (std::size_t i = t; i < letters; i += workers) build(i);
        });
      }
      for (auto& th : pool) th.join();
    }

    std::vector<Map1D> merged;
    merged.reserve(next_size);
    for (auto& part : parts) {
      const auto mid = static_cast<std::ptrdiff_t>(merged.size());
      merged.insert(merged.end(), part.begin(), part.end());
      std::inplace_merge(merged.begin(), merged.begin() + mid, merged.end(),
                         options.strict_ratio ? by_ratio_then_offset : by_offset);
      part.clear();
      part.shrink_to_fit();
    }

    GammaLevel entry;
    entry.k = k;
    entry.gamma = min_gap(merged, options.strict_ratio);
    entry.rate = rate_of(entry.gamma, k);
    out.levels.push_back(entry);
    level = std::move(merged);
  }
  return out;
}

SeccResult secc_diagnostic(const ExactIfs1D& ifs, const GammaOptions& options) {
  SeccResult result;
  result.trace = gamma_sequence(ifs, options);
  for (const auto& level : result.trace.levels) {
    if (level.gamma && level.gamma->is_zero()) {
      result.verdict = SeccVerdict::ExactOverlap;
      result.overlap_level = level.k;
      result.heuristic = false;
      return result;
    }
  }
  std::vector<double> rates;
  for (const auto& level : result.trace.levels) {
    if (level.gamma) rates.push_back(level.rate);
  }
  if (rates.empty()) {
    // No distinct pairs at any level (single map): vacuously bounded.
    result.verdict = SeccVerdict::BoundedRate;
    return result;
  }
  const std::size_t start = rates.size() / 2;
  bool non_increasing = true;
  for (std::size_t k = std::max<std::size_t>(start, 1); k < rates.size(); ++k) {
    if (rates[k] > rates[k - 1] + 1e-12 * std::max(1.0, std::abs(rates[k - 1]))) non_increasing = false;
  }
  result.verdict = non_increasing ? SeccVerdict::BoundedRate : SeccVerdict::Inconclusive;
  return result;
}

ExceptionalReport exceptional_report(const BaranskiSystem& system, const GammaOptions& options) {
  const PatternProjections proj = project(system);
  ExceptionalReport report;
  report.dim_e_constant = static_cast<int>(proj.occupied_columns.size() + proj.occupied_rows.size()) - 1;
  report.x_axis = axis_report(x_projection(system), options);
  report.y_axis = axis_report(y_projection(system), options);
  find_hits('x', system.width_params(), system.column_translations(), proj.occupied_columns,
            report.hyperplane_hits);
  find_hits('y', system.height_params(), system.row_translations(), proj.occupied_rows,
            report.hyperplane_hits);

  const bool overlap = report.x_axis.status == AxisStatus::ExactOverlapAt ||
                       report.y_axis.status == AxisStatus::ExactOverlapAt;
  const bool equal_ratio_hit = std::any_of(report.hyperplane_hits.begin(), report.hyperplane_hits.end(),
                                           [](const HyperplaneHit& h) { return h.equal_ratio; });
  auto bounded = [](const AxisReport& a) {
    return a.status == AxisStatus::NoOverlapToDepth && a.secc && a.secc->verdict == SeccVerdict::BoundedRate;
  };
  if (overlap || equal_ratio_hit) {
    report.verdict = ExceptionalVerdict::InsideECandidate;
  } else if (bounded(report.x_axis) && bounded(report.y_axis)) {
    report.verdict = ExceptionalVerdict::LikelyOutsideE;
  } else {
    report.verdict = ExceptionalVerdict::Inconclusive;
  }
  return report;
}

}  // namespace carpetdim
