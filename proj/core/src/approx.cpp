#include "carpetdim/approx.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <sstream>

#include "carpetdim/error.hpp"
#include "carpetdim/moran.hpp"

namespace carpetdim {
namespace {

std::uint64_t ceil_count(double x) {
  // Snap values that are an integer up to rounding noise, e.g. 3 * (1/3).
  const double r = std::round(x);
  if (std::abs(x - r) <= 1e-9 * std::max(1.0, x)) return static_cast<std::uint64_t>(r);
  return static_cast<std::uint64_t>(std::ceil(x));
}

void check_weights(const BaranskiSystem& system, const ProbabilityWeights& p) {
  if (p.p.size() != system.size()) throw CarpetError(ErrorCode::NotOnSimplex, "weight vector length mismatch");
  double sum = 0.0;
  for (double v : p.p) {
    if (!(v >= 0.0)) throw CarpetError(ErrorCode::NotOnSimplex, "negative or NaN weight");
    sum += v;
  }
  if (std::abs(sum - 1.0) > kSimplexTolerance) throw CarpetError(ErrorCode::NotOnSimplex, "weights do not sum to 1");
}

bool checked_pow(std::uint64_t base, int exp, std::uint64_t& out) {
  out = 1;
  for (int i = 0; i < exp; ++i) {
    if (__builtin_mul_overflow(out, base, &out)) return false;
  }
  return true;
}

}  // namespace

double log_factorial(std::uint64_t n) {
  long double sum = 0.0L;
  for (std::uint64_t i = 2; i <= n; ++i) sum += std::log(static_cast<long double>(i));
  return static_cast<double>(sum);
}

StirlingBounds stirling_bounds(std::uint64_t n) {
  if (n == 0) return {0.0, 0.0};
  const double x = static_cast<double>(n);
  const double base = x * std::log(x) - x;
  return {base, base + std::log(x) + 1.0};
}

double log_multinomial(std::span<const std::uint64_t> parts) {
  std::uint64_t total = 0;
  double denom = 0.0;
  for (auto c : parts) {
    total += c;
    denom += log_factorial(c);
  }
  return log_factorial(total) - denom;
}

std::vector<std::vector<int>> multiset_permutations(std::span<const std::uint64_t> counts,
                                                    std::uint64_t max_strings) {
  std::vector<int> letters;
  for (std::size_t i = 0; i < counts.size(); ++i) letters.insert(letters.end(), counts[i], static_cast<int>(i));
  std::vector<std::vector<int>> out;
  do {
    if (out.size() >= max_strings) throw CarpetError(ErrorCode::BudgetExceeded, "too many arrangements");
    out.push_back(letters);
  } while (std::next_permutation(letters.begin(), letters.end()));
  return out;
}

UniformApproximation build_uniform_approx(const BaranskiSystem& system, const ProbabilityWeights& p, int k) {
  if (k < 1) throw CarpetError(ErrorCode::InvalidArgument, "k must be at least 1");
  check_weights(system, p);
  UniformApproximation out;
  out.k = k;
  out.column_totals.assign(system.columns(), 0);
  out.row_totals.assign(system.rows(), 0);
  const auto& cells = system.cells();
  for (std::size_t c = 0; c < cells.size(); ++c) {
    const std::uint64_t count = ceil_count(static_cast<double>(k) * p.p[c]);
    out.counts.push_back(count);
    out.theta += count;
    out.column_totals[static_cast<std::size_t>(cells[c].col)] += count;
    out.row_totals[static_cast<std::size_t>(cells[c].row)] += count;
    out.log_m += static_cast<double>(count) * -std::log(system.width(cells[c].col));
    out.log_n += static_cast<double>(count) * -std::log(system.height(cells[c].row));
  }
  out.log_card_gamma = log_multinomial(out.counts);
  out.log_card_gamma_x = log_multinomial(out.column_totals);
  out.log_card_gamma_y = log_multinomial(out.row_totals);
  out.s_k_value = s_k_hausdorff(out);
  return out;
}

double s_k_hausdorff(const UniformApproximation& a) {
  if (!(a.log_m > 0.0) || !(a.log_n > 0.0)) throw CarpetError(ErrorCode::DegenerateLogs, "log m_k or log n_k is not positive");
  if (a.log_m <= a.log_n) {
    return a.log_card_gamma_x / a.log_m + (a.log_card_gamma - a.log_card_gamma_x) / a.log_n;
  }
  return a.log_card_gamma_y / a.log_n + (a.log_card_gamma - a.log_card_gamma_y) / a.log_m;
}

ProbabilityWeights box_weights(const BaranskiSystem& system) {
  const MoranExponents e = box_dimension_analytic(system);
  const bool row_first = e.d_b > e.d_a;
  ProbabilityWeights w;
  double sum = 0.0;
  for (const Cell& c : system.cells()) {
    const double la = std::log(system.width(c.col));
    const double lb = std::log(system.height(c.row));
    const double v = row_first ? std::exp(e.t_b * lb + (e.d_b - e.t_b) * la)
                               : std::exp(e.t_a * la + (e.d_a - e.t_a) * lb);
    w.p.push_back(v);
    sum += v;
  }
  for (double& v : w.p) v /= sum;
  return w;
}

double s_k_box(const BaranskiSystem& system, int k) {
  const MoranExponents e = box_dimension_analytic(system);
  const UniformApproximation a = build_uniform_approx(system, box_weights(system), k);
  if (!(a.log_m > 0.0) || !(a.log_n > 0.0)) throw CarpetError(ErrorCode::DegenerateLogs, "log m_k or log n_k is not positive");
  if (e.d_b > e.d_a) return e.t_b + (a.log_card_gamma - e.t_b * a.log_n) / a.log_m;
  return e.t_a + (a.log_card_gamma - e.t_a * a.log_m) / a.log_n;
}

SscSelection extract_ssc_subsystem(const ExactIfs1D& ifs, int ell, const SscOptions& options) {
  if (ell < 1) throw CarpetError(ErrorCode::InvalidArgument, "word length must be at least 1");
  if (ifs.size() == 0) throw CarpetError(ErrorCode::EmptyInput, "empty system");
  const Rational ratio = ifs.ratios.front();
  for (const auto& r : ifs.ratios) {
    if (r != ratio) throw CarpetError(ErrorCode::NonHomogeneous, "contraction ratios differ");
  }
  std::uint64_t total = 0;
  if (!checked_pow(ifs.size(), ell, total) || total > options.max_words) {
    throw CarpetError(ErrorCode::BudgetExceeded, "too many words to enumerate");
  }

  struct Candidate {
    Rational left;
    Rational right;
    std::vector<int> word;
  };
  // Level-l maps built letter by letter from the left: S_w o S_i.
  std::vector<AffineWord1D> level{AffineWord1D{}};
  for (int depth = 0; depth < ell; ++depth) {
    std::vector<AffineWord1D> next;
    next.reserve(level.size() * ifs.size());
    for (const auto& w : level) {
      for (std::size_t i = 0; i < ifs.size(); ++i) {
        AffineWord1D letter{{static_cast<int>(i)}, ifs.ratios[i], ifs.offsets[i]};
        next.push_back(compose(w, letter));
      }
    }
    level = std::move(next);
  }
  std::vector<Candidate> cands;
  cands.reserve(level.size());
  for (auto& w : level) cands.push_back({w.offset, w.offset + w.ratio, std::move(w.word)});
  std::sort(cands.begin(), cands.end(), [](const Candidate& a, const Candidate& b) {
    if (a.left != b.left) return a.left < b.left;
    return a.word < b.word;
  });

  SscSelection sel;
  sel.candidates = cands.size();
  for (auto& c : cands) {
    if (!sel.intervals.empty() && !(c.left > sel.intervals.back().second)) continue;
    sel.intervals.emplace_back(c.left, c.right);
    sel.words.push_back(std::move(c.word));
  }

  const double log_a = std::log(ratio.to_double());
  const double similarity = std::log(static_cast<double>(ifs.size())) / -log_a;
  sel.alpha = options.alpha ? *options.alpha : std::min(similarity, 1.0);
  sel.bound = std::exp(-sel.alpha * std::log(3.0) - ell * (sel.alpha - options.epsilon) * log_a);
  sel.bound_met = static_cast<double>(sel.words.size()) >= sel.bound;
  return sel;
}

std::optional<int> smallest_ell_meeting_bound(const ExactIfs1D& ifs, int ell_max, const SscOptions& options) {
  for (int ell = 1; ell <= ell_max; ++ell) {
    if (extract_ssc_subsystem(ifs, ell, options).bound_met) return ell;
  }
  return std::nullopt;
}

RowLift lift_row_ssc(const BaranskiSystem& system, const UniformApproximation& approx, int ell,
                     const SscOptions& options) {
  if (ell < 1) throw CarpetError(ErrorCode::InvalidArgument, "word length must be at least 1");
  if (approx.counts.size() != system.size()) throw CarpetError(ErrorCode::InvalidArgument, "approximation does not match the system");
  for (const auto& [row, tau] : system.row_translations()) {
    if (!tau.is_exact() || !system.height_params()[static_cast<std::size_t>(row)].is_exact()) {
      throw CarpetError(ErrorCode::NonRationalInput, "row parameters must be exact");
    }
  }

  RowLift out;
  const auto gamma = multiset_permutations(approx.counts, options.max_words);
  out.card_gamma = gamma.size();

  // Group Gamma_k strings by their row projection.
  std::map<std::vector<int>, std::uint64_t> fibres;
  std::vector<std::size_t> letter_of(gamma.size());
  const auto& cells = system.cells();
  std::vector<std::vector<int>> projections(gamma.size());
  for (std::size_t g = 0; g < gamma.size(); ++g) {
    auto& rows = projections[g];
    rows.reserve(gamma[g].size());
    for (int c : gamma[g]) rows.push_back(cells[static_cast<std::size_t>(c)].row);
    ++fibres[rows];
  }
  std::map<std::vector<int>, std::size_t> index;
  for (const auto& [rows, count] : fibres) {
    index.emplace(rows, out.row_letters.size());
    out.row_letters.push_back(rows);
  }
  for (std::size_t g = 0; g < gamma.size(); ++g) letter_of[g] = index.at(projections[g]);
  out.j_factor = fibres.begin()->second;
  out.uniform_fibres = std::all_of(fibres.begin(), fibres.end(), [&](const auto& f) { return f.second == out.j_factor; });

  // Row letters as composite maps of the row IFS.
  ExactIfs1D rows_ifs;
  for (const auto& rows : out.row_letters) {
    Rational r(1);
    Rational o(0);
    for (int j : rows) {
      const Rational b = *system.height_params()[static_cast<std::size_t>(j)].exact;
      o += r * *system.row_translation(j).exact;
      r *= b;
    }
    rows_ifs.ratios.push_back(r);
    rows_ifs.offsets.push_back(o);
  }
  out.selection = extract_ssc_subsystem(rows_ifs, ell, options);

  std::uint64_t j_pow = 0;
  std::uint64_t expected = 0;
  const bool fits = checked_pow(out.j_factor, ell, j_pow) &&
                    !__builtin_mul_overflow(static_cast<std::uint64_t>(out.selection.words.size()), j_pow, &expected);

  std::uint64_t total = 0;
  if (checked_pow(out.card_gamma, ell, total) && total <= options.max_words) {
    // Count 2-D words whose row projection is a selected word.
    std::map<std::vector<int>, bool> chosen;
    for (const auto& w : out.selection.words) chosen.emplace(w, true);
    std::vector<int> digits(static_cast<std::size_t>(ell), 0);
    std::vector<int> projected(static_cast<std::size_t>(ell));
    for (std::uint64_t n = 0; n < total; ++n) {
      for (int l = 0; l < ell; ++l) projected[static_cast<std::size_t>(l)] = static_cast<int>(letter_of[static_cast<std::size_t>(digits[static_cast<std::size_t>(l)])]);
      if (chosen.count(projected)) ++out.lifted_count;
      for (int l = ell - 1; l >= 0; --l) {
        if (++digits[static_cast<std::size_t>(l)] < static_cast<int>(out.card_gamma)) break;
        digits[static_cast<std::size_t>(l)] = 0;
      }
    }
    out.enumerated = true;
    out.identity_holds = fits && out.lifted_count == expected;
  } else if (fits && out.uniform_fibres) {
    out.lifted_count = expected;
    out.identity_holds = true;
  }

  out.log_bound = -std::log(3.0) - ell * options.epsilon * approx.log_n +
                  ell * std::log(static_cast<double>(out.card_gamma));
  out.bound_met = out.lifted_count > 0 && std::log(static_cast<double>(out.lifted_count)) >= out.log_bound - 1e-12;
  return out;
}

}  // namespace carpetdim
