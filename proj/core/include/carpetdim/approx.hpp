#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "carpetdim/overlap.hpp"
#include "carpetdim/rational.hpp"
#include "carpetdim/system.hpp"
#include "carpetdim/variational.hpp"

namespace carpetdim {

// log n! as a plain sum of logs.
double log_factorial(std::uint64_t n);

struct StirlingBounds {
  double lower = 0.0;  // n log n - n
  // n log n - n + log n + 1; without the +1 the bound fails for n in 2..6
  double upper = 0.0;
};
StirlingBounds stirling_bounds(std::uint64_t n);

// log( (sum parts)! / prod parts! )
double log_multinomial(std::span<const std::uint64_t> parts);

// Every arrangement of the multiset with counts[i] copies of letter i, in
// lexicographic order. Throws BudgetExceeded past max_strings.
std::vector<std::vector<int>> multiset_permutations(std::span<const std::uint64_t> counts,
                                                    std::uint64_t max_strings = 5'000'000);

struct UniformApproximation {
  int k = 0;
  std::vector<std::uint64_t> counts;         // ceil(k p), per cell
  std::vector<std::uint64_t> column_totals;  // indexed by column
  std::vector<std::uint64_t> row_totals;     // indexed by row
  std::uint64_t theta = 0;
  double log_m = 0.0;  // sum c (-log a_i)
  double log_n = 0.0;  // sum c (-log b_j)
  double log_card_gamma = 0.0;
  double log_card_gamma_x = 0.0;
  double log_card_gamma_y = 0.0;
  double s_k_value = 0.0;  // Hausdorff-flavour value
};

// Throws NotOnSimplex or InvalidArgument (k < 1).
UniformApproximation build_uniform_approx(const BaranskiSystem& system, const ProbabilityWeights& p, int k);

// Uses the column projection when log m_k <= log n_k, the row projection
// otherwise. Throws DegenerateLogs for non-positive log m_k or log n_k.
double s_k_hausdorff(const UniformApproximation& approx);

// Weights a_i^{t_A} b_j^{D_A - t_A}, or the row-first analogue when D_B > D_A.
ProbabilityWeights box_weights(const BaranskiSystem& system);

double s_k_box(const BaranskiSystem& system, int k);

struct SscSelection {
  std::vector<std::vector<int>> words;                   // kept, by left endpoint
  std::vector<std::pair<Rational, Rational>> intervals;  // images of [0,1]
  std::uint64_t candidates = 0;
  double alpha = 0.0;
  double bound = 0.0;  // 3^{-alpha} a^{-l(alpha - eps)}
  bool bound_met = false;
};

struct SscOptions {
  double epsilon = 1e-3;
  std::optional<double> alpha;  // default min(similarity dimension, 1)
  std::uint64_t max_words = 20'000'000;
};

// Greedy selection of pairwise strictly disjoint level-l cylinder intervals.
// Throws NonHomogeneous, InvalidArgument, BudgetExceeded.
SscSelection extract_ssc_subsystem(const ExactIfs1D& ifs, int ell, const SscOptions& options = {});

// Smallest l in [1, ell_max] whose greedy count clears the bound.
std::optional<int> smallest_ell_meeting_bound(const ExactIfs1D& ifs, int ell_max, const SscOptions& options = {});

struct RowLift {
  std::vector<std::vector<int>> row_letters;  // Y-projection of Gamma_k, as row strings
  std::uint64_t card_gamma = 0;
  std::uint64_t j_factor = 0;  // preimages per Y-letter
  bool uniform_fibres = false;
  SscSelection selection;      // over the row letters
  std::uint64_t lifted_count = 0;
  bool enumerated = false;     // lifted_count counted word by word
  bool identity_holds = false; // lifted_count == |selection| J^l
  double log_bound = 0.0;      // log(3^{-1} n_k^{-l eps} |Gamma_k|^l)
  bool bound_met = false;      // only meaningful when selection.bound_met
};

// Requires exact row heights and translations (NonRationalInput).
RowLift lift_row_ssc(const BaranskiSystem& system, const UniformApproximation& approx, int ell,
                     const SscOptions& options = {});

}  // namespace carpetdim
