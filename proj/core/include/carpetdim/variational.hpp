#pragma once

#include <cstdint>
#include <vector>

#include "carpetdim/system.hpp"

namespace carpetdim {

// One weight per cell, in the order of BaranskiSystem::cells().
struct ProbabilityWeights {
  std::vector<double> p;
};

inline constexpr double kSimplexTolerance = 1e-12;
inline constexpr double kBoundaryTolerance = 1e-12;
inline constexpr double kBranchAgreement = 1e-9;

struct MarginalSums {
  std::vector<double> column;  // R_i, indexed by column
  std::vector<double> row;     // S_j, indexed by row
};

MarginalSums marginals(const BaranskiSystem& system, const ProbabilityWeights& w);

enum class Region { SA, SB, Boundary };

const char* to_string(Region r);

struct RegionTag {
  Region region = Region::SA;
  double column_log_mean = 0.0;  // sum_i R_i log a_i
  double row_log_mean = 0.0;     // sum_j S_j log b_j
};

RegionTag region_of(const BaranskiSystem& system, const ProbabilityWeights& w);

struct GValue {
  double value = 0.0;
  RegionTag region;
};

// Throws NotOnSimplex. At the boundary both branches are evaluated and the
// call throws InternalInequalityViolation if they disagree by > 1e-9.
GValue eval_g(const BaranskiSystem& system, const ProbabilityWeights& w);

// Branch evaluations, valid anywhere on the simplex.
double g_branch_a(const BaranskiSystem& system, const ProbabilityWeights& w);
double g_branch_b(const BaranskiSystem& system, const ProbabilityWeights& w);

struct GGradient {
  std::vector<double> tangent;  // mean-centred partial derivatives
  Region branch = Region::SA;   // branch that was differentiated
  bool boundary_point = false;  // p sits on the S_A/S_B boundary
};

// Requires every p_ij > 0 (throws NotInterior).
GGradient grad_g(const BaranskiSystem& system, const ProbabilityWeights& w);

struct MaximizeOptions {
  int random_starts = 16;
  int max_iters = 20000;
  double tol = 1e-14;
  std::uint64_t seed = 0;
  int threads = 1;
};

struct MaximizeResult {
  ProbabilityWeights weights;
  double value = 0.0;
  bool converged = false;
  int starts_run = 0;
  int best_start = 0;
};

// Multi-start exponentiated-gradient ascent; the value is a lower bound on
// max g (exact for BM-type systems).
MaximizeResult maximize_g(const BaranskiSystem& system, const MaximizeOptions& options = {});

// p_ij = |I_i|^{gamma-1} / m^s for a BM-type system; throws NotBMType.
ProbabilityWeights bm_optimal_weights(const BaranskiSystem& system);

}  // namespace carpetdim
