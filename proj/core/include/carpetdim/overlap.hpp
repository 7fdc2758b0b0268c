#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "carpetdim/rational.hpp"
#include "carpetdim/system.hpp"

namespace carpetdim {

// Exact 1-D IFS {x -> ratios[i] x + offsets[i]}.
struct ExactIfs1D {
  std::vector<Rational> ratios;
  std::vector<Rational> offsets;

  std::size_t size() const { return ratios.size(); }
};

// Composite map S_{w_1} o ... o S_{w_k}: x -> ratio x + offset.
struct AffineWord1D {
  std::vector<int> word;
  Rational ratio{1};
  Rational offset{0};
};

// Throws InvalidArgument on a bad letter index.
AffineWord1D compose_word(const ExactIfs1D& ifs, std::span<const int> word);

// (u o v): word u followed by word v.
AffineWord1D compose(const AffineWord1D& u, const AffineWord1D& v);

// Axis projections {a_i x + t_i}_{i in D_X} and {b_j y + tau_j}_{j in D_Y}.
// nullopt when any parameter on that axis is not exact.
std::optional<ExactIfs1D> x_projection(const BaranskiSystem& system);
std::optional<ExactIfs1D> y_projection(const BaranskiSystem& system);

struct GammaOptions {
  int k_max = 10;
  std::uint64_t word_budget = 2'000'000;  // total words over all levels
  // Pairs of words whose ratio products differ count as infinitely far apart.
  bool strict_ratio = false;
  int threads = 1;
};

struct GammaLevel {
  int k = 0;
  std::optional<Rational> gamma;  // nullopt: no distinct pair (Infinite)
  // -log(gamma)/k; +inf for gamma = 0, NaN when gamma is Infinite.
  double rate = 0.0;
};

struct GammaSequence {
  std::vector<GammaLevel> levels;  // k = 1..k computed
  bool budget_exceeded = false;
};

GammaSequence gamma_sequence(const ExactIfs1D& ifs, const GammaOptions& options = {});

enum class SeccVerdict { ExactOverlap, BoundedRate, Inconclusive };

const char* to_string(SeccVerdict v);

struct SeccResult {
  SeccVerdict verdict = SeccVerdict::Inconclusive;
  int overlap_level = 0;  // first k with gamma_k = 0 (ExactOverlap only)
  GammaSequence trace;
  // Anything short of ExactOverlap is finite evidence only.
  bool heuristic = true;
};

SeccResult secc_diagnostic(const ExactIfs1D& ifs, const GammaOptions& options = {});

enum class AxisStatus { ExactOverlapAt, NoOverlapToDepth, NotChecked };

const char* to_string(AxisStatus s);

struct AxisReport {
  AxisStatus status = AxisStatus::NotChecked;
  int level = 0;  // overlap level, or depth reached without overlap
  std::optional<SeccResult> secc;
};

struct HyperplaneHit {
  char axis = 'x';
  int first = 0;   // 0-based column/row
  int second = 0;
  bool equal_ratio = false;
};

enum class ExceptionalVerdict { LikelyOutsideE, InsideECandidate, Inconclusive };

const char* to_string(ExceptionalVerdict v);

struct ExceptionalReport {
  AxisReport x_axis;
  AxisReport y_axis;
  std::vector<HyperplaneHit> hyperplane_hits;
  int dim_e_constant = 0;  // |D_X| + |D_Y| - 1
  ExceptionalVerdict verdict = ExceptionalVerdict::Inconclusive;
};

ExceptionalReport exceptional_report(const BaranskiSystem& system, const GammaOptions& options = {});

}  // namespace carpetdim
