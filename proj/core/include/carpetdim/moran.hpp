#pragma once

#include <span>

#include "carpetdim/system.hpp"

namespace carpetdim {

enum class Orientation { A, B };

struct MoranExponents {
  double t_a = 0.0;  // sum_{i in D_X} a_i^{t_A} = 1
  double t_b = 0.0;  // sum_{j in D_Y} b_j^{t_B} = 1
  double d_a = 0.0;  // sum_D a_i^{t_A} b_j^{D_A - t_A} = 1
  double d_b = 0.0;  // sum_D b_j^{t_B} a_i^{D_B - t_B} = 1

  double box_dimension() const { return d_a > d_b ? d_a : d_b; }
};

inline constexpr double kExponentTolerance = 1e-12;
inline constexpr int kMaxBisectionSteps = 200;

// Unique t >= 0 with sum r_i^t = 1.
double solve_axis_exponent(std::span<const double> ratios);

// D_A (orientation A) or D_B (orientation B) given the matching axis exponent.
double solve_box_exponent(const BaranskiSystem& system, double axis_exponent, Orientation orientation);

// Convenience overload that solves the axis exponent first.
double solve_box_exponent(const BaranskiSystem& system, const PatternProjections& proj,
                          Orientation orientation);

// All four exponents; throws InternalInequalityViolation if
// max(D_A, D_B) > t_A + t_B beyond solver tolerance.
MoranExponents box_dimension_analytic(const BaranskiSystem& system);

struct BMClosedForm {
  double dim_h = 0.0;
  double dim_b = 0.0;
};

// Closed forms for a Bedford-McMullen-type system; throws NotBMType.
BMClosedForm bm_closed_form(const BaranskiSystem& system);

// max{ sum a^{t_A} b^{s-t_A}, sum b^{t_B} a^{s-t_B} }; the k-th power is the
// level-k pressure sum. Strictly decreasing in s, equal to 1 at max(D_A, D_B).
double pressure_base(const BaranskiSystem& system, const MoranExponents& exponents, double s);

// Upper bound on dim_H after columns c1 and c2 of a BM-type system are
// merged: the two columns are replaced by one holding |I_c1| + |I_c2| cells.
double merged_columns_hausdorff_bound(const BaranskiSystem& system, int c1, int c2);

std::vector<double> occupied_widths(const BaranskiSystem& system, const PatternProjections& proj);
std::vector<double> occupied_heights(const BaranskiSystem& system, const PatternProjections& proj);

}  // namespace carpetdim
