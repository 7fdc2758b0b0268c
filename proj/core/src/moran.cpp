#include "carpetdim/moran.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "carpetdim/error.hpp"

namespace carpetdim {
namespace {

// Root of a strictly decreasing f on [lo, inf) with f(lo) >= 1.
template <typename F>
double bisect_decreasing(F&& f, double lo) {
  if (f(lo) <= 1.0) return lo;
  double hi = std::max(1.0, 2.0 * lo);
  int guard = 0;
  while (f(hi) >= 1.0) {
    lo = hi;
    hi *= 2.0;
    if (++guard > 64) throw CarpetError(ErrorCode::InvalidArgument, "bisection bracket diverged");
  }
  for (int step = 0; step < kMaxBisectionSteps && hi - lo > kExponentTolerance; ++step) {
    const double mid = 0.5 * (lo + hi);
    if (f(mid) >= 1.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace

double solve_axis_exponent(std::span<const double> ratios) {
  if (ratios.empty()) throw CarpetError(ErrorCode::EmptyInput, "no ratios");
  std::vector<double> logs;
  logs.reserve(ratios.size());
  for (double r : ratios) {
    if (!(r > 0.0 && r < 1.0)) {
      std::ostringstream os;
      os << "ratio " << r << " not in (0,1)";
      throw CarpetError(ErrorCode::RatioOutOfRange, os.str());
    }
    logs.push_back(std::log(r));
  }
  if (ratios.size() == 1) return 0.0;
  auto f = [&](double t) {
    double s = 0.0;
    for (double l : logs) s += std::exp(t * l);
    return s;
  };
  return bisect_decreasing(f, 0.0);
}

std::vector<double> occupied_widths(const BaranskiSystem& system, const PatternProjections& proj) {
  std::vector<double> out;
  for (int i : proj.occupied_columns) out.push_back(system.width(i));
  return out;
}

std::vector<double> occupied_heights(const BaranskiSystem& system, const PatternProjections& proj) {
  std::vector<double> out;
  for (int j : proj.occupied_rows) out.push_back(system.height(j));
  return out;
}

double solve_box_exponent(const BaranskiSystem& system, double axis_exponent, Orientation orientation) {
  // Orientation A: log of a_i^{t} b_j^{D - t}; B swaps the roles.
  std::vector<double> log_primary;
  std::vector<double> log_secondary;
  for (const auto& c : system.cells()) {
    const double la = std::log(system.width(c.col));
    const double lb = std::log(system.height(c.row));
    log_primary.push_back(orientation == Orientation::A ? la : lb);
    log_secondary.push_back(orientation == Orientation::A ? lb : la);
  }
  auto f = [&](double d) {
    double s = 0.0;
    for (std::size_t k = 0; k < log_primary.size(); ++k) {
      s += std::exp(axis_exponent * log_primary[k] + (d - axis_exponent) * log_secondary[k]);
    }
    return s;
  };
  return bisect_decreasing(f, axis_exponent);
}

double solve_box_exponent(const BaranskiSystem& system, const PatternProjections& proj,
                          Orientation orientation) {
  const auto ratios = orientation == Orientation::A ? occupied_widths(system, proj)
                                                    : occupied_heights(system, proj);
  return solve_box_exponent(system, solve_axis_exponent(ratios), orientation);
}

MoranExponents box_dimension_analytic(const BaranskiSystem& system) {
  const PatternProjections proj = project(system);
  MoranExponents e;
  e.t_a = solve_axis_exponent(occupied_widths(system, proj));
  e.t_b = solve_axis_exponent(occupied_heights(system, proj));
  e.d_a = solve_box_exponent(system, e.t_a, Orientation::A);
  e.d_b = solve_box_exponent(system, e.t_b, Orientation::B);
  // Bisection returns midpoints, so allow a few tolerance widths of slack.
  if (e.box_dimension() > e.t_a + e.t_b + 4 * kExponentTolerance) {
    std::ostringstream os;
    os.precision(17);
    os << "max(D_A, D_B) = " << e.box_dimension() << " exceeds t_A + t_B = " << e.t_a + e.t_b;
    throw CarpetError(ErrorCode::InternalInequalityViolation, os.str());
  }
  return e;
}

BMClosedForm bm_closed_form(const BaranskiSystem& system) {
  const SystemClass cls = classify(system);
  if (!cls.is_bm()) throw CarpetError(ErrorCode::NotBMType, "system is not Bedford-McMullen type");
  const PatternProjections proj = project(system);
  const double log_m = std::log(cls.m_tilde);
  const double log_n = std::log(cls.n_tilde);
  const double gamma = log_m / log_n;
  double power_sum = 0.0;
  for (int i : proj.occupied_columns) power_sum += std::pow(static_cast<double>(proj.column_count(i)), gamma);
  const double dx = static_cast<double>(proj.occupied_columns.size());
  const double d = static_cast<double>(system.size());
  return BMClosedForm{std::log(power_sum) / log_m, std::log(dx) / log_m + std::log(d / dx) / log_n};
}

double pressure_base(const BaranskiSystem& system, const MoranExponents& e, double s) {
  double sum_a = 0.0;
  double sum_b = 0.0;
  for (const auto& c : system.cells()) {
    const double la = std::log(system.width(c.col));
    const double lb = std::log(system.height(c.row));
    sum_a += std::exp(e.t_a * la + (s - e.t_a) * lb);
    sum_b += std::exp(e.t_b * lb + (s - e.t_b) * la);
  }
  return std::max(sum_a, sum_b);
}

double merged_columns_hausdorff_bound(const BaranskiSystem& system, int c1, int c2) {
  const SystemClass cls = classify(system);
  if (!cls.is_bm()) throw CarpetError(ErrorCode::NotBMType, "system is not Bedford-McMullen type");
  const PatternProjections proj = project(system);
  auto occupied = [&](int c) {
    return c >= 0 && static_cast<std::size_t>(c) < system.columns() && proj.column_count(c) > 0;
  };
  if (c1 == c2 || !occupied(c1) || !occupied(c2)) {
    throw CarpetError(ErrorCode::InvalidArgument, "merge needs two distinct occupied columns");
  }
  const double gamma = std::log(cls.m_tilde) / std::log(cls.n_tilde);
  double power_sum = std::pow(static_cast<double>(proj.column_count(c1) + proj.column_count(c2)), gamma);
  for (int i : proj.occupied_columns) {
    if (i == c1 || i == c2) continue;
    power_sum += std::pow(static_cast<double>(proj.column_count(i)), gamma);
  }
  return std::log(power_sum) / std::log(cls.m_tilde);
}

}  // namespace carpetdim
