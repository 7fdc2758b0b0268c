#include "carpetdim/variational.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>
#include <thread>

#include "carpetdim/error.hpp"
#include "carpetdim/moran.hpp"

namespace carpetdim {
namespace {

void require_simplex(const BaranskiSystem& system, const ProbabilityWeights& w) {
  if (w.p.size() != system.size()) {
    throw CarpetError(ErrorCode::NotOnSimplex, "weight vector length does not match the pattern");
  }
  double sum = 0.0;
  for (double v : w.p) {
    if (!(v >= 0.0)) throw CarpetError(ErrorCode::NotOnSimplex, "negative or NaN weight");
    sum += v;
  }
  if (std::abs(sum - 1.0) > kSimplexTolerance) {
    std::ostringstream os;
    os.precision(17);
    os << "weights sum to " << sum;
    throw CarpetError(ErrorCode::NotOnSimplex, os.str());
  }
}

double xlogx(double x) { return x > 0.0 ? x * std::log(x) : 0.0; }

struct BranchParts {
  double x_den = 0.0;   // sum R_i log a_i
  double y_den = 0.0;   // sum S_j log b_j
  double h_col = 0.0;   // sum R_i log R_i
  double h_row = 0.0;   // sum S_j log S_j
  double h_full = 0.0;  // sum p log p
};

BranchParts parts(const BaranskiSystem& system, const ProbabilityWeights& w, const MarginalSums& m) {
  BranchParts b;
  const auto& cells = system.cells();
  for (std::size_t k = 0; k < cells.size(); ++k) {
    b.x_den += w.p[k] * std::log(system.width(cells[k].col));
    b.y_den += w.p[k] * std::log(system.height(cells[k].row));
    b.h_full += xlogx(w.p[k]);
  }
  for (double r : m.column) b.h_col += xlogx(r);
  for (double s : m.row) b.h_row += xlogx(s);
  return b;
}

double branch_a(const BranchParts& b) { return b.h_col / b.x_den + (b.h_full - b.h_col) / b.y_den; }
double branch_b(const BranchParts& b) { return b.h_row / b.y_den + (b.h_full - b.h_row) / b.x_den; }

Region classify_region(double x_den, double y_den) {
  const double diff = x_den - y_den;
  if (std::abs(diff) <= kBoundaryTolerance) return Region::Boundary;
  return diff > 0.0 ? Region::SA : Region::SB;
}

// Raw partial derivatives of the chosen branch; zero weights are clamped so
// the optimizer can differentiate at points that have underflowed.
std::vector<double> raw_gradient(const BaranskiSystem& system, const ProbabilityWeights& w,
                                 bool branch_is_a) {
  const MarginalSums m = marginals(system, w);
  const BranchParts b = parts(system, w, m);
  constexpr double floor = std::numeric_limits<double>::min();
  const auto& cells = system.cells();
  std::vector<double> grad(cells.size());
  for (std::size_t k = 0; k < cells.size(); ++k) {
    const Cell c = cells[k];
    const double la = std::log(system.width(c.col));
    const double lb = std::log(system.height(c.row));
    const double lp = std::log(std::max(w.p[k], floor));
    if (branch_is_a) {
      const double lr = std::log(std::max(m.column[static_cast<std::size_t>(c.col)], floor));
      grad[k] = (lr + 1.0) / b.x_den - b.h_col * la / (b.x_den * b.x_den) + (lp - lr) / b.y_den -
                (b.h_full - b.h_col) * lb / (b.y_den * b.y_den);
    } else {
      const double ls = std::log(std::max(m.row[static_cast<std::size_t>(c.row)], floor));
      grad[k] = (ls + 1.0) / b.y_den - b.h_row * lb / (b.y_den * b.y_den) + (lp - ls) / b.x_den -
                (b.h_full - b.h_row) * la / (b.x_den * b.x_den);
    }
  }
  return grad;
}

void normalize(std::vector<double>& p) {
  double s = 0.0;
  for (double v : p) s += v;
  for (double& v : p) v /= s;
}

struct StartOutcome {
  ProbabilityWeights weights;
  double value = -std::numeric_limits<double>::infinity();
  bool converged = false;
};

StartOutcome ascend(const BaranskiSystem& system, ProbabilityWeights w, const MaximizeOptions& opt) {
  StartOutcome out;
  GValue current = eval_g(system, w);
  double eta = 1.0;
  int quiet = 0;
  for (int it = 0; it < opt.max_iters; ++it) {
    const bool use_a = current.region.region != Region::SB;
    const std::vector<double> grad = raw_gradient(system, w, use_a);
    const double gmax = *std::max_element(grad.begin(), grad.end());

    // Weighted spread of the gradient: zero at a stationary point of the
    // multiplicative update.
    double mean = 0.0;
    for (std::size_t k = 0; k < grad.size(); ++k) mean += w.p[k] * grad[k];
    double spread = 0.0;
    for (std::size_t k = 0; k < grad.size(); ++k) spread += w.p[k] * (grad[k] - mean) * (grad[k] - mean);
    if (spread < 1e-24) {
      out.converged = true;
      break;
    }

    bool accepted = false;
    ProbabilityWeights trial;
    GValue trial_value;
    while (eta > 1e-18) {
      trial.p.resize(w.p.size());
      for (std::size_t k = 0; k < w.p.size(); ++k) trial.p[k] = w.p[k] * std::exp(eta * (grad[k] - gmax));
      normalize(trial.p);
      trial_value = eval_g(system, trial);
      if (trial_value.value >= current.value) {
        accepted = true;
        break;
      }
      eta *= 0.5;
    }
    if (!accepted) {
      out.converged = true;
      break;
    }
    const double gain = trial_value.value - current.value;
    w = std::move(trial);
    current = trial_value;
    eta = std::min(eta * 2.0, 64.0);
    quiet = gain < opt.tol ? quiet + 1 : 0;
    if (quiet >= 5) {
      out.converged = true;
      break;
    }
  }
  out.weights = std::move(w);
  out.value = current.value;
  return out;
}

}  // namespace

const char* to_string(Region r) {
  switch (r) {
    case Region::SA: return "S_A";
    case Region::SB: return "S_B";
    case Region::Boundary: return "Boundary";
  }
  return "Unknown";
}

MarginalSums marginals(const BaranskiSystem& system, const ProbabilityWeights& w) {
  MarginalSums m;
  m.column.assign(system.columns(), 0.0);
  m.row.assign(system.rows(), 0.0);
  const auto& cells = system.cells();
  for (std::size_t k = 0; k < cells.size(); ++k) {
    m.column[static_cast<std::size_t>(cells[k].col)] += w.p[k];
    m.row[static_cast<std::size_t>(cells[k].row)] += w.p[k];
  }
  return m;
}

RegionTag region_of(const BaranskiSystem& system, const ProbabilityWeights& w) {
  require_simplex(system, w);
  const MarginalSums m = marginals(system, w);
  RegionTag tag;
  for (std::size_t i = 0; i < m.column.size(); ++i) {
    tag.column_log_mean += m.column[i] * std::log(system.width(static_cast<int>(i)));
  }
  for (std::size_t j = 0; j < m.row.size(); ++j) {
    tag.row_log_mean += m.row[j] * std::log(system.height(static_cast<int>(j)));
  }
  tag.region = classify_region(tag.column_log_mean, tag.row_log_mean);
  return tag;
}

double g_branch_a(const BaranskiSystem& system, const ProbabilityWeights& w) {
  require_simplex(system, w);
  return branch_a(parts(system, w, marginals(system, w)));
}

double g_branch_b(const BaranskiSystem& system, const ProbabilityWeights& w) {
  require_simplex(system, w);
  return branch_b(parts(system, w, marginals(system, w)));
}

GValue eval_g(const BaranskiSystem& system, const ProbabilityWeights& w) {
  require_simplex(system, w);
  const MarginalSums m = marginals(system, w);
  const BranchParts b = parts(system, w, m);
  GValue out;
  out.region.column_log_mean = b.x_den;
  out.region.row_log_mean = b.y_den;
  out.region.region = classify_region(b.x_den, b.y_den);
  switch (out.region.region) {
    case Region::SA: out.value = branch_a(b); break;
    case Region::SB: out.value = branch_b(b); break;
    case Region::Boundary: {
      const double va = branch_a(b);
      const double vb = branch_b(b);
      if (std::abs(va - vb) > kBranchAgreement) {
        std::ostringstream os;
        os.precision(17);
        os << "g branches disagree on the boundary: " << va << " vs " << vb;
        throw CarpetError(ErrorCode::InternalInequalityViolation, os.str());
      }
      out.value = va;
      break;
    }
  }
  return out;
}

GGradient grad_g(const BaranskiSystem& system, const ProbabilityWeights& w) {
  require_simplex(system, w);
  for (double v : w.p) {
    if (!(v > 0.0)) throw CarpetError(ErrorCode::NotInterior, "gradient needs strictly positive weights");
  }
  const RegionTag tag = region_of(system, w);
  GGradient g;
  g.boundary_point = tag.region == Region::Boundary;
  g.branch = tag.region == Region::SB ? Region::SB : Region::SA;
  g.tangent = raw_gradient(system, w, g.branch == Region::SA);
  double mean = 0.0;
  for (double v : g.tangent) mean += v;
  mean /= static_cast<double>(g.tangent.size());
  for (double& v : g.tangent) v -= mean;
  return g;
}

ProbabilityWeights bm_optimal_weights(const BaranskiSystem& system) {
  const SystemClass cls = classify(system);
  if (!cls.is_bm()) throw CarpetError(ErrorCode::NotBMType, "system is not Bedford-McMullen type");
  const PatternProjections proj = project(system);
  const double gamma = std::log(cls.m_tilde) / std::log(cls.n_tilde);
  const double s = bm_closed_form(system).dim_h;
  const double scale = std::pow(cls.m_tilde, s);
  ProbabilityWeights w;
  double sum = 0.0;
  for (const auto& c : system.cells()) {
    const double count = static_cast<double>(proj.column_count(c.col));
    w.p.push_back(std::pow(count, gamma - 1.0) / scale);
    sum += w.p.back();
  }
  if (std::abs(sum - 1.0) > 1e-12) {
    std::ostringstream os;
    os.precision(17);
    os << "optimal weights sum to " << sum;
    throw CarpetError(ErrorCode::InternalInequalityViolation, os.str());
  }
  return w;
}

MaximizeResult maximize_g(const BaranskiSystem& system, const MaximizeOptions& options) {
  const std::size_t d = system.size();
  MaximizeResult result;
  if (d == 1) {
    result.weights.p = {1.0};
    result.value = 0.0;
    result.converged = true;
    result.starts_run = 1;
    return result;
  }
  const PatternProjections proj = project(system);

  std::vector<ProbabilityWeights> starts;
  starts.push_back({std::vector<double>(d, 1.0 / static_cast<double>(d))});
  {
    ProbabilityWeights by_col;
    ProbabilityWeights by_row;
    const double nc = static_cast<double>(proj.occupied_columns.size());
    const double nr = static_cast<double>(proj.occupied_rows.size());
    for (const auto& c : system.cells()) {
      by_col.p.push_back(1.0 / (nc * static_cast<double>(proj.column_count(c.col))));
      by_row.p.push_back(1.0 / (nr * static_cast<double>(proj.row_count(c.row))));
    }
    starts.push_back(std::move(by_col));
    starts.push_back(std::move(by_row));
  }
  if (classify(system).is_bm()) starts.push_back(bm_optimal_weights(system));
  std::mt19937_64 rng(options.seed);
  std::exponential_distribution<double> expo(1.0);
  for (int s = 0; s < options.random_starts; ++s) {
    ProbabilityWeights w;
    for (std::size_t k = 0; k < d; ++k) w.p.push_back(expo(rng) + 1e-12);
    normalize(w.p);
    starts.push_back(std::move(w));
  }

  std::vector<StartOutcome> outcomes(starts.size());
  const std::size_t workers =
      std::clamp<std::size_t>(static_cast<std::size_t>(std::max(options.threads, 1)), 1, starts.size());
  if (workers == 1) {
    for (std::size_t s = 0; s < starts.size(); ++s) outcomes[s] = ascend(system, starts[s], options);
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < workers; ++t) {
      pool.emplace_back([&, t] {
        for (std::size_t s = t; s < starts.size(); s += workers) outcomes[s] = ascend(system, starts[s], options);
      });
    }
    for (auto& th : pool) th.join();
  }

  std::size_t best = 0;
  for (std::size_t s = 1; s < outcomes.size(); ++s) {
    if (outcomes[s].value > outcomes[best].value) best = s;
  }
  result.weights = outcomes[best].weights;
  result.value = outcomes[best].value;
  result.converged = outcomes[best].converged;
  result.starts_run = static_cast<int>(outcomes.size());
  result.best_start = static_cast<int>(best);
  return result;
}

}  // namespace carpetdim
