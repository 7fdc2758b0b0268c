#include "carpetdim/boxcount.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <ostream>
#include <random>
#include <thread>
#include <unordered_set>

#include "carpetdim/error.hpp"

namespace carpetdim {
namespace {

constexpr double kSnap = 1e-9;
constexpr std::uint64_t kDenseLimit = std::uint64_t{1} << 28;

struct Letter {
  double tx, ty, a, b;
};

std::vector<Letter> letters_of(const BaranskiSystem& system) {
  std::vector<Letter> out;
  for (const Cell& c : system.cells()) {
    out.push_back({system.column_translation(c.col).value, system.row_translation(c.row).value,
                   system.width(c.col), system.height(c.row)});
  }
  return out;
}

void check_delta(double delta) {
  if (!(delta > 0.0) || delta > 1.0) throw CarpetError(ErrorCode::InvalidArgument, "delta must lie in (0, 1]");
}

class Expander {
 public:
  Expander(const std::vector<Letter>& letters, double delta, const RectSink& sink, std::atomic<std::uint64_t>& emitted,
           std::uint64_t budget)
      : letters_(letters), limit_(delta * (1.0 + 1e-12)), sink_(sink), emitted_(emitted), budget_(budget) {}

  void run(double x0, double y0, double w, double h) {
    if (std::max(w, h) <= limit_) {
      if (emitted_.fetch_add(1, std::memory_order_relaxed) >= budget_) {
        throw CarpetError(ErrorCode::BudgetExceeded, "rectangle budget exceeded");
      }
      sink_(word_, x0, y0, w, h);
      return;
    }
    for (std::size_t i = 0; i < letters_.size(); ++i) {
      const Letter& l = letters_[i];
      word_.push_back(static_cast<int>(i));
      run(x0 + w * l.tx, y0 + h * l.ty, w * l.a, h * l.b);
      word_.pop_back();
    }
  }

  void push(int letter) { word_.push_back(letter); }

 private:
  const std::vector<Letter>& letters_;
  double limit_;
  const RectSink& sink_;
  std::atomic<std::uint64_t>& emitted_;
  std::uint64_t budget_;
  std::vector<int> word_;
};

std::uint64_t snapped_floor(double x) {
  if (x <= 0.0) return 0;
  return static_cast<std::uint64_t>(std::floor(x + kSnap));
}

}  // namespace

std::uint64_t expand_to_scale(const BaranskiSystem& system, double delta, const RectSink& sink,
                              const ExpandOptions& options) {
  check_delta(delta);
  const auto letters = letters_of(system);
  std::atomic<std::uint64_t> emitted{0};
  Expander(letters, delta, sink, emitted, options.max_rects).run(0.0, 0.0, 1.0, 1.0);
  return emitted.load();
}

std::vector<CylinderRect> collect_rects(const BaranskiSystem& system, double delta, const ExpandOptions& options) {
  std::vector<CylinderRect> out;
  expand_to_scale(
      system, delta,
      [&](std::span<const int> word, double x0, double y0, double w, double h) {
        out.push_back({std::vector<int>(word.begin(), word.end()), x0, y0, w, h});
      },
      options);
  return out;
}

std::uint64_t grid_size(double delta) {
  check_delta(delta);
  const double inv = 1.0 / delta;
  return std::max<std::uint64_t>(1, static_cast<std::uint64_t>(std::ceil(inv - kSnap * inv)));
}

CellRange cells_met(double x0, double y0, double w, double h, double delta) {
  const std::uint64_t last = grid_size(delta) - 1;
  auto clamp = [last](std::uint64_t v) { return std::min(v, last); };
  return {clamp(snapped_floor(x0 / delta)), clamp(snapped_floor((x0 + w) / delta)), clamp(snapped_floor(y0 / delta)),
          clamp(snapped_floor((y0 + h) / delta))};
}

struct OccupancyGrid::Impl {
  std::vector<std::uint64_t> bits;
  std::unordered_set<std::uint64_t> sparse;
  bool dense = true;
};

OccupancyGrid::OccupancyGrid(double delta) : side_(grid_size(delta)), delta_(delta), impl_(new Impl) {
  if (side_ <= kDenseLimit / side_) {
    impl_->bits.assign((side_ * side_ + 63) / 64, 0);
  } else {
    impl_->dense = false;
  }
}

OccupancyGrid::~OccupancyGrid() { delete impl_; }

OccupancyGrid::OccupancyGrid(OccupancyGrid&& other) noexcept
    : side_(other.side_), delta_(other.delta_), impl_(other.impl_) {
  other.impl_ = nullptr;
}

OccupancyGrid& OccupancyGrid::operator=(OccupancyGrid&& other) noexcept {
  if (this != &other) {
    delete impl_;
    side_ = other.side_;
    delta_ = other.delta_;
    impl_ = other.impl_;
    other.impl_ = nullptr;
  }
  return *this;
}

bool OccupancyGrid::dense() const { return impl_->dense; }

void OccupancyGrid::mark_cell(std::uint64_t col, std::uint64_t row) {
  const std::uint64_t id = row * side_ + col;
  if (impl_->dense) {
    impl_->bits[id >> 6] |= std::uint64_t{1} << (id & 63);
  } else {
    impl_->sparse.insert(id);
  }
}

void OccupancyGrid::mark(double x0, double y0, double w, double h) {
  const CellRange r = cells_met(x0, y0, w, h, delta_);
  for (std::uint64_t v = r.row_lo; v <= r.row_hi; ++v) {
    for (std::uint64_t u = r.col_lo; u <= r.col_hi; ++u) mark_cell(u, v);
  }
}

void OccupancyGrid::merge(const OccupancyGrid& other) {
  if (other.side_ != side_) throw CarpetError(ErrorCode::InvalidArgument, "grids of different scales");
  if (impl_->dense) {
    for (std::size_t i = 0; i < impl_->bits.size(); ++i) impl_->bits[i] |= other.impl_->bits[i];
  } else {
    impl_->sparse.insert(other.impl_->sparse.begin(), other.impl_->sparse.end());
  }
}

std::uint64_t OccupancyGrid::count() const {
  if (!impl_->dense) return impl_->sparse.size();
  std::uint64_t n = 0;
  for (auto word : impl_->bits) n += static_cast<std::uint64_t>(__builtin_popcountll(word));
  return n;
}

std::uint64_t count_boxes(std::span<const CylinderRect> rects, double delta) {
  OccupancyGrid grid(delta);
  for (const auto& r : rects) grid.mark(r.x0, r.y0, r.width, r.height);
  return grid.count();
}

std::uint64_t count_boxes_at_scale(const BaranskiSystem& system, double delta, const ExpandOptions& options) {
  check_delta(delta);
  const auto letters = letters_of(system);
  std::atomic<std::uint64_t> emitted{0};
  const int threads = std::max(1, options.threads);
  const double limit = delta * (1.0 + 1e-12);

  if (threads == 1 || 1.0 <= limit) {
    OccupancyGrid grid(delta);
    RectSink sink = [&](std::span<const int>, double x0, double y0, double w, double h) { grid.mark(x0, y0, w, h); };
    Expander(letters, delta, sink, emitted, options.max_rects).run(0.0, 0.0, 1.0, 1.0);
    return grid.count();
  }

  const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(threads), letters.size());
  std::vector<OccupancyGrid> grids;
  grids.reserve(workers);
  for (std::size_t t = 0; t < workers; ++t) grids.emplace_back(delta);
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < workers; ++t) {
    pool.emplace_back([&, t] {
      try {
        OccupancyGrid& grid = grids[t];
        RectSink sink = [&](std::span<const int>, double x0, double y0, double w, double h) {
          grid.mark(x0, y0, w, h);
        };
        for (std::size_t i = t; i < letters.size(); i += workers) {
          const Letter& l = letters[i];
          Expander e(letters, delta, sink, emitted, options.max_rects);
          e.push(static_cast<int>(i));
          e.run(l.tx, l.ty, l.a, l.b);
        }
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
  for (std::size_t t = 1; t < workers; ++t) grids[0].merge(grids[t]);
  return grids[0].count();
}

BoxDimensionEstimate fit_box_dimension(std::vector<BoxCountSample> samples) {
  if (samples.size() < 2) throw CarpetError(ErrorCode::InvalidArgument, "need at least two samples");
  auto fit = [](std::span<const BoxCountSample> s, BoxDimensionEstimate& est) {
    double mx = 0.0, my = 0.0;
    for (const auto& v : s) {
      mx += -std::log(v.delta);
      my += std::log(static_cast<double>(v.n_delta));
    }
    mx /= static_cast<double>(s.size());
    my /= static_cast<double>(s.size());
    double sxx = 0.0, sxy = 0.0;
    for (const auto& v : s) {
      const double dx = -std::log(v.delta) - mx;
      sxx += dx * dx;
      sxy += dx * (std::log(static_cast<double>(v.n_delta)) - my);
    }
    est.slope = sxx > 0.0 ? sxy / sxx : 0.0;
    est.intercept = my - est.slope * mx;
    est.residuals.clear();
    double worst = 0.0;
    for (const auto& v : s) {
      const double r = std::log(static_cast<double>(v.n_delta)) - (est.intercept + est.slope * -std::log(v.delta));
      est.residuals.push_back(r);
      worst = std::max(worst, std::abs(r));
    }
    return worst;
  };
  std::sort(samples.begin(), samples.end(), [](const auto& a, const auto& b) { return a.delta > b.delta; });
  BoxDimensionEstimate est;
  est.samples = samples;
  const double worst = fit(samples, est);
  if (worst > kResidualThreshold && samples.size() >= 4) {
    fit(std::span<const BoxCountSample>(samples).subspan(2), est);
    est.dropped_coarse = true;
  }
  return est;
}

BoxDimensionEstimate estimate_box_dimension(const BaranskiSystem& system, int q_min, int q_max, double base,
                                            const ExpandOptions& options) {
  if (!(base > 1.0)) throw CarpetError(ErrorCode::InvalidArgument, "base must exceed 1");
  if (q_min < 0 || q_min >= q_max) throw CarpetError(ErrorCode::InvalidArgument, "need 0 <= q_min < q_max");
  std::vector<BoxCountSample> samples;
  for (int q = q_min; q <= q_max; ++q) {
    const double delta = std::pow(base, -q);
    samples.push_back({q, delta, count_boxes_at_scale(system, delta, options)});
  }
  return fit_box_dimension(std::move(samples));
}

void write_samples_csv(std::ostream& out, std::span<const BoxCountSample> samples) {
  const auto old_precision = out.precision(17);
  out << "q,delta,N_delta,log_N,minus_log_delta\n";
  for (const auto& s : samples) {
    out << s.q << ',' << s.delta << ',' << s.n_delta << ',' << std::log(static_cast<double>(s.n_delta)) << ','
        << -std::log(s.delta) << '\n';
  }
  out.precision(old_precision);
}

Raster render_image(const BaranskiSystem& system, double delta, int resolution, const ExpandOptions& options) {
  if (resolution < 1) throw CarpetError(ErrorCode::InvalidArgument, "resolution must be at least 1");
  const auto res = static_cast<std::int64_t>(resolution);
  std::vector<std::uint32_t> counts(static_cast<std::size_t>(res * res), 0);
  // Pixels whose interior meets the rectangle interior.
  auto span_of = [res](double lo, double len) {
    auto a = static_cast<std::int64_t>(std::floor(lo * static_cast<double>(res) + kSnap));
    auto b = static_cast<std::int64_t>(std::ceil((lo + len) * static_cast<double>(res) - kSnap)) - 1;
    a = std::clamp<std::int64_t>(a, 0, res - 1);
    b = std::clamp<std::int64_t>(b, a, res - 1);
    return std::pair{a, b};
  };
  expand_to_scale(
      system, delta,
      [&](std::span<const int>, double x0, double y0, double w, double h) {
        const auto [c0, c1] = span_of(x0, w);
        const auto [r0, r1] = span_of(y0, h);
        for (auto r = r0; r <= r1; ++r) {
          const auto row = res - 1 - r;
          for (auto c = c0; c <= c1; ++c) {
            auto& v = counts[static_cast<std::size_t>(row * res + c)];
            if (v < 255) ++v;
          }
        }
      },
      options);
  Raster out;
  out.width = resolution;
  out.height = resolution;
  out.pixels.reserve(counts.size());
  for (auto v : counts) out.pixels.push_back(static_cast<std::uint8_t>(v));
  return out;
}

void write_pgm(std::ostream& out, const Raster& raster) {
  int maxval = 1;
  for (auto v : raster.pixels) maxval = std::max<int>(maxval, v);
  out << "P5\n" << raster.width << ' ' << raster.height << '\n' << maxval << '\n';
  out.write(reinterpret_cast<const char*>(raster.pixels.data()), static_cast<std::streamsize>(raster.pixels.size()));
}

std::vector<AttractorPoint> sample_attractor_points(const BaranskiSystem& system, std::size_t count, int depth,
                                                    std::uint64_t seed) {
  const auto letters = letters_of(system);
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, letters.size() - 1);
  std::vector<AttractorPoint> out;
  out.reserve(count);
  for (std::size_t n = 0; n < count; ++n) {
    AttractorPoint p;
    p.word.resize(static_cast<std::size_t>(std::max(depth, 0)));
    for (auto& letter : p.word) letter = static_cast<int>(pick(rng));
    // Apply the maps innermost first: S_{w1} o ... o S_{wd}(0, 0).
    for (auto it = p.word.rbegin(); it != p.word.rend(); ++it) {
      const Letter& l = letters[static_cast<std::size_t>(*it)];
      p.x = l.tx + l.a * p.x;
      p.y = l.ty + l.b * p.y;
    }
    out.push_back(std::move(p));
  }
  return out;
}

std::uint64_t count_point_cells(std::span<const AttractorPoint> points, double delta) {
  OccupancyGrid grid(delta);
  const std::uint64_t last = grid.side() - 1;
  for (const auto& p : points) {
    grid.mark_cell(std::min(snapped_floor(p.x / delta), last), std::min(snapped_floor(p.y / delta), last));
  }
  return grid.count();
}

}  // namespace carpetdim
