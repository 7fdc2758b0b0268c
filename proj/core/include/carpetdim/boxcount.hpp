#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <vector>

#include "carpetdim/system.hpp"

namespace carpetdim {

struct CylinderRect {
  std::vector<int> word;  // cell indices into BaranskiSystem::cells()
  double x0 = 0.0;
  double y0 = 0.0;
  double width = 1.0;
  double height = 1.0;
};

struct ExpandOptions {
  std::uint64_t max_rects = 200'000'000;
  int threads = 1;
};

// Called once per emitted rectangle; the word view is only valid during the call.
using RectSink = std::function<void(std::span<const int> word, double x0, double y0, double w, double h)>;

// Depth-first expansion, emitting each cylinder as soon as its longer side is
// <= delta. Single-threaded; returns the number of rectangles emitted.
// Throws InvalidArgument (delta outside (0,1]) and BudgetExceeded.
std::uint64_t expand_to_scale(const BaranskiSystem& system, double delta, const RectSink& sink,
                              const ExpandOptions& options = {});

std::vector<CylinderRect> collect_rects(const BaranskiSystem& system, double delta, const ExpandOptions& options = {});

// Number of delta-grid columns/rows, ceil(1/delta).
std::uint64_t grid_size(double delta);

// Half-open cells [u d,(u+1) d) x [v d,(v+1) d) met by the closed rectangle;
// coordinate 1 falls into the last cell.
struct CellRange {
  std::uint64_t col_lo, col_hi, row_lo, row_hi;  // inclusive
};
CellRange cells_met(double x0, double y0, double w, double h, double delta);

// Occupied-cell set: dense bitset up to 2^28 cells, hash set beyond.
class OccupancyGrid {
 public:
  explicit OccupancyGrid(double delta);
  ~OccupancyGrid();
  OccupancyGrid(OccupancyGrid&&) noexcept;
  OccupancyGrid& operator=(OccupancyGrid&&) noexcept;

  void mark(double x0, double y0, double w, double h);
  void mark_cell(std::uint64_t col, std::uint64_t row);
  void merge(const OccupancyGrid& other);
  std::uint64_t count() const;
  std::uint64_t side() const { return side_; }
  bool dense() const;

 private:
  struct Impl;
  std::uint64_t side_ = 0;
  double delta_ = 1.0;
  Impl* impl_ = nullptr;
};

std::uint64_t count_boxes(std::span<const CylinderRect> rects, double delta);

// Expands and counts without storing rectangles. With threads > 1 the
// top-level branches are split across workers and merged by union.
std::uint64_t count_boxes_at_scale(const BaranskiSystem& system, double delta, const ExpandOptions& options = {});

struct BoxCountSample {
  int q = 0;
  double delta = 1.0;
  std::uint64_t n_delta = 0;
};

struct BoxDimensionEstimate {
  double slope = 0.0;
  double intercept = 0.0;
  std::vector<BoxCountSample> samples;
  std::vector<double> residuals;  // per sample used in the final fit
  bool dropped_coarse = false;    // two coarsest samples excluded
};

inline constexpr double kResidualThreshold = 0.05;

// delta = base^{-q}, q = q_min..q_max, slope of log N against -log delta.
BoxDimensionEstimate estimate_box_dimension(const BaranskiSystem& system, int q_min, int q_max, double base,
                                            const ExpandOptions& options = {});

// Least-squares fit on given samples with the coarse-drop rule applied.
BoxDimensionEstimate fit_box_dimension(std::vector<BoxCountSample> samples);

void write_samples_csv(std::ostream& out, std::span<const BoxCountSample> samples);

struct Raster {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;  // row-major, row 0 at the top (y near 1)
};

// Pixel value = number of emitted rectangles whose interior overlaps the
// pixel, saturated at 255.
Raster render_image(const BaranskiSystem& system, double delta, int resolution, const ExpandOptions& options = {});

// Binary P5; maxval is the largest pixel value (at least 1).
void write_pgm(std::ostream& out, const Raster& raster);

struct AttractorPoint {
  double x = 0.0;
  double y = 0.0;
  std::vector<int> word;
};

// Points of the coding map on uniformly random cell sequences of the given length.
std::vector<AttractorPoint> sample_attractor_points(const BaranskiSystem& system, std::size_t count, int depth,
                                                    std::uint64_t seed);

// Cells of the delta-grid containing at least one point.
std::uint64_t count_point_cells(std::span<const AttractorPoint> points, double delta);

}  // namespace carpetdim
