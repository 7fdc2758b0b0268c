#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "builders.hpp"
#include "carpetdim/boxcount.hpp"
#include "carpetdim/moran.hpp"

using namespace carpetdim;

namespace {

struct ExactRect {
  Rational x0, y0, w, h;
};

// Expansion of every word of the given length in exact arithmetic.
std::vector<ExactRect> exact_level(const BaranskiSystem& sys, int depth) {
  std::vector<ExactRect> level{{Rational(0), Rational(0), Rational(1), Rational(1)}};
  for (int d = 0; d < depth; ++d) {
    std::vector<ExactRect> next;
    for (const auto& r : level) {
      for (const Cell& c : sys.cells()) {
        const Rational a = *sys.width_params()[static_cast<std::size_t>(c.col)].exact;
        const Rational b = *sys.height_params()[static_cast<std::size_t>(c.row)].exact;
        next.push_back({r.x0 + r.w * *sys.column_translation(c.col).exact,
                        r.y0 + r.h * *sys.row_translation(c.row).exact, r.w * a, r.h * b});
      }
    }
    level = std::move(next);
  }
  return level;
}

// Closed rectangle against half-open pixels of side 1/res, marking pixels.
std::set<std::pair<int, int>> raster_oracle(const std::vector<ExactRect>& rects, int res) {
  std::set<std::pair<int, int>> hit;
  const Rational px(1, res);
  for (const auto& r : rects) {
    for (int u = 0; u < res; ++u) {
      const Rational lo = px * Rational(u), hi = px * Rational(u + 1);
      if (!(r.x0 < hi && r.x0 + r.w >= lo)) continue;
      for (int v = 0; v < res; ++v) {
        const Rational blo = px * Rational(v), bhi = px * Rational(v + 1);
        if (r.y0 < bhi && r.y0 + r.h >= blo) hit.insert({u, v});
      }
    }
  }
  return hit;
}

}  // namespace

TEST_CASE("expansion at delta = 1 is the unit square") {
  const auto rects = collect_rects(testkit::bm_three_cell(), 1.0);
  REQUIRE(rects.size() == 1);
  CHECK(rects[0].word.empty());
  CHECK(rects[0].width == 1.0);
  CHECK(rects[0].height == 1.0);
}

TEST_CASE("one expansion step for the three-cell example at delta = 1/2") {
  const auto rects = collect_rects(testkit::bm_three_cell(), 0.5);
  REQUIRE(rects.size() == 3);
  for (const auto& r : rects) {
    CHECK(r.width == doctest::Approx(0.5));
    CHECK(r.height == doctest::Approx(1.0 / 3.0));
    CHECK(r.word.size() == 1);
  }
  CHECK(rects[1].x0 == doctest::Approx(0.5));
  CHECK(rects[2].y0 == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("emitted rectangles respect the stopping rule and the tree bound") {
  const BaranskiSystem sys = testkit::bm_three_cell();
  for (double delta : {0.3, 0.1, 0.01, 0.002}) {
    const auto rects = collect_rects(sys, delta);
    const int depth = static_cast<int>(std::ceil(std::log(delta) / std::log(0.5)));
    CHECK(static_cast<double>(rects.size()) <= std::pow(3.0, depth));
    for (const auto& r : rects) {
      CHECK(std::max(r.width, r.height) <= delta * (1 + 1e-12));
      CHECK(r.x0 >= 0.0);
      CHECK(r.x0 + r.width <= 1.0 + 1e-12);
      const CellRange c = cells_met(r.x0, r.y0, r.width, r.height, delta);
      CHECK(c.col_hi - c.col_lo <= 1);
      CHECK(c.row_hi - c.row_lo <= 1);
    }
  }
}

TEST_CASE("expansion errors") {
  const BaranskiSystem sys = testkit::bm_three_cell();
  CHECK_THROWS_AS(collect_rects(sys, 0.0), CarpetError);
  CHECK_THROWS_AS(collect_rects(sys, 1.5), CarpetError);
  ExpandOptions tight;
  tight.max_rects = 10;
  try {
    collect_rects(sys, 0.01, tight);
    FAIL("expected BudgetExceeded");
  } catch (const CarpetError& e) {
    CHECK(e.code() == ErrorCode::BudgetExceeded);
  }
}

TEST_CASE("unit square at delta = 1/2 meets all four cells") {
  const std::vector<CylinderRect> one{{{}, 0.0, 0.0, 1.0, 1.0}};
  CHECK(count_boxes(one, 0.5) == 4);
  CHECK(count_boxes(one, 1.0) == 1);
}

TEST_CASE("Sierpinski carpet count matches the exact rasterizer") {
  const BaranskiSystem sys = testkit::sierpinski_carpet();
  const double delta = 1.0 / 9.0;
  const auto rects = collect_rects(sys, delta);
  CHECK(rects.size() == 64);
  const auto pixels = raster_oracle(exact_level(sys, 2), 81);
  std::set<std::pair<int, int>> cells;
  for (auto [u, v] : pixels) cells.insert({u / 9, v / 9});
  CHECK(count_boxes(rects, delta) == cells.size());
}

TEST_CASE("counts against the exact rasterizer on other systems") {
  for (const BaranskiSystem& sys : {testkit::bm_three_cell(), testkit::full_grid(2, 3),
                                    testkit::bm(3, 4, {{1, 1}, {2, 3}, {3, 4}, {3, 1}})}) {
    for (int depth = 1; depth <= 3; ++depth) {
      const auto exact = exact_level(sys, depth);
      std::vector<CylinderRect> rects;
      for (const auto& r : exact) rects.push_back({{}, r.x0.to_double(), r.y0.to_double(), r.w.to_double(), r.h.to_double()});
      for (int res : {2, 3, 4, 6, 8, 9, 12}) {
        CHECK(count_boxes(rects, 1.0 / res) == raster_oracle(exact, res).size());
      }
    }
  }
}

TEST_CASE("duplicate rectangles do not change the count") {
  auto rects = collect_rects(testkit::bm_three_cell(), 0.05);
  const auto n = count_boxes(rects, 0.05);
  const auto copy = rects;
  rects.insert(rects.end(), copy.begin(), copy.end());
  CHECK(count_boxes(rects, 0.05) == n);
}

TEST_CASE("streaming count equals collected count, and threads do not matter") {
  for (const BaranskiSystem& sys : {testkit::bm_three_cell(), testkit::sierpinski_carpet()}) {
    for (int q = 1; q <= 6; ++q) {
      const double delta = std::pow(3.0, -q);
      const auto rects = collect_rects(sys, delta);
      const std::uint64_t single = count_boxes_at_scale(sys, delta);
      CHECK(single == count_boxes(rects, delta));
      for (int threads : {2, 3, 8}) {
        ExpandOptions o;
        o.threads = threads;
        CHECK(count_boxes_at_scale(sys, delta, o) == single);
      }
    }
  }
}

TEST_CASE("counts are non-increasing in delta") {
  const BaranskiSystem sys = testkit::bm_three_cell();
  std::uint64_t prev = 0;
  for (int q = 8; q >= 0; --q) {
    const std::uint64_t n = count_boxes_at_scale(sys, std::pow(3.0, -q));
    if (q < 8) CHECK(n <= prev);
    const std::uint64_t g = grid_size(std::pow(3.0, -q));
    CHECK(n >= 1);
    CHECK(n <= g * g);
    prev = n;
  }
}

TEST_CASE("random coding-map points lie in emitted rectangles") {
  const BaranskiSystem sys = testkit::bm_three_cell();
  const double delta = 1.0 / 50.0;
  const auto rects = collect_rects(sys, delta);
  std::set<std::vector<int>> words;
  for (const auto& r : rects) words.insert(r.word);
  const auto points = sample_attractor_points(sys, 10000, 40, 123);
  for (const auto& p : points) {
    // The emitted prefix of the sequence must be one of the rectangles.
    bool found = false;
    for (std::size_t len = 0; len <= p.word.size() && !found; ++len) {
      const std::vector<int> prefix(p.word.begin(), p.word.begin() + static_cast<std::ptrdiff_t>(len));
      if (!words.count(prefix)) continue;
      found = true;
      const auto it = std::find_if(rects.begin(), rects.end(), [&](const CylinderRect& r) { return r.word == prefix; });
      CHECK(p.x >= it->x0 - 1e-12);
      CHECK(p.x <= it->x0 + it->width + 1e-12);
      CHECK(p.y >= it->y0 - 1e-12);
      CHECK(p.y <= it->y0 + it->height + 1e-12);
    }
    CHECK(found);
  }
}

TEST_CASE("rectangle count exceeds point count by at most a factor of 9") {
  for (const BaranskiSystem& sys : {testkit::bm_three_cell(), testkit::sierpinski_carpet(), testkit::full_grid(2, 3)}) {
    const auto points = sample_attractor_points(sys, 200000, 30, 5);
    for (int q = 1; q <= 4; ++q) {
      const double delta = std::pow(3.0, -q);
      const auto from_rects = count_boxes_at_scale(sys, delta);
      const auto from_points = count_point_cells(points, delta);
      CHECK(from_points <= from_rects);
      CHECK(from_rects <= 9 * from_points);
    }
  }
}

TEST_CASE("sparse occupancy beyond the dense limit") {
  const double delta = 1.0 / 20000.0;
  OccupancyGrid grid(delta);
  CHECK_FALSE(grid.dense());
  grid.mark(0.0, 0.0, delta / 2, delta / 2);
  grid.mark(0.0, 0.0, delta / 2, delta / 2);
  grid.mark(0.5, 0.5, delta, delta);  // touches the next cell on both axes
  grid.mark(1.0 - delta / 4, 1.0 - delta / 4, delta / 4, delta / 4);
  CHECK(grid.count() == 1 + 4 + 1);
  OccupancyGrid dense(1.0 / 100.0);
  CHECK(dense.dense());
}

TEST_CASE("slope recovers simple dimensions") {
  const BoxDimensionEstimate full = estimate_box_dimension(testkit::full_grid(2, 3), 1, 6, 3.0);
  CHECK(std::abs(full.slope - 2.0) <= 0.02);
  const BoxDimensionEstimate carpet = estimate_box_dimension(testkit::sierpinski_carpet(), 2, 6, 3.0);
  CHECK(std::abs(carpet.slope - std::log(8.0) / std::log(3.0)) <= 0.05);
  CHECK(carpet.samples.size() == 5);
  CHECK(carpet.residuals.size() == (carpet.dropped_coarse ? 3 : 5));
  CHECK_THROWS_AS(estimate_box_dimension(testkit::full_grid(2, 3), 3, 3, 3.0), CarpetError);
  CHECK_THROWS_AS(estimate_box_dimension(testkit::full_grid(2, 3), 1, 3, 1.0), CarpetError);
}

TEST_CASE("regression drops the two coarsest samples on a bad transient") {
  std::vector<BoxCountSample> s;
  for (int q = 1; q <= 6; ++q) {
    // delta = 4^-q, N = 8^q past the transient: slope exactly 3/2
    const double delta = std::pow(4.0, -q);
    const std::uint64_t n = q <= 2 ? 1 : std::uint64_t{1} << (3 * q);
    s.push_back({q, delta, n});
  }
  const BoxDimensionEstimate est = fit_box_dimension(s);
  CHECK(est.dropped_coarse);
  CHECK(est.slope == doctest::Approx(1.5).epsilon(1e-12));
  CHECK(est.residuals.size() == 4);

  std::vector<BoxCountSample> clean;
  for (int q = 1; q <= 5; ++q) clean.push_back({q, std::pow(2.0, -q), std::uint64_t{1} << (2 * q)});
  const BoxDimensionEstimate c = fit_box_dimension(clean);
  CHECK_FALSE(c.dropped_coarse);
  CHECK(c.slope == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("samples CSV layout") {
  std::ostringstream os;
  const std::vector<BoxCountSample> s{{2, 0.25, 16}};
  write_samples_csv(os, s);
  const std::string text = os.str();
  CHECK(text.rfind("q,delta,N_delta,log_N,minus_log_delta\n", 0) == 0);
  CHECK(text.find("2,0.25,16,") != std::string::npos);
}

TEST_CASE("render: single pixel, determinism, PGM header") {
  const BaranskiSystem sys = testkit::bm_three_cell();
  const Raster one = render_image(sys, 0.1, 1);
  REQUIRE(one.pixels.size() == 1);
  CHECK(one.pixels[0] > 0);

  std::ostringstream a, b;
  write_pgm(a, render_image(sys, 1.0 / 64, 64));
  write_pgm(b, render_image(sys, 1.0 / 64, 64));
  CHECK(a.str() == b.str());
  CHECK(a.str().rfind("P5\n64 64\n", 0) == 0);
  CHECK_THROWS_AS(render_image(sys, 0.1, 0), CarpetError);
}

TEST_CASE("render counts overlapping rectangles per pixel") {
  SystemSpec s = testkit::bm_three_cell().to_spec();
  s.column_translations[1] = testkit::q("0");
  const BaranskiSystem merged = validate(s);
  const int res = 12;
  const Raster img = render_image(merged, 0.25, res);
  const auto exact = exact_level(merged, 2);
  for (int row = 0; row < res; ++row) {
    for (int col = 0; col < res; ++col) {
      // Pixel interior (col/res, (col+1)/res) x (y_lo, y_hi), row 0 on top.
      const Rational x_lo(col, res), x_hi(col + 1, res);
      const Rational y_lo(res - 1 - row, res), y_hi(res - row, res);
      int expected = 0;
      for (const auto& r : exact) {
        if (r.x0 < x_hi && r.x0 + r.w > x_lo && r.y0 < y_hi && r.y0 + r.h > y_lo) ++expected;
      }
      CHECK(img.pixels[static_cast<std::size_t>(row * res + col)] == expected);
    }
  }
  // Bottom-left pixel sits under the doubled column.
  CHECK(img.pixels[static_cast<std::size_t>((res - 1) * res)] >= 2);
  // 36 pixels align with every 1/4 x 1/9 rectangle edge, so no pixel straddles two.
  const Raster plain = render_image(testkit::bm_three_cell(), 0.25, 36);
  CHECK(*std::max_element(plain.pixels.begin(), plain.pixels.end()) == 1);
}
