#include <doctest.h>

#include <cmath>
#include <map>
#include <random>
#include <set>

#include "builders.hpp"
#include "carpetdim/approx.hpp"
#include "carpetdim/moran.hpp"

using namespace carpetdim;

namespace {

std::uint64_t factorial(std::uint64_t n) {
  std::uint64_t f = 1;
  for (std::uint64_t i = 2; i <= n; ++i) f *= i;
  return f;
}

// Exact multinomial by successive binomials in 128-bit arithmetic.
unsigned __int128 multinomial_exact(const std::vector<std::uint64_t>& parts) {
  unsigned __int128 result = 1;
  std::uint64_t placed = 0;
  for (auto c : parts) {
    for (std::uint64_t i = 1; i <= c; ++i) {
      result = result * (placed + i) / i;
    }
    placed += c;
  }
  return result;
}

// All strings with counts[i] copies of letter i, by recursion.
void arrangements(std::vector<std::uint64_t>& left, std::vector<int>& prefix, std::vector<std::vector<int>>& out) {
  bool any = false;
  for (std::size_t i = 0; i < left.size(); ++i) {
    if (left[i] == 0) continue;
    any = true;
    --left[i];
    prefix.push_back(static_cast<int>(i));
    arrangements(left, prefix, out);
    prefix.pop_back();
    ++left[i];
  }
  if (!any) out.push_back(prefix);
}

struct Enumerated {
  std::set<std::vector<int>> strings, xs, ys;
  std::map<std::vector<int>, int> x_fibre, y_fibre;
};

Enumerated enumerate(const BaranskiSystem& sys, const UniformApproximation& a) {
  std::vector<std::uint64_t> left = a.counts;
  std::vector<int> prefix;
  std::vector<std::vector<int>> all;
  arrangements(left, prefix, all);
  Enumerated e;
  for (const auto& s : all) {
    std::vector<int> x, y;
    for (int c : s) {
      x.push_back(sys.cells()[static_cast<std::size_t>(c)].col);
      y.push_back(sys.cells()[static_cast<std::size_t>(c)].row);
    }
    e.strings.insert(s);
    e.xs.insert(x);
    e.ys.insert(y);
    ++e.x_fibre[x];
    ++e.y_fibre[y];
  }
  return e;
}

ProbabilityWeights uniform_weights(const BaranskiSystem& sys) {
  return {std::vector<double>(sys.size(), 1.0 / static_cast<double>(sys.size()))};
}

bool pairwise_disjoint(const SscSelection& sel) {
  auto iv = sel.intervals;
  std::sort(iv.begin(), iv.end());
  for (std::size_t i = 1; i < iv.size(); ++i) {
    if (!(iv[i].first > iv[i - 1].second)) return false;
  }
  return true;
}

ExactIfs1D homogeneous(const std::string& ratio, const std::vector<std::string>& offsets) {
  ExactIfs1D f;
  for (const auto& o : offsets) {
    f.ratios.push_back(Rational::parse(ratio));
    f.offsets.push_back(Rational::parse(o));
  }
  return f;
}

constexpr double kDimH = 1.349681;
constexpr double kDimB = 1.369070;

}  // namespace

TEST_CASE("log factorial against exact factorials") {
  for (std::uint64_t n = 0; n <= 20; ++n) {
    const double exact = std::log(static_cast<double>(factorial(n)));
    CHECK(std::abs(log_factorial(n) - exact) <= 1e-12 * std::max(1.0, exact));
  }
}

TEST_CASE("Stirling bounds bracket log n!") {
  for (std::uint64_t n = 1; n <= 2000; n += (n < 50 ? 1 : 37)) {
    const StirlingBounds b = stirling_bounds(n);
    const double v = log_factorial(n);
    CHECK(b.lower <= v + 1e-9);
    CHECK(v <= b.upper + 1e-9);
  }
}

TEST_CASE("log multinomial against exact integers") {
  std::mt19937_64 rng(4);
  std::uniform_int_distribution<int> parts(1, 5), count(0, 6);
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<std::uint64_t> c(static_cast<std::size_t>(parts(rng)));
    std::uint64_t total = 0;
    for (auto& v : c) {
      v = static_cast<std::uint64_t>(count(rng));
      total += v;
    }
    if (total > 20) continue;
    const double exact = std::log(static_cast<double>(multinomial_exact(c)));
    CHECK(std::abs(log_multinomial(c) - exact) <= 1e-9 * std::max(1.0, exact));
  }
}

TEST_CASE("multiset permutations") {
  const std::vector<std::uint64_t> c{2, 1};
  const auto all = multiset_permutations(c);
  CHECK(all == std::vector<std::vector<int>>{{0, 0, 1}, {0, 1, 0}, {1, 0, 0}});
  const std::vector<std::uint64_t> big{5, 5, 5};
  CHECK_THROWS_AS(multiset_permutations(big, 100), CarpetError);
}

TEST_CASE("uniform approximation examples") {
  SUBCASE("two cells, k = 2") {
    const BaranskiSystem sys = testkit::bm(2, 3, {{1, 1}, {2, 2}});
    const UniformApproximation a = build_uniform_approx(sys, {{0.5, 0.5}}, 2);
    CHECK(a.theta == 2);
    CHECK(std::exp(a.log_card_gamma) == doctest::Approx(2.0));
  }
  SUBCASE("three cells, k = 3") {
    const BaranskiSystem sys = testkit::bm_three_cell();
    const UniformApproximation a = build_uniform_approx(sys, uniform_weights(sys), 3);
    CHECK(a.theta == 3);
    CHECK(std::exp(a.log_card_gamma) == doctest::Approx(6.0));
    CHECK(std::exp(a.log_m) == doctest::Approx(8.0));
    CHECK(std::exp(a.log_n) == doctest::Approx(27.0));
  }
  SUBCASE("bad input") {
    const BaranskiSystem sys = testkit::bm_three_cell();
    CHECK_THROWS_AS(build_uniform_approx(sys, uniform_weights(sys), 0), CarpetError);
    CHECK_THROWS_AS(build_uniform_approx(sys, {{0.5, 0.5, 0.5}}, 3), CarpetError);
  }
}

TEST_CASE("approximation invariants on random systems") {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 100; ++trial) {
    const BaranskiSystem sys = testkit::random_baranski(rng);
    std::exponential_distribution<double> e(1.0);
    ProbabilityWeights w{std::vector<double>(sys.size())};
    double sum = 0.0;
    for (auto& v : w.p) sum += (v = e(rng));
    for (auto& v : w.p) v /= sum;
    const int k = 1 + trial * 3;
    const UniformApproximation a = build_uniform_approx(sys, w, k);
    CHECK(a.theta >= static_cast<std::uint64_t>(k));
    CHECK(a.log_card_gamma_x <= a.log_card_gamma + 1e-12);
    CHECK(a.log_card_gamma_y <= a.log_card_gamma + 1e-12);
    double lm = 0.0, ln = 0.0;
    for (std::size_t c = 0; c < sys.size(); ++c) {
      lm += a.counts[c] * -std::log(sys.width(sys.cells()[c].col));
      ln += a.counts[c] * -std::log(sys.height(sys.cells()[c].row));
    }
    CHECK(a.log_m == doctest::Approx(lm).epsilon(1e-12));
    CHECK(a.log_n == doctest::Approx(ln).epsilon(1e-12));
  }
}

TEST_CASE("enumeration equals the multinomial cardinals and fibres are uniform") {
  std::mt19937_64 rng(99);
  int checked = 0;
  while (checked < 40) {
    const BaranskiSystem sys = testkit::random_bm(rng);
    if (sys.size() > 4) continue;
    std::exponential_distribution<double> e(1.0);
    ProbabilityWeights w{std::vector<double>(sys.size())};
    double sum = 0.0;
    for (auto& v : w.p) sum += (v = e(rng));
    for (auto& v : w.p) v /= sum;
    for (int k = 1; k <= 4; ++k) {
      const UniformApproximation a = build_uniform_approx(sys, w, k);
      if (a.theta > 9) continue;
      const Enumerated en = enumerate(sys, a);
      CHECK(static_cast<double>(en.strings.size()) == doctest::Approx(std::exp(a.log_card_gamma)).epsilon(1e-9));
      CHECK(static_cast<double>(en.xs.size()) == doctest::Approx(std::exp(a.log_card_gamma_x)).epsilon(1e-9));
      CHECK(static_cast<double>(en.ys.size()) == doctest::Approx(std::exp(a.log_card_gamma_y)).epsilon(1e-9));
      std::set<int> xf, yf;
      for (const auto& [x, n] : en.x_fibre) xf.insert(n);
      for (const auto& [y, n] : en.y_fibre) yf.insert(n);
      CHECK(xf.size() == 1);
      CHECK(yf.size() == 1);
    }
    ++checked;
  }
}

TEST_CASE("Hausdorff-flavour convergents") {
  const BaranskiSystem sys = testkit::bm_three_cell();
  const ProbabilityWeights w = bm_optimal_weights(sys);
  const double s_small = build_uniform_approx(sys, w, 100).s_k_value;
  const double s_big = build_uniform_approx(sys, w, 100000).s_k_value;
  CHECK(std::abs(s_big - kDimH) <= 0.02);
  CHECK(std::abs(s_big - kDimH) < std::abs(s_small - kDimH));

  const BaranskiSystem single = testkit::bm(2, 3, {{2, 3}});
  for (int k : {1, 7, 1000}) CHECK(build_uniform_approx(single, {{1.0}}, k).s_k_value == 0.0);

  // k = 2 from enumerated strings and projections.
  const UniformApproximation a = build_uniform_approx(sys, w, 2);
  const Enumerated en = enumerate(sys, a);
  double lm = 0.0, ln = 0.0;
  for (std::size_t c = 0; c < sys.size(); ++c) {
    lm += a.counts[c] * std::log(2.0);
    ln += a.counts[c] * std::log(3.0);
  }
  const double brute = std::log(static_cast<double>(en.xs.size())) / lm +
                       (std::log(static_cast<double>(en.strings.size())) - std::log(static_cast<double>(en.xs.size()))) / ln;
  CHECK(s_k_hausdorff(a) == doctest::Approx(brute).epsilon(1e-12));
}

TEST_CASE("box-flavour convergents") {
  const BaranskiSystem sys = testkit::bm_three_cell();
  const double s_small = s_k_box(sys, 100);
  const double s_big = s_k_box(sys, 100000);
  CHECK(std::abs(s_big - kDimB) <= 0.02);
  CHECK(std::abs(s_big - kDimB) < std::abs(s_small - kDimB));
  CHECK(std::abs(s_k_box(testkit::full_grid(2, 3), 100000) - 2.0) <= 0.02);

  // Box weights for this system are uniform; k = 2 by enumeration.
  const ProbabilityWeights bw = box_weights(sys);
  for (double v : bw.p) CHECK(v == doctest::Approx(1.0 / 3.0).epsilon(1e-9));
  const UniformApproximation a = build_uniform_approx(sys, bw, 2);
  const Enumerated en = enumerate(sys, a);
  const MoranExponents e = box_dimension_analytic(sys);
  const double brute = e.t_a + (std::log(static_cast<double>(en.strings.size())) - e.t_a * a.log_m) / a.log_n;
  CHECK(s_k_box(sys, 2) == doctest::Approx(brute).epsilon(1e-12));
}

TEST_CASE("greedy SSC extraction: dyadic") {
  const ExactIfs1D f = homogeneous("1/2", {"0", "1/2"});
  const SscSelection sel = extract_ssc_subsystem(f, 3);
  CHECK(sel.candidates == 8);
  CHECK(sel.words.size() == 4);
  CHECK(pairwise_disjoint(sel));
  CHECK(sel.alpha == doctest::Approx(1.0));
  CHECK(sel.bound == doctest::Approx(std::pow(2.0, 3 * (1 - 1e-3)) / 3.0));
  CHECK(sel.bound_met);
  // Alternate intervals [0,1/8], [1/4,3/8], ...
  CHECK(sel.intervals[1].first == Rational(1, 4));
}

TEST_CASE("greedy SSC extraction: separated Cantor maps keep everything") {
  const SscSelection sel = extract_ssc_subsystem(homogeneous("1/3", {"0", "2/3"}), 2);
  CHECK(sel.words.size() == 4);
  CHECK(pairwise_disjoint(sel));
  CHECK(sel.bound_met);
}

TEST_CASE("greedy SSC extraction: overlapping maps") {
  const SscSelection sel = extract_ssc_subsystem(homogeneous("1/2", {"0", "1/4"}), 4);
  CHECK(sel.candidates == 16);
  CHECK(pairwise_disjoint(sel));
  CHECK(sel.alpha == doctest::Approx(1.0));
  CHECK(static_cast<double>(sel.words.size()) >= sel.bound);
  CHECK(sel.bound_met);
}

TEST_CASE("greedy selection is maximal against brute force") {
  // Interval scheduling optimum on the 16 intervals, by subset search.
  const ExactIfs1D f = homogeneous("1/2", {"0", "1/4"});
  const SscSelection sel = extract_ssc_subsystem(f, 4);
  std::vector<std::pair<Rational, Rational>> all;
  std::vector<int> w(4, 0);
  for (int code = 0; code < 16; ++code) {
    for (int l = 0; l < 4; ++l) w[static_cast<std::size_t>(l)] = (code >> (3 - l)) & 1;
    const AffineWord1D m = compose_word(f, w);
    all.emplace_back(m.offset, m.offset + m.ratio);
  }
  std::size_t best = 0;
  for (int mask = 0; mask < (1 << 16); ++mask) {
    std::vector<std::pair<Rational, Rational>> chosen;
    for (int b = 0; b < 16; ++b)
      if (mask >> b & 1) chosen.push_back(all[static_cast<std::size_t>(b)]);
    std::sort(chosen.begin(), chosen.end());
    bool ok = true;
    for (std::size_t i = 1; i < chosen.size() && ok; ++i) ok = chosen[i].first > chosen[i - 1].second;
    if (ok) best = std::max(best, chosen.size());
  }
  CHECK(sel.words.size() == best);
}

TEST_CASE("SSC extraction errors and smallest length") {
  ExactIfs1D f = homogeneous("1/2", {"0", "1/2"});
  f.ratios[1] = Rational(1, 3);
  try {
    extract_ssc_subsystem(f, 2);
    FAIL("expected NonHomogeneous");
  } catch (const CarpetError& e) {
    CHECK(e.code() == ErrorCode::NonHomogeneous);
  }
  CHECK_THROWS_AS(extract_ssc_subsystem(homogeneous("1/2", {"0", "1/2"}), 0), CarpetError);

  const auto ell = smallest_ell_meeting_bound(homogeneous("1/2", {"0", "1/2"}), 8);
  REQUIRE(ell.has_value());
  CHECK(extract_ssc_subsystem(homogeneous("1/2", {"0", "1/2"}), *ell).bound_met);
  for (int l = 1; l < *ell; ++l) CHECK_FALSE(extract_ssc_subsystem(homogeneous("1/2", {"0", "1/2"}), l).bound_met);
}

TEST_CASE("row lift on the full 2x2 pattern") {
  const BaranskiSystem sys = testkit::bm(2, 2, {{1, 1}, {1, 2}, {2, 1}, {2, 2}});
  const UniformApproximation a = build_uniform_approx(sys, uniform_weights(sys), 1);
  const RowLift lift = lift_row_ssc(sys, a, 2);
  CHECK(lift.card_gamma == 24);
  CHECK(lift.row_letters.size() == 6);
  CHECK(lift.j_factor == 4);
  CHECK(static_cast<double>(lift.j_factor) ==
        doctest::Approx(std::exp(a.log_card_gamma - a.log_card_gamma_y)));
  CHECK(lift.uniform_fibres);
  CHECK(lift.enumerated);
  CHECK(lift.lifted_count == lift.selection.words.size() * 16);
  CHECK(lift.identity_holds);
  CHECK(pairwise_disjoint(lift.selection));
}

TEST_CASE("row lift identity on enumerated small cases") {
  std::mt19937_64 rng(64);
  int checked = 0;
  while (checked < 12) {
    const BaranskiSystem sys = testkit::random_bm(rng);
    if (sys.size() > 4) continue;
    const ProbabilityWeights w = uniform_weights(sys);
    for (int k = 1; k <= 2; ++k) {
      const UniformApproximation a = build_uniform_approx(sys, w, k);
      for (int ell = 1; ell <= 3; ++ell) {
        SscOptions o;
        o.max_words = 2'000'000;
        const RowLift lift = lift_row_ssc(sys, a, ell, o);
        if (!lift.enumerated) continue;
        CHECK(lift.uniform_fibres);
        std::uint64_t jl = 1;
        for (int l = 0; l < ell; ++l) jl *= lift.j_factor;
        CHECK(lift.lifted_count == lift.selection.words.size() * jl);
        CHECK(lift.identity_holds);
      }
    }
    ++checked;
  }
}

TEST_CASE("row lift bound on the three-cell example") {
  const BaranskiSystem sys = testkit::bm_three_cell();
  const UniformApproximation a = build_uniform_approx(sys, bm_optimal_weights(sys), 2);
  CHECK(a.counts == std::vector<std::uint64_t>{1, 1, 1});
  const RowLift lift = lift_row_ssc(sys, a, 3);
  CHECK(lift.card_gamma == 6);
  CHECK(lift.row_letters.size() == 3);
  CHECK(lift.j_factor == 2);
  CHECK(lift.selection.words.size() == 27);
  CHECK(lift.selection.bound_met);
  CHECK(lift.lifted_count == 216);
  CHECK(lift.identity_holds);
  CHECK(lift.bound_met);
  CHECK(std::log(216.0) >= lift.log_bound);
}
