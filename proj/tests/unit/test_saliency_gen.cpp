#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "gazeforge/saliency_gen.hpp"
#include "oracles.hpp"

using namespace gazeforge;

namespace {

void paint(LabelGrid& g, int instrument, Part part, int r0, int c0, int rows, int cols) {
  g.block(r0, c0, rows, cols).setConstant(encode_part(instrument, part));
}

LabelMask parts(const LabelGrid& g) { return LabelMask(g, 8 * kPartSlots); }

PartDynamics dyn(int id, double mu, double d) {
  PartDynamics p;
  p.instrument_id = id;
  p.deformation = mu;
  p.displacement = d;
  return p;
}

}  // namespace

TEST_CASE("part label encoding") {
  CHECK(encode_part(3, Part::clasper) == 15);
  CHECK(instrument_of(15) == 3);
  CHECK(part_of(15) == Part::clasper);
  CHECK(is_attended(encode_part(1, Part::wrist)));
  CHECK_FALSE(is_attended(encode_part(1, Part::shaft)));
  CHECK_FALSE(is_attended(0));
}

TEST_CASE("compose_instrument_parts merges part and type masks") {
  LabelGrid p(1, 4), t(1, 4);
  p << 1, 2, 3, 2;
  t << 2, 2, 5, 0;
  const auto m = compose_instrument_parts(LabelMask(p), LabelMask(t));
  CHECK(m(0, 0) == encode_part(2, Part::shaft));
  CHECK(m(0, 1) == encode_part(2, Part::wrist));
  CHECK(m(0, 2) == encode_part(5, Part::clasper));
  CHECK(m(0, 3) == 0);
  CHECK_THROWS_AS(compose_instrument_parts(LabelMask(p), LabelMask(LabelGrid::Zero(2, 2))), Error);
}

TEST_CASE("part_dynamics") {
  SUBCASE("identical frames") {
    LabelGrid g = LabelGrid::Zero(20, 20);
    paint(g, 1, Part::wrist, 0, 0, 10, 10);
    const auto r = part_dynamics(parts(g), parts(g), {1});
    REQUIRE(r.dynamics.size() == 1);
    CHECK(r.dynamics[0].area_t == 100);
    CHECK(r.dynamics[0].deformation == 1.0);
    CHECK(r.dynamics[0].displacement == 0.0);
  }

  SUBCASE("growth 100 -> 200 with a 3-4-5 centroid shift") {
    LabelGrid prev = LabelGrid::Zero(40, 40), now = LabelGrid::Zero(40, 40);
    paint(prev, 1, Part::wrist, 10, 10, 10, 10);  // centroid (14.5, 14.5)
    paint(now, 1, Part::wrist, 8, 14, 20, 10);    // centroid (17.5, 18.5)
    const auto r = part_dynamics(parts(now), parts(prev), {1});
    REQUIRE(r.dynamics.size() == 1);
    CHECK(r.dynamics[0].deformation == doctest::Approx(2.0));
    CHECK(r.dynamics[0].displacement == doctest::Approx(5.0));
  }

  SUBCASE("area is measured over wrist and clasper, shaft ignored") {
    LabelGrid g = LabelGrid::Zero(10, 10), h = LabelGrid::Zero(10, 10);
    paint(g, 2, Part::shaft, 0, 0, 5, 5);
    paint(g, 2, Part::wrist, 6, 0, 2, 2);
    paint(g, 2, Part::clasper, 8, 0, 2, 2);
    paint(h, 2, Part::wrist, 6, 0, 2, 2);
    const auto r = part_dynamics(parts(g), parts(h), {2});
    REQUIRE(r.dynamics.size() == 1);
    CHECK(r.dynamics[0].area_t == 8);
    CHECK(r.dynamics[0].area_prev == 4);
    CHECK(r.dynamics[0].deformation == 2.0);
  }

  SUBCASE("instrument present only at t is omitted and reported") {
    LabelGrid now = LabelGrid::Zero(10, 10), prev = LabelGrid::Zero(10, 10);
    paint(now, 1, Part::wrist, 0, 0, 2, 2);
    paint(prev, 1, Part::wrist, 0, 1, 2, 2);
    paint(now, 3, Part::clasper, 5, 5, 2, 2);
    const auto r = part_dynamics(parts(now), parts(prev), {1, 3, 4});
    REQUIRE(r.dynamics.size() == 1);
    CHECK(r.dynamics[0].instrument_id == 1);
    CHECK(r.omitted == std::vector<int>{3});
  }

  SUBCASE("dimension mismatch") {
    CHECK_THROWS_AS(part_dynamics(LabelMask::zeros(3, 3), LabelMask::zeros(3, 4), {}), Error);
  }
}

TEST_CASE("instrument_weights worked examples") {
  const double w_a = 0.5 + 0.5 * std::log(2.0);  // 0.846574
  const double w_b = 1.0 + 0.5 * std::log(4.0);  // 1.693147

  SUBCASE("two instruments") {
    const auto w = instrument_weights({dyn(1, 1, 5), dyn(2, 2, 10)});
    CHECK(w.at(1) == doctest::Approx(w_a).epsilon(1e-12));
    CHECK(w.at(2) == doctest::Approx(w_b).epsilon(1e-12));
    CHECK(std::abs(w.at(1) - 0.8466) < 1e-4);
    CHECK(std::abs(w.at(2) - 1.6931) < 1e-4);
  }

  SUBCASE("singleton collapses both ratios") {
    const auto w = instrument_weights({dyn(4, 1.7, 3.2)});
    CHECK(w.at(4) == doctest::Approx(w_a).epsilon(1e-12));
  }

  SUBCASE("all stationary: displacement term is 0.5 ln 2 for everyone") {
    const auto w = instrument_weights({dyn(1, 1.5, 0), dyn(2, 3.0, 0), dyn(3, 1.0, 0)});
    CHECK(w.at(3) == doctest::Approx(w_a));
    CHECK(w.at(1) == doctest::Approx(0.5 * 1.5 + 0.5 * std::log(2.0)));
    CHECK(w.at(2) > w.at(1));
    CHECK(w.at(1) > w.at(3));
  }

  SUBCASE("one stationary instrument among moving ones stays finite") {
    const auto w = instrument_weights({dyn(1, 1, 0), dyn(2, 1, 4)});
    CHECK(std::isfinite(w.at(2)));
    CHECK(w.at(2) == doctest::Approx(0.5 + 0.5 * std::log(8.0 / 1e-6)));
  }

  SUBCASE("errors") {
    CHECK_THROWS_AS(instrument_weights({}), Error);
    CHECK_THROWS_AS(instrument_weights({dyn(1, 1, 1)}, {-0.1, 0.5, 1e-6}), Error);
  }
}

TEST_CASE("weights are invariant under uniform scaling of the masks") {
  std::mt19937 rng(5);
  std::uniform_int_distribution<int> pos(0, 20), size(2, 8);
  for (int trial = 0; trial < 20; ++trial) {
    LabelGrid now = LabelGrid::Zero(32, 32), prev = LabelGrid::Zero(32, 32);
    for (int id = 1; id <= 3; ++id) {
      paint(now, id, Part::wrist, pos(rng), pos(rng), size(rng), size(rng));
      paint(prev, id, Part::clasper, pos(rng), pos(rng), size(rng), size(rng));
    }
    // Nearest-neighbour 2x upscale: areas x4, displacements x2.
    auto up = [](const LabelGrid& g) {
      LabelGrid u(g.rows() * 2, g.cols() * 2);
      for (Eigen::Index r = 0; r < u.rows(); ++r)
        for (Eigen::Index c = 0; c < u.cols(); ++c) u(r, c) = g(r / 2, c / 2);
      return u;
    };
    const auto ids = attended_instruments(parts(now));
    const auto d1 = part_dynamics(parts(now), parts(prev), ids);
    const auto d2 = part_dynamics(parts(up(now)), parts(up(prev)), ids);
    if (d1.dynamics.empty()) continue;
    const auto w1 = instrument_weights(d1.dynamics);
    const auto w2 = instrument_weights(d2.dynamics);
    for (const auto& [id, w] : w1) CHECK(w2.at(id) == doctest::Approx(w).epsilon(1e-9));
  }
}

TEST_CASE("argmax instrument is equivariant under relabeling") {
  std::mt19937 rng(9);
  std::uniform_real_distribution<double> mu(1, 3), d(0, 10);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<PartDynamics> a;
    std::vector<int> ids{1, 2, 3, 4};
    for (int id : ids) a.push_back(dyn(id, mu(rng), d(rng)));
    std::vector<int> perm = ids;
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<PartDynamics> b = a;
    for (std::size_t i = 0; i < b.size(); ++i) b[i].instrument_id = perm[i] + 10;
    auto argmax = [](const std::map<int, double>& w) {
      return std::max_element(w.begin(), w.end(), [](auto& x, auto& y) { return x.second < y.second; })->first;
    };
    const int best_a = argmax(instrument_weights(a));
    const int best_b = argmax(instrument_weights(b));
    CHECK(best_b == perm[static_cast<std::size_t>(best_a - 1)] + 10);
  }
}

TEST_CASE("place_fixations") {
  SUBCASE("one wrist blob and one clasper blob") {
    LabelGrid g = LabelGrid::Zero(20, 20);
    paint(g, 1, Part::wrist, 2, 2, 3, 3);
    paint(g, 1, Part::clasper, 10, 10, 3, 5);
    const auto fix = place_fixations(parts(g), {{1, 1.25}});
    REQUIRE(fix.size() == 2);
    CHECK(fix[0].part == Part::wrist);
    CHECK(fix[0].point == Pixel{3, 3});
    CHECK(fix[1].part == Part::clasper);
    CHECK(fix[1].point == Pixel{11, 12});
    for (const auto& f : fix) CHECK(f.weight == 1.25);
  }

  SUBCASE("each clasper jaw gets its own fixation") {
    LabelGrid g = LabelGrid::Zero(20, 20);
    paint(g, 1, Part::wrist, 0, 0, 2, 2);
    paint(g, 1, Part::clasper, 5, 0, 2, 2);
    paint(g, 1, Part::clasper, 5, 6, 2, 2);
    CHECK(place_fixations(parts(g), {{1, 1.0}}).size() == 3);
  }

  SUBCASE("centroid in a hole snaps to the nearest wrist pixel") {
    LabelGrid g = LabelGrid::Zero(10, 10);
    paint(g, 1, Part::wrist, 2, 2, 5, 5);
    g.block(3, 3, 3, 3).setZero();  // ring; centroid (4, 4) falls in the hole
    const auto m = parts(g);
    const auto fix = place_fixations(m, {{1, 1.0}});
    REQUIRE(fix.size() == 1);
    CHECK(fix[0].point == Pixel{2, 4});  // distance 2, first in row-major order among the four
    CHECK(m.at(fix[0].point) == encode_part(1, Part::wrist));
  }

  SUBCASE("weights are attributed per instrument") {
    LabelGrid g = LabelGrid::Zero(20, 20);
    paint(g, 1, Part::wrist, 0, 0, 2, 2);
    paint(g, 2, Part::clasper, 10, 10, 2, 2);
    const auto fix = place_fixations(parts(g), {{1, 1.7}, {2, 0.85}});
    REQUIRE(fix.size() == 2);
    for (const auto& f : fix) CHECK(f.weight == (f.instrument_id == 1 ? 1.7 : 0.85));
  }

  SUBCASE("extra points stay inside the part and are distinct") {
    LabelGrid g = LabelGrid::Zero(30, 30);
    paint(g, 1, Part::wrist, 4, 4, 9, 12);
    const auto m = parts(g);
    const auto fix = place_fixations(m, {{1, 1.0}}, 5);
    REQUIRE(fix.size() == 5);
    std::set<Pixel> unique;
    for (const auto& f : fix) {
      CHECK(m.at(f.point) == encode_part(1, Part::wrist));
      unique.insert(f.point);
    }
    CHECK(unique.size() == 5);
  }

  SUBCASE("weighted instrument without attended pixels") {
    LabelGrid g = LabelGrid::Zero(10, 10);
    paint(g, 1, Part::shaft, 0, 0, 3, 3);
    try {
      place_fixations(parts(g), {{1, 1.0}});
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(e.details() == std::vector<std::string>{"1"});
    }
  }
}

TEST_CASE("render_saliency") {
  SUBCASE("empty set gives an all-zero map") {
    const auto m = render_saliency({}, 8, 6, 2.0);
    CHECK(m.rows() == 6);
    CHECK(m.cols() == 8);
    CHECK((m == 0).all());
  }

  SUBCASE("single fixation peaks at one and decays radially") {
    const FixationSet fix{{1, Part::wrist, {10, 12}, 0.7}};
    const auto m = render_saliency(fix, 25, 21, 3.0);
    CHECK(m(10, 12) == 1.0);
    CHECK(m.maxCoeff() == 1.0);
    for (int r = 0; r < 21; ++r)
      for (int c = 0; c < 25; ++c)
        for (int r2 = 0; r2 < 21; ++r2) {
          const double d1 = std::hypot(r - 10, c - 12), d2 = std::hypot(r2 - 10, c - 12);
          if (d1 < d2) CHECK(m(r, c) >= m(r2, c));
        }
  }

  SUBCASE("two equal fixations 6 sigma apart give two unit maxima") {
    const double sigma = 2.0;
    const FixationSet fix{{1, Part::wrist, {10, 10}, 1.0}, {2, Part::wrist, {10, 22}, 1.0}};
    const auto m = render_saliency(fix, 33, 21, sigma);
    // Peak value relative to the global max from the oracle sum.
    const double peak = oracle::gaussian_sum(fix, 10, 10, sigma);
    CHECK(std::abs(m(10, 10) - 1.0) < 1e-6);
    CHECK(std::abs(m(10, 22) - 1.0) < 1e-6);
    CHECK(peak == doctest::Approx(1.0 + std::exp(-144.0 / 8.0)));
    CHECK(m(10, 16) == doctest::Approx(2 * std::exp(-4.5) / peak));
    CHECK(m(10, 9) < m(10, 10));
    CHECK(m(10, 11) < m(10, 10));
  }

  SUBCASE("matches the pointwise Gaussian sum") {
    const FixationSet fix{{1, Part::wrist, {3, 4}, 1.7}, {2, Part::clasper, {12, 1}, 0.85}, {2, Part::wrist, {7, 14}, 0.85}};
    const auto m = render_saliency(fix, 16, 15, 2.5);
    double peak = 0;
    for (int r = 0; r < 15; ++r)
      for (int c = 0; c < 16; ++c) peak = std::max(peak, oracle::gaussian_sum(fix, r, c, 2.5));
    for (int r = 0; r < 15; ++r)
      for (int c = 0; c < 16; ++c) CHECK(std::abs(m(r, c) - oracle::gaussian_sum(fix, r, c, 2.5) / peak) < 1e-12);
  }

  SUBCASE("parameter errors") {
    CHECK_THROWS_AS(render_saliency({}, 4, 4, 0.0), Error);
    CHECK_THROWS_AS(render_saliency({}, 4, 4, -1.0), Error);
    CHECK_THROWS_AS(render_saliency({{1, Part::wrist, {4, 0}, 1.0}}, 4, 4, 1.0), Error);
  }
}

TEST_CASE("render_saliency properties on random fixation sets") {
  std::mt19937 rng(21);
  std::uniform_int_distribution<int> row(0, 23), col(0, 31), count(0, 6);
  std::uniform_real_distribution<double> weight(0.1, 2.0);
  for (int trial = 0; trial < 40; ++trial) {
    FixationSet fix;
    const int n = count(rng);
    for (int i = 0; i < n; ++i) fix.push_back({i + 1, Part::wrist, {row(rng), col(rng)}, weight(rng)});
    const auto m = render_saliency(fix, 32, 24, 3.0);
    CHECK((m >= 0).all());
    CHECK((m <= 1).all());
    const double mx = m.maxCoeff();
    CHECK((mx == 0.0 || mx == 1.0));
    CHECK((mx == 1.0) == !fix.empty());

    FixationSet shuffled = fix;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    CHECK((render_saliency(shuffled, 32, 24, 3.0) - m).abs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("generate_scanpath") {
  SUBCASE("higher weight first") {
    const FixationSet fix{{1, Part::wrist, {0, 0}, 0.85}, {2, Part::wrist, {5, 5}, 1.69}, {2, Part::clasper, {6, 6}, 1.69}};
    const auto s = generate_scanpath(fix);
    CHECK(s.instrument_order() == std::vector<int>{2, 1});
    CHECK(s.entries()[0].part == Part::wrist);
  }

  SUBCASE("ties broken by instrument id") {
    const FixationSet fix{{5, Part::wrist, {0, 0}, 1.0}, {2, Part::wrist, {9, 9}, 1.0}};
    CHECK(generate_scanpath(fix).instrument_order() == std::vector<int>{2, 5});
  }

  SUBCASE("wrist precedes clasper within an instrument, then row-major") {
    const FixationSet fix{{1, Part::clasper, {0, 5}, 1.0}, {1, Part::clasper, {0, 1}, 1.0}, {1, Part::wrist, {9, 9}, 1.0}};
    const auto s = generate_scanpath(fix);
    CHECK(s.entries()[0].part == Part::wrist);
    CHECK(s.entries()[1].point == Pixel{0, 1});
    CHECK(s.entries()[2].point == Pixel{0, 5});
  }

  SUBCASE("empty") { CHECK(generate_scanpath({}).empty()); }

  SUBCASE("from_ordered rejects increasing weights") {
    CHECK_THROWS_AS(Scanpath::from_ordered({{1, Part::wrist, {0, 0}, 1.0}, {2, Part::wrist, {0, 0}, 2.0}}), Error);
  }
}

TEST_CASE("scanpath order follows the weights of the end-to-end pipeline") {
  LabelGrid prev = LabelGrid::Zero(40, 60), now = LabelGrid::Zero(40, 60);
  // Instrument 1 barely moves; instrument 3 grows and moves.
  paint(prev, 1, Part::wrist, 5, 5, 4, 4);
  paint(now, 1, Part::wrist, 5, 6, 4, 4);
  paint(prev, 3, Part::wrist, 20, 30, 4, 4);
  paint(prev, 3, Part::clasper, 25, 30, 2, 4);
  paint(now, 3, Part::wrist, 22, 36, 6, 5);
  paint(now, 3, Part::clasper, 29, 36, 3, 5);
  const auto out = generate_frame_saliency(parts(now), parts(prev));
  REQUIRE(out.weights.size() == 2);
  CHECK(out.weights.at(3) > out.weights.at(1));
  CHECK(out.scanpath.instrument_order() == std::vector<int>{3, 1});
  CHECK(out.map.maxCoeff() == 1.0);
  CHECK(out.map.cols() == 60);
}

TEST_CASE("frame without a trackable instrument renders an empty map") {
  LabelGrid now = LabelGrid::Zero(16, 16);
  paint(now, 1, Part::wrist, 2, 2, 3, 3);
  const auto out = generate_frame_saliency(parts(now), parts(LabelGrid::Zero(16, 16)));
  CHECK(out.scanpath.empty());
  CHECK(out.omitted == std::vector<int>{1});
  CHECK((out.map == 0).all());
}
