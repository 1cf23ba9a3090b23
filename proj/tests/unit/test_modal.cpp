#include "doctest.h"

#include <cmath>

#include "periscat/modal.hpp"

using namespace periscat;

namespace {
WaveParameters base() { return {}; }
}  // namespace

TEST_CASE("alpha_vec") {
  CHECK(alpha_vec(base(), {0, 0}).isApprox(Vec3(0, 0, 0)));
  CHECK((alpha_vec(base(), {2, -1}) - Vec3(2, -1, 0)).norm() == 0.0);
  WaveParameters p;
  p.alpha1 = 0.25;
  p.alpha2 = 0.5;
  CHECK((alpha_vec(p, {1, 1}) - Vec3(1.25, 1.5, 0)).norm() == 0.0);
}

TEST_CASE("beta values") {
  const auto p = base();
  CHECK(beta(p, {0, 0}) == Complex(kTwoPi, 0.0));
  // sqrt(4 pi^2 - 4) and i sqrt(49 - 4 pi^2), evaluated by hand
  CHECK(beta(p, {2, 0}).real() == doctest::Approx(5.9563762141387135).epsilon(1e-14));
  CHECK(beta(p, {2, 0}).imag() == 0.0);
  CHECK(beta(p, {7, 0}).real() == 0.0);
  CHECK(beta(p, {7, 0}).imag() == doctest::Approx(3.0857061421403316).epsilon(1e-14));
}

TEST_CASE("gamma components") {
  const auto p = base();
  CHECK(gamma(p, 1, {3, 0}, Side::Plus) == Complex(3.0));
  CHECK(gamma(p, 3, {0, 0}, Side::Minus) == Complex(-kTwoPi));
  CHECK(std::abs(gamma(p, 3, {7, 0}, Side::Plus) - Complex(0, 3.0857061421403316)) < 1e-13);
}

TEST_CASE("mode set sizes") {
  const auto p = base();
  const ModeSet prop = build_mode_set(p, 8, false);
  CHECK(prop.size() == 121);
  CHECK(prop.propagating_count() == 121);
  CHECK(build_mode_set(p, 7, false).size() == 121);

  WaveParameters slow;
  slow.k = 0.5;
  const ModeSet one = build_mode_set(slow, 5, false);
  REQUIRE(one.size() == 1);
  CHECK(one[0].index == ModeIndex{0, 0});

  CHECK(build_mode_set(p, 2, true).size() == 25);
}

TEST_CASE("mode flags and branch consistency") {
  WaveParameters p;
  p.alpha1 = 0.3;
  p.alpha2 = -0.2;
  const ModeSet all = build_mode_set(p, 10, true);
  for (const Mode& m : all) {
    const double a = m.alpha.norm();
    CHECK(m.beta.real() >= 0.0);
    CHECK(m.beta.imag() >= 0.0);
    CHECK(((m.beta.real() == 0.0) != (m.beta.imag() == 0.0)));
    if (a < p.k) {
      CHECK(m.propagating);
      CHECK(m.beta.real() > 0.0);
    } else {
      CHECK_FALSE(m.propagating);
      CHECK(m.beta.imag() > 0.0);
    }
  }
}

TEST_CASE("evanescent growth along a row") {
  const auto p = base();
  for (int j2 : {-3, 0, 2}) {
    double prev = 0.0;
    for (int j1 = 7; j1 < 30; ++j1) {
      const Complex b = beta(p, {j1, j2});
      CHECK(b.real() == 0.0);
      CHECK(b.imag() > prev);
      prev = b.imag();
    }
  }
}

TEST_CASE("mode set ordering and determinism") {
  WaveParameters p;
  p.alpha1 = 0.1;
  const ModeSet a = build_mode_set(p, 4, true);
  const ModeSet b = build_mode_set(p, 4, true);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].index == b[i].index);
    CHECK(a[i].beta == b[i].beta);
    if (i > 0) CHECK(a[i - 1].index < a[i].index);
  }
  CHECK(a.find({-4, -4}) == std::size_t{0});
  CHECK_FALSE(a.find({5, 0}).has_value());
  CHECK(a.j_max() == 4);

  const ModeSet shuffled(p, {{1, 0}, {-1, 2}, {0, 0}});
  CHECK(shuffled[0].index == ModeIndex{-1, 2});
  CHECK(shuffled[2].index == ModeIndex{1, 0});
  CHECK_THROWS_AS(ModeSet(p, {{0, 0}, {0, 0}}), std::invalid_argument);
}

TEST_CASE("Wood's anomaly is rejected") {
  WaveParameters p;
  p.k = 1.0;
  CHECK(is_wood_anomaly(p, {1, 0}));
  CHECK_FALSE(is_wood_anomaly(p, {1, 1}));
  CHECK_THROWS_AS(beta_checked(p, {0, 1}), WoodAnomalyError);
  CHECK_THROWS_AS(build_mode_set(p, 2, true), WoodAnomalyError);
  CHECK_THROWS_AS(ModeSet(p, {{0, -1}}), WoodAnomalyError);
}

TEST_CASE("parameter validation") {
  WaveParameters p;
  p.k = -1.0;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  p.k = 1.0;
  p.h = 0.0;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
}

TEST_CASE("plane wave examples") {
  const auto p = base();
  CHECK(std::abs(plane_wave(p, {0, 0}, Side::Plus, Vec3(0, 0, 1.0)) - 1.0) < 1e-15);
  CHECK(std::abs(plane_wave(p, {0, 0}, Side::Plus, Vec3(0, 0, 1.25)) - kI) < 1e-14);
  CHECK(std::abs(plane_wave(p, {7, 0}, Side::Plus, Vec3(0.2, 0.4, 2.0))) ==
        doctest::Approx(std::exp(-3.0857061421403316)).epsilon(1e-13));
  CHECK(std::abs(plane_wave(p, {7, 0}, Side::Plus, Vec3(0, 0, 2.0))) == doctest::Approx(0.0457).epsilon(2e-3));
}

TEST_CASE("plane wave quasiperiodicity") {
  WaveParameters p;
  p.alpha1 = 0.25;
  p.alpha2 = -0.4;
  const Vec3 x(0.3, -1.1, 1.7);
  for (ModeIndex j : {ModeIndex{0, 0}, ModeIndex{3, -2}, ModeIndex{-8, 1}}) {
    for (Side s : kSides) {
      const Complex base = plane_wave(p, j, s, x);
      const Complex s1 = plane_wave(p, j, s, x + Vec3(kTwoPi, 0, 0));
      const Complex s2 = plane_wave(p, j, s, x + Vec3(0, kTwoPi, 0));
      CHECK(std::abs(s1 - std::exp(kI * kTwoPi * p.alpha1) * base) < 1e-12 * std::abs(base));
      CHECK(std::abs(s2 - std::exp(kI * kTwoPi * p.alpha2) * base) < 1e-12 * std::abs(base));
    }
  }
}
