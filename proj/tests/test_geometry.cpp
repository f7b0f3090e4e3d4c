#include <doctest.h>

#include <cmath>

#include <bhmode/geometry.hpp>

using namespace bhmode;

TEST_CASE("horizon radii: Schwarzschild limit and generic Kerr") {
  KerrParams s{1.0, 0.0, Family::Kerr};
  const auto hs = horizon_radii(s);
  CHECK(hs.r_plus == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(hs.r_minus == doctest::Approx(0.0).epsilon(1e-14));

  KerrParams k{1.0, 0.5, Family::Kerr};
  const auto hk = horizon_radii(k);
  const double root = std::sqrt(1.0 - 0.25);
  CHECK(hk.r_plus == doctest::Approx(1.0 + root).epsilon(1e-14));
  CHECK(hk.r_minus == doctest::Approx(1.0 - root).epsilon(1e-14));
  // r_plus r_minus = a^2, r_plus + r_minus = 2M
  CHECK(hk.r_plus * hk.r_minus == doctest::Approx(0.25).epsilon(1e-13));
  CHECK(hk.r_plus + hk.r_minus == doctest::Approx(2.0).epsilon(1e-13));

  KerrParams aux{1.5, 3.0, Family::Auxiliary};
  CHECK(horizon_radii(aux).r_plus == doctest::Approx(3.0).epsilon(1e-14));

  CHECK_THROWS_AS(horizon_radii(KerrParams{1.0, 1.0, Family::Kerr}), PreconditionError);
  CHECK_THROWS_AS(horizon_radii(KerrParams{-1.0, 0.0, Family::Kerr}), PreconditionError);
  CHECK_THROWS_AS(horizon_radii(KerrParams{1.0, -0.5, Family::Auxiliary}), PreconditionError);
}

TEST_CASE("horizon frequency and superradiance band") {
  KerrParams k{1.0, 0.5, Family::Kerr};
  const double rp = horizon_radii(k).r_plus;
  const double varpi = horizon_frequency(k, 2);
  CHECK(varpi == doctest::Approx(0.5 * 2 / (2.0 * rp)).epsilon(1e-14));
  CHECK(horizon_frequency(k, 0) == 0.0);
  CHECK(horizon_frequency(k, -2) == doctest::Approx(-varpi).epsilon(1e-14));

  KerrParams aux{1.0, 2.0, Family::Auxiliary};
  CHECK(horizon_frequency(aux, 2) == doctest::Approx(0.5).epsilon(1e-14));

  // Band: 0 < omega < varpi for m > 0.
  CHECK(is_superradiant(k, 0.5 * varpi, 2));
  CHECK_FALSE(is_superradiant(k, 1.5 * varpi, 2));
  CHECK_FALSE(is_superradiant(k, -0.1, 2));
  CHECK_FALSE(is_superradiant(k, 0.0, 2));
  CHECK_FALSE(is_superradiant(k, varpi, 2));
  // Mirror band for m < 0.
  CHECK(is_superradiant(k, -0.5 * varpi, -2));
}

TEST_CASE("surface gravity") {
  KerrParams s{1.0, 0.0, Family::Kerr};
  CHECK(surface_gravity(s) == doctest::Approx(0.25).epsilon(1e-14));
  KerrParams aux{1.0, 1.0, Family::Auxiliary};
  CHECK(surface_gravity(aux) == doctest::Approx(0.25).epsilon(1e-14));
  KerrParams k{1.0, 0.5, Family::Kerr};
  const auto h = horizon_radii(k);
  CHECK(surface_gravity(k) ==
        doctest::Approx((h.r_plus - h.r_minus) / (2.0 * (h.r_plus * h.r_plus + 0.25)))
            .epsilon(1e-14));
}

TEST_CASE("tortoise map: closed form, derivative, inverse") {
  SUBCASE("a = 0 closed form r + 2M ln(r/2M - 1)") {
    TortoiseMap map(KerrParams{1.0, 0.0, Family::Kerr});
    for (double r : {2.5, 3.0, 4.0, 10.0, 100.0}) {
      CHECK(map.r_star_of_r(r) ==
            doctest::Approx(r + 2.0 * std::log(r / 2.0 - 1.0)).epsilon(1e-13));
    }
  }
  SUBCASE("auxiliary closed form matches the a = 0 Kerr form") {
    TortoiseMap aux(KerrParams{1.0, 7.0, Family::Auxiliary});
    TortoiseMap sch(KerrParams{1.0, 0.0, Family::Kerr});
    for (double r : {2.2, 3.0, 5.0, 50.0})
      CHECK(aux.r_star_of_r(r) == doctest::Approx(sch.r_star_of_r(r)).epsilon(1e-13));
  }
  SUBCASE("derivative consistent with the closed form (central difference)") {
    for (auto p : {KerrParams{1.0, 0.5, Family::Kerr}, KerrParams{2.0, 0.0, Family::Kerr},
                   KerrParams{1.0, 3.0, Family::Auxiliary}}) {
      TortoiseMap map(p);
      for (double r : {1.05 * map.horizon(), 1.5 * map.horizon(), 3.0 * map.horizon(),
                       20.0 * map.horizon()}) {
        const double dr = 1e-6 * r;
        const double fd = (map.r_star_of_r(r + dr) - map.r_star_of_r(r - dr)) / (2.0 * dr);
        CHECK(map.drstar_dr(r) == doctest::Approx(fd).epsilon(1e-7));
      }
    }
  }
  SUBCASE("inverse round trip to 1e-12 over the well-resolved range") {
    for (auto p : {KerrParams{1.0, 0.5, Family::Kerr}, KerrParams{1.0, 0.0, Family::Kerr},
                   KerrParams{1.0, 2.0, Family::Auxiliary}}) {
      TortoiseMap map(p);
      for (double rs : {-15.0, -5.0, 0.0, 3.0, 17.0, 150.0, 2.4e5}) {
        const double r = map.r_of_r_star(rs);
        CHECK(r > map.horizon());
        CHECK(map.r_star_of_r(r) ==
              doctest::Approx(rs).epsilon(1e-12).scale(std::max(1.0, std::abs(rs))));
      }
    }
  }
  SUBCASE("deep near-horizon inversion: limited by double resolution in r, not lost") {
    // At r_* ~ -60 the exterior gap r - r_plus is ~1e-12, so adjacent doubles
    // in r are ~1e-3 apart in r_*; the inverse must stay exterior and land
    // within that granularity.
    TortoiseMap map(KerrParams{1.0, 0.5, Family::Kerr});
    for (double rs : {-40.0, -60.0, -80.0}) {
      const double r = map.r_of_r_star(rs);
      CHECK(r > map.horizon());
      if (rs >= -60.0) CHECK(std::abs(map.r_star_of_r(r) - rs) < 1e-2);
    }
  }
  SUBCASE("domain errors at and below the horizon") {
    TortoiseMap map(KerrParams{1.0, 0.5, Family::Kerr});
    CHECK_THROWS_AS(map.r_star_of_r(map.horizon()), DomainError);
    CHECK_THROWS_AS(map.drstar_dr(0.5 * map.horizon()), DomainError);
  }
  SUBCASE("convention offset shifts the map") {
    TortoiseMap base(KerrParams{1.0, 0.5, Family::Kerr});
    TortoiseMap shifted(KerrParams{1.0, 0.5, Family::Kerr}, 10.0);
    CHECK(shifted.r_star_of_r(3.0) == doctest::Approx(base.r_star_of_r(3.0) + 10.0));
    CHECK(shifted.r_of_r_star(10.0) == doctest::Approx(base.r_of_r_star(0.0)).epsilon(1e-12));
  }
}
