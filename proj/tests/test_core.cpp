#include <catch2/catch_amalgamated.hpp>

#include "gdsim/core.hpp"

using namespace gdsim;
using Catch::Approx;

TEST_CASE("alpha from the default constants") {
  PhysicalConstants c;
  // -chi_rho mu0 / (4 pi^2) = 6.2e-9 * 4pi*1e-7 / (4 pi^2) = 6.2e-16 / pi
  CHECK(alpha(c) == Approx(1.9735212943e-16).epsilon(1e-9));
  CHECK(alpha(c) == Approx(6.2e-16 / std::numbers::pi).epsilon(1e-15));
}

TEST_CASE("alpha edge constructions") {
  PhysicalConstants c;
  c.chi_rho = 0.0;
  CHECK(alpha(c) == 0.0);

  c = PhysicalConstants{};
  c.chi_rho = -4.0 * std::numbers::pi * std::numbers::pi / c.mu0;
  CHECK(alpha(c) == Approx(1.0).epsilon(1e-14));
}

TEST_CASE("alpha is positive for any diamagnetic susceptibility") {
  PhysicalConstants c;
  for (double chi : {-1e-12, -6.2e-9, -2.2e-5, -1.0}) {
    c.chi_rho = chi;
    CHECK(alpha(c) > 0.0);
  }
}

TEST_CASE("constants validation rejects non-diamagnetic or unphysical values") {
  PhysicalConstants c;
  c.chi_rho = 6.2e-9;
  CHECK_THROWS_AS(c.validate(), config_error);
  c = PhysicalConstants{};
  c.g = 0.0;
  CHECK_THROWS_AS(c.validate(), config_error);
  c = PhysicalConstants{};
  c.mu0 = -1.0;
  CHECK_THROWS_AS(c.validate(), config_error);
  CHECK_NOTHROW(PhysicalConstants{}.validate());
}

TEST_CASE("particle validation") {
  ParticleSpec p;
  CHECK_NOTHROW(p.validate());
  p.mass = 0.0;
  CHECK_THROWS_AS(p.validate(), config_error);
  p = ParticleSpec{};
  p.chi_rho = 1e-9;
  CHECK_THROWS_AS(p.validate(), config_error);
}

TEST_CASE("vec2 algebra") {
  const Vec2 a{3.0, 4.0};
  const Vec2 b{-1.0, 2.0};
  CHECK(norm(a) == Approx(5.0));
  CHECK(dot(a, b) == Approx(5.0));
  CHECK(cross(a, b) == Approx(10.0));
  const Vec2 s = a - 2.0 * b;
  CHECK(s.x == Approx(5.0));
  CHECK(s.z == Approx(0.0));
}
