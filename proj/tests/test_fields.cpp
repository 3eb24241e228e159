#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "gdsim/fields.hpp"

using namespace gdsim;
using Catch::Approx;

namespace {

FieldEnvironment single_wire(double current, bool gravity = false) {
  FieldEnvironment env;
  env.gravity_on = gravity;
  env.wires = {Wire{{0.0, 0.0}, current, 0.0}};
  return env;
}

}  // namespace

TEST_CASE("single-wire field magnitude and handedness") {
  const auto env = single_wire(6.04138);
  const Vec2 b = magnetic_field(env, {1e-6, 0.0});
  // mu0 I / (2 pi r) = 2e-7 * 6.04138 / 1e-6
  CHECK(norm(b) == Approx(1.208276).epsilon(1e-4));
  // Azimuthal: purely -z at a point on the +x axis for positive current.
  CHECK(b.x == 0.0);
  CHECK(b.z < 0.0);
}

TEST_CASE("zero current gives zero field") {
  const auto env = single_wire(0.0);
  const Vec2 b = magnetic_field(env, {3e-6, -2e-6});
  CHECK(b.x == 0.0);
  CHECK(b.z == 0.0);
}

TEST_CASE("symmetric wire pair field components cancel") {
  FieldEnvironment env;
  env.gravity_on = false;
  env.wires = {Wire{{-2e-6, 0.0}, 5.0, 0.0}, Wire{{+2e-6, 0.0}, 5.0, 0.0}};

  // On the axis through both wires each field is perpendicular to it.
  const Vec2 on_axis = magnetic_field(env, {0.5e-6, 0.0});
  CHECK(on_axis.x == 0.0);

  // On the perpendicular midline the z components cancel by mirror symmetry.
  const Vec2 midline = magnetic_field(env, {0.0, 1.5e-6});
  CHECK(midline.z == Approx(0.0).margin(1e-18));
}

TEST_CASE("single-wire gradient of B^2 against the closed form") {
  const auto env = single_wire(6.04138);
  const Vec2 g = b_squared_gradient(env, {1e-6, 0.0});
  // -2 (mu0 I / 2pi)^2 / r^3, radial: 2 * (1.208276e-6)^2 / 1e-18
  CHECK(norm(g) == Approx(2.9199e6).epsilon(1e-3));
  CHECK(g.x < 0.0);  // toward the wire: |B|^2 grows inward
  CHECK(g.z == Approx(0.0).margin(1e-9 * norm(g)));
}

TEST_CASE("gradient of an empty environment is zero") {
  FieldEnvironment env;
  env.gravity_on = false;
  const Vec2 g = b_squared_gradient(env, {1e-6, 2e-6});
  CHECK(g.x == 0.0);
  CHECK(g.z == 0.0);
  const Vec2 a = acceleration(env, {1e-6, 2e-6});
  CHECK(a.x == 0.0);
  CHECK(a.z == 0.0);
}

TEST_CASE("analytic gradient matches central finite differences off the wires") {
  FieldEnvironment env;
  env.gravity_on = false;
  env.wires = {Wire{{0.0, 0.0}, 6.04138, 0.0}, Wire{{-491e-6, -122.6e-6}, 10.0, 0.0},
               Wire{{+491e-6, -122.6e-6}, 10.0, 0.0}};

  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> ux(-600e-6, 600e-6);
  std::uniform_real_distribution<double> uz(-300e-6, 500e-6);

  int checked = 0;
  while (checked < 25) {
    const Vec2 p{ux(rng), uz(rng)};
    double r_min = 1e9;
    for (const auto& w : env.wires) r_min = std::min(r_min, norm(p - w.position));
    if (r_min < 5e-6) continue;  // keep the FD stencil well conditioned
    ++checked;

    const double eps = 1e-5 * r_min;
    auto b2 = [&](Vec2 q) { return norm_sq(magnetic_field(env, q)); };
    const Vec2 fd{(b2({p.x + eps, p.z}) - b2({p.x - eps, p.z})) / (2 * eps),
                  (b2({p.x, p.z + eps}) - b2({p.x, p.z - eps})) / (2 * eps)};
    const Vec2 an = b_squared_gradient(env, p);
    const double scale = std::max(norm(an), 1e-30);
    CHECK(norm(an - fd) / scale < 1e-6);
  }
}

TEST_CASE("single-wire acceleration magnitude and repulsive direction") {
  const auto env = single_wire(6.04138);
  const Vec2 a = acceleration(env, {1e-6, 0.0});
  // alpha I^2 / r^3 with alpha = 1.97352e-16
  CHECK(norm(a) == Approx(7.2029e3).epsilon(1e-3));
  CHECK(a.x > 0.0);  // away from the wire
  CHECK(a.z == Approx(0.0).margin(1e-9 * norm(a)));
}

TEST_CASE("free fall acceleration with no wires") {
  FieldEnvironment env;
  env.gravity_on = true;
  const Vec2 a = acceleration(env, {0.1, 0.2});
  CHECK(a.x == 0.0);
  CHECK(a.z == Approx(-9.8));
}

TEST_CASE("single-wire reduction holds to machine precision in both models") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> ur(5e-7, 5e-5);
  std::uniform_real_distribution<double> uphi(0.0, 2.0 * std::numbers::pi);
  for (auto model : {FieldModel::PerWireForceSum, FieldModel::TotalFieldGradient}) {
    auto env = single_wire(6.04138);
    env.model = model;
    const double a0 = alpha(env.constants);
    for (int i = 0; i < 20; ++i) {
      const double r = ur(rng);
      const double phi = uphi(rng);
      const Vec2 p{r * std::cos(phi), r * std::sin(phi)};
      const Vec2 a = acceleration(env, p);
      const double expect = a0 * 6.04138 * 6.04138 / (r * r * r);
      CHECK(norm(a) == Approx(expect).epsilon(1e-12));
      CHECK(dot(a, p) > 0.0);  // repulsive
    }
  }
}

TEST_CASE("acceleration is independent of any particle property") {
  // The field environment has no mass input at all; two different particles
  // see the identical acceleration field by construction.
  const auto env = single_wire(6.04138, true);
  const Vec2 a1 = acceleration(env, {2e-6, 1e-6});
  const Vec2 a2 = acceleration(env, {2e-6, 1e-6});
  CHECK(a1.x == a2.x);
  CHECK(a1.z == a2.z);
}

TEST_CASE("field models differ only through wire cross terms") {
  FieldEnvironment per = single_wire(6.04138);
  FieldEnvironment tot = per;
  tot.model = FieldModel::TotalFieldGradient;
  const Vec2 p{1.3e-6, -0.4e-6};
  CHECK(norm(acceleration(per, p) - acceleration(tot, p)) <
        1e-12 * norm(acceleration(per, p)));

  // Three wires: the relative difference near the splitting wire is at the
  // few-permille level (the B_split x B_side cross term).
  for (auto* env : {&per, &tot}) {
    env->wires = {Wire{{0.0, 0.0}, 6.04138, 0.0},
                  Wire{{-491e-6, -122.6e-6}, 10.0, 0.0},
                  Wire{{+491e-6, -122.6e-6}, 10.0, 0.0}};
  }
  const Vec2 q{0.8e-6, 0.8e-6};
  const double rel =
      norm(acceleration(per, q) - acceleration(tot, q)) / norm(acceleration(per, q));
  CHECK(rel > 1e-5);
  CHECK(rel < 1e-2);
}

TEST_CASE("evaluation at a wire center raises a singularity error") {
  const auto env = single_wire(2.0);
  CHECK_THROWS_AS(magnetic_field(env, {0.0, 0.0}), singularity_error);
  CHECK_THROWS_AS(b_squared_gradient(env, {0.0, 0.0}), singularity_error);
  CHECK_THROWS_AS(acceleration(env, {0.0, 0.0}), singularity_error);
}

TEST_CASE("evaluation inside an exclusion radius raises rather than clamps") {
  FieldEnvironment env;
  env.wires = {Wire{{0.0, 0.0}, 2.0, 1e-6}};
  CHECK_THROWS_AS(magnetic_field(env, {0.5e-6, 0.0}), singularity_error);
  CHECK_NOTHROW(magnetic_field(env, {1.5e-6, 0.0}));
}

TEST_CASE("coincident wires are rejected") {
  FieldEnvironment env;
  env.wires = {Wire{{1e-6, 0.0}, 1.0, 0.0}, Wire{{1e-6, 0.0}, 2.0, 0.0}};
  CHECK_THROWS_AS(env.validate(), config_error);
}

TEST_CASE("specific energy reduces to kinetic plus potential terms") {
  auto env = single_wire(6.04138, true);
  const Vec2 p{2e-6, 0.0};
  const Vec2 v{0.01, -0.02};
  const double b2 = norm_sq(magnetic_field(env, p));
  const double expect = 0.5 * norm_sq(v) -
                        env.constants.chi_rho / (2.0 * env.constants.mu0) * b2 +
                        env.constants.g * p.z;
  CHECK(specific_energy(env, p, v) == Approx(expect).epsilon(1e-14));
}
