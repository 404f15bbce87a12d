#include "mortensen/domain.hpp"
#include "mortensen/rng.hpp"

#include <catch2/catch_amalgamated.hpp>

using namespace mortensen;

namespace {

Vec random_point(Rng& rng, int dim, double span) {
  Vec x(dim);
  for (int i = 0; i < dim; ++i) x[i] = span * (2 * rng.uniform() - 1);
  return x;
}

}  // namespace

TEST_CASE("projection closed forms") {
  const auto ball = Domain::ball(make_vec2(0, 0), 1.0);
  REQUIRE((ball.project(make_vec2(2, 0)) - make_vec2(1, 0)).norm() == 0.0);

  const auto iv = Domain::interval(0, 1);
  REQUIRE(iv.project(make_vec1(0.5))[0] == 0.5);

  const auto box = Domain::box(make_vec2(0, 0), make_vec2(1, 1));
  REQUIRE((box.project(make_vec2(2, -1)) - make_vec2(1, 0)).norm() == 0.0);
}

TEST_CASE("projection is idempotent and nonexpansive") {
  Rng rng(42);
  const auto domains = {Domain::interval(-0.5, 2.0), Domain::ball(make_vec2(0.3, -0.2), 1.5),
                        Domain::box(make_vec2(-1, 0), make_vec2(1, 2))};
  for (const auto& d : domains) {
    for (int trial = 0; trial < 10000; ++trial) {
      const Vec x = random_point(rng, d.dim(), 4.0);
      const Vec y = random_point(rng, d.dim(), 4.0);
      const Vec px = d.project(x);
      REQUIRE((d.project(px) - px).norm() <= 1e-14);
      REQUIRE((d.project(x) - d.project(y)).norm() <= (x - y).norm() + 1e-12);
      REQUIRE(std::abs((px - x).norm() - d.dist_to_set(x)) <= 1e-12);
    }
  }
}

TEST_CASE("outward normals") {
  const auto iv = Domain::interval(0, 1);
  REQUIRE(iv.outward_normal(make_vec1(1.0))[0] == 1.0);
  REQUIRE(iv.outward_normal(make_vec1(0.0))[0] == -1.0);

  const auto ball = Domain::ball(make_vec2(0, 0), 1.0);
  REQUIRE((ball.outward_normal(make_vec2(0, 1)) - make_vec2(0, 1)).norm() <= 1e-15);

  // Box corner: normalized sum of active face normals, consistent with the
  // projection pulling the offset point back onto the corner.
  const auto box = Domain::box(make_vec2(0, 0), make_vec2(1, 1));
  const Vec corner = make_vec2(1, 1);
  const Vec n = box.outward_normal(corner);
  REQUIRE((n - make_vec2(1 / std::sqrt(2.0), 1 / std::sqrt(2.0))).norm() <= 1e-15);
  REQUIRE((box.project(corner + 1e-6 * n) - corner).norm() <= 1e-15);

  REQUIRE_THROWS_AS(iv.outward_normal(make_vec1(0.5)), Error);
}

TEST_CASE("supporting hyperplane property") {
  Rng rng(7);
  const auto ball = Domain::ball(make_vec2(0.1, 0.4), 1.2);
  const auto box = Domain::box(make_vec2(-1, -1), make_vec2(1, 1));
  for (const auto& d : {ball, box}) {
    for (int trial = 0; trial < 10000; ++trial) {
      // Boundary point via projection of an exterior point.
      Vec far = random_point(rng, 2, 5.0);
      if (d.dist_to_set(far) == 0) continue;
      const Vec x = d.project(far);
      const Vec n = d.outward_normal(x);
      const Vec z = d.project(random_point(rng, 2, 3.0));
      REQUIRE((z - x).dot(n) <= 1e-10);
    }
  }
}

TEST_CASE("signed queries") {
  const auto iv = Domain::interval(0, 1);
  auto q = iv.signed_queries(make_vec1(1.5));
  REQUIRE(q.dist_to_set == 0.5);
  REQUIRE(!q.in_interior);

  const auto ball = Domain::ball(make_vec2(0, 0), 1.0);
  q = ball.signed_queries(make_vec2(0, 0));
  REQUIRE(q.dist_to_set == 0.0);
  REQUIRE(q.in_interior);

  const auto box = Domain::box(make_vec2(0, 0), make_vec2(1, 1));
  q = box.signed_queries(make_vec2(0.5, 1.0));
  REQUIRE(q.dist_to_set == 0.0);
  REQUIRE(q.on_boundary);
  REQUIRE(!q.in_interior);
}

TEST_CASE("domain construction guards") {
  REQUIRE_THROWS_AS(Domain::interval(1, 1), Error);
  REQUIRE_THROWS_AS(Domain::ball(make_vec1(0), 0.0), Error);
  REQUIRE_THROWS_AS(Domain::box(make_vec2(0, 0), make_vec2(1, 0)), Error);
}
