#include <doctest.h>

#include "doctrina/generators.hpp"

using namespace doctrina;

TEST_CASE("size closure") {
  CHECK(close_sizes({1, 2}, 16, false) ==
        std::vector<std::int32_t>{1, 2, 4, 8, 16});
  CHECK(close_sizes({1, 2}, 4, true) ==
        std::vector<std::int32_t>{0, 1, 2, 3, 4});
}

TEST_CASE("powerset fixture generates and validates") {
  auto g = gen_powerset({1, 2}, 4);
  CHECK(g.base->num_objects() == 5);
  CHECK(g.validation.all_hold());
}

TEST_CASE("tower fixture generates") {
  auto g = gen_powerset({1, 2}, 16, "projective");
  CHECK(g.base->num_objects() == 5);
  CHECK(g.validation.all_hold());
}

TEST_CASE("sierpinski fixture") {
  auto g = gen_topology({sierpinski()}, 4);
  CHECK(g.validation.all_hold());
}

TEST_CASE("trivial fixture") {
  auto g = gen_trivial();
  CHECK(g.validation.all_hold());
}

TEST_CASE("localic fixtures generate") {
  auto h3 = gen_localic(chain_lattice(3), {1, 2}, 4);
  CHECK(h3.validation.all_hold());
  CHECK(h3.base->num_objects() == 5);  // same base as the powerset fixture

  auto h3e = gen_localic(chain_lattice(3), {1, 3}, 9, "full", false);
  CHECK(h3e.validation.all_hold());
  CHECK(h3e.base->num_objects() == 3);
  CHECK(h3e.doctrine->certs().pi1.has_value());

  auto h3x = gen_localic(chain_lattice(3), {1, 2}, 16, "projective");
  CHECK(h3x.validation.all_hold());
}

TEST_CASE("generator determinism") {
  auto a = gen_powerset({1, 2}, 4);
  auto b = gen_powerset({1, 2}, 4);
  CHECK(a.base->num_morphisms() == b.base->num_morphisms());
  for (Mor m = 0; m < a.base->num_morphisms(); ++m) {
    CHECK(a.base->dom(m) == b.base->dom(m));
    CHECK(a.base->point_map(m) == b.base->point_map(m));
  }
}

TEST_CASE("oversized powerset request refuses") {
  CHECK_THROWS_AS(gen_powerset({1, 2}, 16, "full"), SizeExceeded);
}
