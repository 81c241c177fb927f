/*
 * (C) Copyright 2026 qpbreather developers
 *
 * This software is licensed under the terms of the Apache Licence Version 2.0
 * which can be obtained at http://www.apache.org/licenses/LICENSE-2.0.
 */
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <set>

#include "error.hpp"
#include "lattice.hpp"

using namespace qpb;
using namespace qpb::lattice;

namespace {

// Brute-force membership: enumerate the base box and test against both
// rectangles by hand.
std::vector<Site> brute_members(const Site& c, const IntVec& w, const IntVec& z, int b) {
  const IntVec cc = c.coords();
  std::vector<Site> out;
  const int dim = static_cast<int>(w.size());
  IntVec off(dim);
  for (int i = 0; i < dim; ++i) off[i] = -w[i];
  while (true) {
    bool in_shift = std::any_of(z.begin(), z.end(), [](int x) { return x != 0; });
    for (int i = 0; i < dim; ++i)
      if (std::abs(off[i] - z[i]) > w[i]) in_shift = false;
    if (!in_shift) {
      IntVec p(dim);
      for (int i = 0; i < dim; ++i) p[i] = cc[i] + off[i];
      out.push_back(Site::from_coords(p, b));
    }
    int i = dim - 1;
    while (i >= 0 && off[i] == w[i]) off[i] = -w[i], --i;
    if (i < 0) break;
    ++off[i];
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

TEST_CASE("cube sizes") {
  CHECK(region_members(cube(1, 1, 1)).size() == 9);
  CHECK(region_members(cube(2, 1, 2)).size() == 125);
  ResonantSet S(std::vector<IntVec>{{0}});
  CHECK(region_members(cube_excluding(1, S, 1)).size() == 7);
  CHECK(region_members(cube(3, 2, 1)).size() == 343);
}

TEST_CASE("elementary regions") {
  const Site o{{0}, {0}};
  auto full = region_members(rectangle(o, {1, 1}));
  CHECK(full.size() == 9);
  CHECK(std::is_sorted(full.begin(), full.end()));

  RegionSpec shifted = rectangle(o, {1, 1});
  shifted.shift = {1, 0};
  auto m = region_members(shifted);
  CHECK(m == brute_members(o, {1, 1}, {1, 0}, 1));
  REQUIRE(m.size() == 3);
  for (const auto& s : m) CHECK(s.k[0] == -1);

  RegionSpec single = rectangle(o, {0, 0});
  single.shift = {1, 1};
  auto one = region_members(single);
  REQUIRE(one.size() == 1);
  CHECK(one[0] == o);

  RegionSpec big = rectangle(Site{{2}, {-1}}, {5, 5});
  big.shift = {8, 4};
  CHECK(region_members(big) == brute_members(big.base_center, {5, 5}, {8, 4}, 1));
  CHECK(region_members(big).size() == 121 - 3 * 7);

  RegionSpec tiny = rectangle(Site{{1}, {0}}, {0, 0});
  tiny.excluded = ResonantSet(std::vector<IntVec>{{0}});
  CHECK_THROWS_AS(region_members(tiny), Error);
  try {
    region_members(tiny);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::EmptyRegion);
  }
}

TEST_CASE("members avoid shift and exclusion") {
  ResonantSet S({{0, 0}, {1, -1}});
  RegionSpec spec = rectangle(Site{{0, 0}, {0, 0}}, {2, 1, 2, 1});
  spec.shift = {1, 0, -2, 1};
  spec.excluded = S;
  for (const auto& s : region_members(spec)) {
    CHECK_FALSE(S.contains(s));
    CHECK(spec.contains(s));
  }
}

TEST_CASE("resonant set") {
  ResonantSet S({{0}, {3}});
  CHECK(S.members().size() == 4);
  for (const auto& s : S.members()) CHECK(S.contains(negate_k(s)));
  CHECK(S.anchor_index(IntVec{3}) == 1);
  CHECK_FALSE(S.anchor_index(IntVec{1}).has_value());
  try {
    ResonantSet bad({{1}, {1}});
    FAIL("expected InvalidAnchors");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::InvalidAnchors);
  }
}

TEST_CASE("index map round trip") {
  IndexMap map(cube(1, 1, 1));
  const auto i = map.index(Site{{0}, {0}});
  CHECK(map.site(i) == Site{{0}, {0}});
  std::set<Site> seen;
  for (std::size_t j = 0; j < map.size(); ++j) {
    CHECK(map.index(map.site(j)) == j);
    seen.insert(map.site(j));
  }
  CHECK(seen.size() == map.size());
  CHECK(map.sites() == region_members(cube(1, 1, 1)));

  ResonantSet S(std::vector<IntVec>{{0}});
  IndexMap ex(cube_excluding(1, S, 1));
  try {
    ex.index(Site{{1}, {0}});
    FAIL("expected OutOfRegion");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::OutOfRegion);
  }
}

TEST_CASE("norms and diameter") {
  Site s{{-3, 1}, {2}};
  CHECK(s.norm() == 3);
  CHECK(s.k_norm() == 3);
  CHECK(s.n_norm() == 2);
  auto members = region_members(cube(2, 1, 1));
  CHECK(diameter(members) == 4);
  int count = 0;
  for_each_point(2, 2, [&](const IntVec&) { ++count; });
  CHECK(count == 25);
}
