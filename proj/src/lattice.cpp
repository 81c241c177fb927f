/*
 * (C) Copyright 2026 qpbreather developers
 *
 * This software is licensed under the terms of the Apache Licence Version 2.0
 * which can be obtained at http://www.apache.org/licenses/LICENSE-2.0.
 */
#include "lattice.hpp"

#include <algorithm>
#include <cstdlib>
#include <set>
#include <string>

#include "error.hpp"

namespace qpb::lattice {

namespace {

constexpr std::size_t kMaxMaterializedSites = 10'000'000;

void require_same_shape(const Site& a, const Site& b) {
  if (a.k.size() != b.k.size() || a.n.size() != b.n.size())
    throw Error(ErrorCode::InvalidArgument, "site shapes differ");
}

}  // namespace

int sup_norm(std::span<const int> v) {
  int r = 0;
  for (int x : v) r = std::max(r, std::abs(x));
  return r;
}

int Site::norm() const { return std::max(k_norm(), n_norm()); }
int Site::k_norm() const { return sup_norm(k); }
int Site::n_norm() const { return sup_norm(n); }

IntVec Site::coords() const {
  IntVec c(k);
  c.insert(c.end(), n.begin(), n.end());
  return c;
}

Site Site::from_coords(std::span<const int> coords, int b) {
  Site s;
  s.k.assign(coords.begin(), coords.begin() + b);
  s.n.assign(coords.begin() + b, coords.end());
  return s;
}

int distance(const Site& a, const Site& b) {
  require_same_shape(a, b);
  int r = 0;
  for (std::size_t i = 0; i < a.k.size(); ++i) r = std::max(r, std::abs(a.k[i] - b.k[i]));
  for (std::size_t i = 0; i < a.n.size(); ++i) r = std::max(r, std::abs(a.n[i] - b.n[i]));
  return r;
}

Site negate_k(const Site& s) {
  Site r = s;
  for (int& x : r.k) x = -x;
  return r;
}

ResonantSet::ResonantSet(std::vector<IntVec> anchors) : anchors_(std::move(anchors)) {
  if (anchors_.empty()) throw Error(ErrorCode::InvalidAnchors, "need at least one anchor");
  std::set<IntVec> seen;
  const std::size_t d = anchors_.front().size();
  for (const auto& a : anchors_) {
    if (a.size() != d || d == 0) throw Error(ErrorCode::InvalidAnchors, "anchor dimensions differ");
    if (!seen.insert(a).second) throw Error(ErrorCode::InvalidAnchors, "duplicate anchor sites");
  }
  const int b = static_cast<int>(anchors_.size());
  for (int l = 0; l < b; ++l) {
    for (int sign : {1, -1}) {
      Site s{IntVec(b, 0), anchors_[l]};
      s.k[l] = sign;
      members_.push_back(std::move(s));
    }
  }
  std::sort(members_.begin(), members_.end());
}

bool ResonantSet::contains(const Site& s) const {
  return std::binary_search(members_.begin(), members_.end(), s);
}

std::optional<int> ResonantSet::anchor_index(std::span<const int> n) const {
  for (std::size_t l = 0; l < anchors_.size(); ++l)
    if (std::equal(anchors_[l].begin(), anchors_[l].end(), n.begin(), n.end()))
      return static_cast<int>(l);
  return std::nullopt;
}

bool RegionSpec::is_full_rectangle() const {
  return std::all_of(shift.begin(), shift.end(), [](int z) { return z == 0; });
}

bool RegionSpec::contains(const Site& s) const {
  if (s.b() != b() || s.d() != d()) return false;
  const IntVec c = s.coords();
  const IntVec center = base_center.coords();
  bool in_base = true;
  bool in_shifted = !is_full_rectangle();
  for (std::size_t i = 0; i < c.size(); ++i) {
    const int off = c[i] - center[i];
    if (std::abs(off) > half_widths[i]) in_base = false;
    if (std::abs(off - shift[i]) > half_widths[i]) in_shifted = false;
  }
  if (!in_base || in_shifted) return false;
  return !(excluded && excluded->contains(s));
}

RegionSpec RegionSpec::translated(std::span<const int> dk, std::span<const int> dn) const {
  RegionSpec r = *this;
  for (std::size_t i = 0; i < r.base_center.k.size(); ++i) r.base_center.k[i] += dk[i];
  for (std::size_t i = 0; i < r.base_center.n.size(); ++i) r.base_center.n[i] += dn[i];
  return r;
}

RegionSpec rectangle(const Site& center, IntVec half_widths) {
  if (static_cast<int>(half_widths.size()) != center.b() + center.d())
    throw Error(ErrorCode::InvalidArgument, "half_widths must have length b + d");
  for (int w : half_widths)
    if (w < 0) throw Error(ErrorCode::InvalidArgument, "negative half width");
  RegionSpec r;
  r.base_center = center;
  r.shift.assign(half_widths.size(), 0);
  r.half_widths = std::move(half_widths);
  return r;
}

RegionSpec cube(int L, int b, int d) {
  if (L < 1) throw Error(ErrorCode::InvalidArgument, "cube radius must be >= 1");
  if (b < 1 || d < 1) throw Error(ErrorCode::InvalidArgument, "b and d must be positive");
  return rectangle(Site{IntVec(b, 0), IntVec(d, 0)}, IntVec(b + d, L));
}

RegionSpec cube_excluding(int L, const ResonantSet& excluded, int d) {
  RegionSpec r = cube(L, excluded.b(), d);
  r.excluded = excluded;
  return r;
}

std::vector<Site> region_members(const RegionSpec& spec) {
  const int dim = spec.dim();
  if (static_cast<int>(spec.half_widths.size()) != dim || static_cast<int>(spec.shift.size()) != dim)
    throw Error(ErrorCode::InvalidArgument, "region vectors must have length b + d");
  std::size_t total = 1;
  for (int w : spec.half_widths) {
    if (w < 0) throw Error(ErrorCode::InvalidArgument, "negative half width");
    total *= static_cast<std::size_t>(2 * w + 1);
    if (total > kMaxMaterializedSites)
      throw Error(ErrorCode::InvalidArgument, "region too large to materialize");
  }
  const IntVec center = spec.base_center.coords();
  IntVec offset(dim);
  for (int i = 0; i < dim; ++i) offset[i] = -spec.half_widths[i];

  std::vector<Site> out;
  IntVec c(dim);
  // Odometer over the base rectangle; last coordinate varies fastest, which
  // yields lexicographic order of the concatenated (k, n).
  while (true) {
    for (int i = 0; i < dim; ++i) c[i] = center[i] + offset[i];
    Site s = Site::from_coords(c, spec.b());
    if (spec.contains(s)) out.push_back(std::move(s));
    int i = dim - 1;
    while (i >= 0 && offset[i] == spec.half_widths[i]) {
      offset[i] = -spec.half_widths[i];
      --i;
    }
    if (i < 0) break;
    ++offset[i];
  }
  if (out.empty()) throw Error(ErrorCode::EmptyRegion, "region has no members");
  return out;
}

int diameter(std::span<const Site> members) {
  if (members.empty()) return 0;
  IntVec lo = members.front().coords();
  IntVec hi = lo;
  for (const auto& s : members) {
    const IntVec c = s.coords();
    for (std::size_t i = 0; i < c.size(); ++i) {
      lo[i] = std::min(lo[i], c[i]);
      hi[i] = std::max(hi[i], c[i]);
    }
  }
  int r = 0;
  for (std::size_t i = 0; i < lo.size(); ++i) r = std::max(r, hi[i] - lo[i]);
  return r;
}

IndexMap::IndexMap(const RegionSpec& spec) : IndexMap(region_members(spec)) {}

IndexMap::IndexMap(std::vector<Site> sorted_members) : sites_(std::move(sorted_members)) {
  for (std::size_t i = 0; i < sites_.size(); ++i) {
    if (!lookup_.emplace(sites_[i], i).second)
      throw Error(ErrorCode::InvalidArgument, "duplicate site in index map");
  }
}

std::size_t IndexMap::index(const Site& s) const {
  auto it = lookup_.find(s);
  if (it == lookup_.end()) throw Error(ErrorCode::OutOfRegion, "site is not a member of the region");
  return it->second;
}

std::optional<std::size_t> IndexMap::find(const Site& s) const {
  auto it = lookup_.find(s);
  if (it == lookup_.end()) return std::nullopt;
  return it->second;
}

}  // namespace qpb::lattice
