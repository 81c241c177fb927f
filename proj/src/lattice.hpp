/*
 * (C) Copyright 2026 qpbreather developers
 *
 * This software is licensed under the terms of the Apache Licence Version 2.0
 * which can be obtained at http://www.apache.org/licenses/LICENSE-2.0.
 */
#pragma once

// Geometry of the index set Z^b x Z^d: sites (k, n), rectangles, elementary
// regions R_w(i) \ (R_w(i) + z), the resonant set and index maps used when
// assembling matrices.

#include <compare>
#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <vector>

namespace qpb::lattice {

using IntVec = std::vector<int>;

/// A lattice point: k is the frequency multi-index, n the space site.
struct Site {
  IntVec k;
  IntVec n;

  auto operator<=>(const Site&) const = default;
  bool operator==(const Site&) const = default;

  int b() const { return static_cast<int>(k.size()); }
  int d() const { return static_cast<int>(n.size()); }

  /// Sup-norm over all b + d entries.
  int norm() const;
  int k_norm() const;
  int n_norm() const;
  /// Concatenated (k, n).
  IntVec coords() const;
  static Site from_coords(std::span<const int> coords, int b);
};

int sup_norm(std::span<const int> v);

/// Calls fn(v) for every v in [-radius, radius]^dim in lexicographic order.
template <class Fn>
void for_each_point(int radius, int dim, Fn&& fn) {
  IntVec v(dim, -radius);
  if (dim == 0) {
    fn(v);
    return;
  }
  while (true) {
    fn(static_cast<const IntVec&>(v));
    int i = dim - 1;
    while (i >= 0 && v[i] == radius) v[i--] = -radius;
    if (i < 0) return;
    ++v[i];
  }
}

/// |a - b| in the sup norm; both sites must have matching shapes.
int distance(const Site& a, const Site& b);
Site negate_k(const Site& s);

/// The 2b sites (+-e_l, n^(l)).
class ResonantSet {
 public:
  ResonantSet() = default;
  /// Throws InvalidAnchors when two anchors coincide or shapes disagree.
  explicit ResonantSet(std::vector<IntVec> anchors);

  int b() const { return static_cast<int>(anchors_.size()); }
  const std::vector<IntVec>& anchors() const { return anchors_; }
  const std::vector<Site>& members() const { return members_; }
  bool contains(const Site& s) const;
  /// Index l of the anchor equal to n, if any.
  std::optional<int> anchor_index(std::span<const int> n) const;

 private:
  std::vector<IntVec> anchors_;
  std::vector<Site> members_;
};

/// R_w(center) \ (R_w(center) + shift), minus an optional excluded set.
/// An all-zero shift denotes the full rectangle.
struct RegionSpec {
  Site base_center;
  IntVec half_widths;
  IntVec shift;
  std::optional<ResonantSet> excluded;

  int b() const { return base_center.b(); }
  int d() const { return base_center.d(); }
  int dim() const { return b() + d(); }

  bool is_full_rectangle() const;
  bool contains(const Site& s) const;
  /// Copy translated by (dk, dn).
  RegionSpec translated(std::span<const int> dk, std::span<const int> dn) const;
};

RegionSpec cube(int L, int b, int d);
RegionSpec cube_excluding(int L, const ResonantSet& excluded, int d);
RegionSpec rectangle(const Site& center, IntVec half_widths);

/// Lexicographically ordered members. Throws EmptyRegion.
std::vector<Site> region_members(const RegionSpec& spec);
/// Sup-norm diameter of an explicit member list (0 for a single site).
int diameter(std::span<const Site> members);

/// Bijection between the members of a region and 0..N-1.
class IndexMap {
 public:
  explicit IndexMap(const RegionSpec& spec);
  explicit IndexMap(std::vector<Site> sorted_members);

  std::size_t size() const { return sites_.size(); }
  const Site& site(std::size_t i) const { return sites_.at(i); }
  const std::vector<Site>& sites() const { return sites_; }
  /// Throws OutOfRegion.
  std::size_t index(const Site& s) const;
  std::optional<std::size_t> find(const Site& s) const;

 private:
  std::vector<Site> sites_;
  std::map<Site, std::size_t> lookup_;
};

}  // namespace qpb::lattice
