#pragma once

#include "usc/rational.hpp"

#include <array>
#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

namespace usc {

using Point = std::array<Rational, 3>;

// Ψ_i(x) = x/k + cells[i]. Digits are 0-based indices into `cells`.
struct IfsSpec {
  std::string name;
  int k = 0;
  std::vector<Point> cells;
  int N() const { return static_cast<int>(cells.size()); }
};

struct ParseOptions {
  // When false the N range is left to validate()'s n_bounds verdict.
  bool enforce_n_bounds = true;
};

int n_lower_bound(int k);  // 8 + 12(k-2) + 6(k-2)^2
int n_upper_bound(int k);  // k^3 - 1

IfsSpec parse_spec(const std::string& json_text, const ParseOptions& opts = {});
IfsSpec load_spec(const std::string& path, const ParseOptions& opts = {});
std::string spec_to_json(const IfsSpec& spec);
std::uint64_t spec_hash(const IfsSpec& spec);  // FNV-1a of spec_to_json

using Word = std::vector<int>;

std::int64_t int_pow(std::int64_t base, int exponent);
std::int64_t word_index(const Word& w, int N);
Word index_word(std::int64_t index, int length, int N);

struct Box {
  Point corner;
  Rational side;
};

Box cell_box(const IfsSpec& spec, const Word& w);

enum class IntersectionKind { empty, point, segment, rectangle, box };
const char* to_string(IntersectionKind kind);

struct Intersection {
  IntersectionKind kind = IntersectionKind::empty;
  Rational measure;  // length / area / volume; 1 for a point, 0 when empty
  Point lo, hi;      // the intersection box when non-empty
};

Intersection box_intersection(const Box& a, const Box& b);

// x ↦ y with y_i = x_{perm[i]} or 1 - x_{perm[i]} when flip[i].
struct Isometry {
  std::array<int, 3> perm{0, 1, 2};
  std::array<bool, 3> flip{false, false, false};

  static Isometry identity() { return {}; }
  static Isometry reflect(int o);        // Γ_[o], 0-based axis
  static Isometry swap(int o, int o2);   // Γ_[o,o']

  Point apply(const Point& x) const;
  Box apply(const Box& b) const;
  Isometry after(const Isometry& inner) const;  // this ∘ inner
  Isometry inverse() const;
  std::string describe() const;
  bool operator==(const Isometry&) const = default;
};

std::vector<Isometry> all_isometries();  // the 48 elements, fixed order

struct Verdict {
  bool pass = true;
  std::string witness;
  std::vector<int> cells;
};

struct ValidationReport {
  Verdict non_overlapping;
  Verdict face_included;
  Verdict strong_connectivity;
  Verdict symmetry;
  Verdict n_bounds;
  bool pass() const {
    return non_overlapping.pass && face_included.pass && strong_connectivity.pass &&
           symmetry.pass && n_bounds.pass;
  }
};

ValidationReport validate(const IfsSpec& spec);

struct Lemma28Constants {
  Rational c_prime;
  Rational c;  // c_prime^2 / 81
};

Lemma28Constants lemma28_constants(const IfsSpec& spec);
Rational c_star(const IfsSpec& spec);

// σ_g on digits: g(Ψ_i□) = Ψ_{σ(i)}□. Throws if the cell set is not g-invariant.
std::vector<int> digit_permutation(const IfsSpec& spec, const Isometry& g);
Word apply_isometry(const IfsSpec& spec, const Isometry& g, const Word& w);

Rational fold_coordinate(const Rational& t);  // Θ(t) = min |t - 2i|
Point fold_point(const Point& x);
Word fold_word(const IfsSpec& spec, int m, int n, const Word& u);

// Level-L cells on an integer lattice: a corner value v stands for v / extent,
// and every cell has side `side` = q where q is the common denominator of the
// translations.
struct Lattice {
  int k = 0;
  int N = 0;
  int level = 0;
  std::int64_t q = 1;
  std::int64_t side = 1;
  std::int64_t extent = 1;  // q * k^level
  std::vector<std::array<std::int64_t, 3>> digit_offset;  // c_i * q

  std::array<std::int64_t, 3> corner(std::int64_t index) const;
  std::int64_t size() const { return int_pow(N, level); }
  Rational to_rational(std::int64_t units) const { return Rational(units, extent); }
};

Lattice make_lattice(const IfsSpec& spec, int level);

// Corner → level-n index lookup used for folding and isometries at scale.
class CornerIndex {
 public:
  explicit CornerIndex(const Lattice& lat);
  // Returns -1 when no level cell has that corner.
  std::int64_t find(const std::array<std::int64_t, 3>& corner) const;

 private:
  std::unordered_map<std::uint64_t, std::int64_t> map_;
  std::int64_t extent_;
  std::uint64_t key(const std::array<std::int64_t, 3>& c) const;
};

}  // namespace usc
