#include "usc/geometry.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

namespace usc {

namespace {

using boost::multiprecision::denominator;
using boost::multiprecision::numerator;

std::string point_str(const Point& p) {
  return "(" + format_rational(p[0]) + ", " + format_rational(p[1]) + ", " +
         format_rational(p[2]) + ")";
}

std::int64_t to_i64(const BigInt& v) { return v.convert_to<std::int64_t>(); }

}  // namespace

int n_lower_bound(int k) { return 8 + 12 * (k - 2) + 6 * (k - 2) * (k - 2); }
int n_upper_bound(int k) { return k * k * k - 1; }

std::int64_t int_pow(std::int64_t base, int exponent) {
  std::int64_t r = 1;
  for (int i = 0; i < exponent; ++i) r *= base;
  return r;
}

IfsSpec parse_spec(const std::string& json_text, const ParseOptions& opts) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("invalid JSON: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("k") || !doc.contains("cells"))
    throw ParseError("carpet config needs \"k\" and \"cells\"");
  IfsSpec spec;
  spec.name = doc.value("name", std::string("unnamed"));
  if (!doc["k"].is_number_integer()) throw ParseError("\"k\" must be an integer");
  spec.k = doc["k"].get<int>();
  if (spec.k < 3) throw ParseError("k must be at least 3");
  if (!doc["cells"].is_array()) throw ParseError("\"cells\" must be an array");
  Rational hi = Rational(1) - Rational(1, spec.k);
  std::set<Point> seen;
  for (const auto& c : doc["cells"]) {
    if (!c.is_array() || c.size() != 3) throw ParseError("each cell needs 3 coordinates");
    Point p;
    for (int o = 0; o < 3; ++o) {
      if (!c[o].is_string()) throw ParseError("coordinates must be \"p/q\" strings");
      p[o] = parse_rational(c[o].get<std::string>());
      if (p[o] < 0 || p[o] > hi)
        throw ParseError("translation " + c.dump() + " outside [0," + format_rational(hi) +
                         "]^3");
    }
    if (!seen.insert(p).second) throw ParseError("duplicate cell " + c.dump());
    spec.cells.push_back(p);
  }
  if (opts.enforce_n_bounds) {
    int N = spec.N();
    if (N < n_lower_bound(spec.k) || N > n_upper_bound(spec.k))
      throw ParseError("N=" + std::to_string(N) + " outside [" +
                       std::to_string(n_lower_bound(spec.k)) + ", " +
                       std::to_string(n_upper_bound(spec.k)) + "]");
  }
  return spec;
}

IfsSpec load_spec(const std::string& path, const ParseOptions& opts) {
  std::ifstream in(path);
  if (!in) throw std::ios_base::failure("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_spec(ss.str(), opts);
}

std::string spec_to_json(const IfsSpec& spec) {
  nlohmann::json doc;
  doc["name"] = spec.name;
  doc["k"] = spec.k;
  doc["cells"] = nlohmann::json::array();
  for (const auto& c : spec.cells)
    doc["cells"].push_back(
        {format_rational(c[0]), format_rational(c[1]), format_rational(c[2])});
  return doc.dump();
}

std::uint64_t spec_hash(const IfsSpec& spec) {
  // Name excluded: two configs with the same geometry share caches.
  IfsSpec anon = spec;
  anon.name.clear();
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char ch : spec_to_json(anon)) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  return h;
}

std::int64_t word_index(const Word& w, int N) {
  std::int64_t idx = 0;
  for (int d : w) {
    if (d < 0 || d >= N) throw Error("digit " + std::to_string(d) + " out of range");
    idx = idx * N + d;
  }
  return idx;
}

Word index_word(std::int64_t index, int length, int N) {
  Word w(length);
  for (int j = length - 1; j >= 0; --j) {
    w[j] = static_cast<int>(index % N);
    index /= N;
  }
  return w;
}

Box cell_box(const IfsSpec& spec, const Word& w) {
  Box b{{Rational(0), Rational(0), Rational(0)}, Rational(1)};
  Rational scale = 1;
  for (int d : w) {
    if (d < 0 || d >= spec.N()) throw Error("digit " + std::to_string(d) + " out of range");
    for (int o = 0; o < 3; ++o) b.corner[o] += spec.cells[d][o] * scale;
    scale /= spec.k;
  }
  b.side = scale;
  return b;
}

const char* to_string(IntersectionKind kind) {
  switch (kind) {
    case IntersectionKind::empty: return "empty";
    case IntersectionKind::point: return "point";
    case IntersectionKind::segment: return "segment";
    case IntersectionKind::rectangle: return "rectangle";
    case IntersectionKind::box: return "box";
  }
  return "?";
}

Intersection box_intersection(const Box& a, const Box& b) {
  Intersection r;
  int dims = 0;
  Rational measure = 1;
  for (int o = 0; o < 3; ++o) {
    Rational lo = std::max(a.corner[o], b.corner[o]);
    Rational hi = std::min(a.corner[o] + a.side, b.corner[o] + b.side);
    if (hi < lo) {
      r.kind = IntersectionKind::empty;
      r.measure = 0;
      return r;
    }
    r.lo[o] = lo;
    r.hi[o] = hi;
    if (hi > lo) {
      ++dims;
      measure *= hi - lo;
    }
  }
  static const IntersectionKind kinds[] = {IntersectionKind::point, IntersectionKind::segment,
                                           IntersectionKind::rectangle, IntersectionKind::box};
  r.kind = kinds[dims];
  r.measure = measure;
  return r;
}

Isometry Isometry::reflect(int o) {
  Isometry g;
  g.flip[o] = true;
  return g;
}

Isometry Isometry::swap(int o, int o2) {
  Isometry g;
  std::swap(g.perm[o], g.perm[o2]);
  return g;
}

Point Isometry::apply(const Point& x) const {
  Point y;
  for (int i = 0; i < 3; ++i) y[i] = flip[i] ? Rational(1) - x[perm[i]] : x[perm[i]];
  return y;
}

Box Isometry::apply(const Box& b) const {
  Box r;
  r.side = b.side;
  for (int i = 0; i < 3; ++i)
    r.corner[i] = flip[i] ? Rational(1) - b.corner[perm[i]] - b.side : b.corner[perm[i]];
  return r;
}

Isometry Isometry::after(const Isometry& inner) const {
  // (this ∘ inner)(x)_i = f_i(inner(x)_{perm[i]}), inner(x)_j = f'_j(x_{perm'[j]}).
  Isometry r;
  for (int i = 0; i < 3; ++i) {
    r.perm[i] = inner.perm[perm[i]];
    r.flip[i] = flip[i] != inner.flip[perm[i]];
  }
  return r;
}

Isometry Isometry::inverse() const {
  Isometry r;
  for (int i = 0; i < 3; ++i) {
    r.perm[perm[i]] = i;
    r.flip[perm[i]] = flip[i];
  }
  return r;
}

std::string Isometry::describe() const {
  std::string s = "x -> (";
  for (int i = 0; i < 3; ++i) {
    if (i) s += ", ";
    s += (flip[i] ? "1-x" : "x") + std::to_string(perm[i] + 1);
  }
  return s + ")";
}

std::vector<Isometry> all_isometries() {
  std::vector<Isometry> out;
  std::array<int, 3> p{0, 1, 2};
  do {
    for (int mask = 0; mask < 8; ++mask) {
      Isometry g;
      g.perm = p;
      for (int i = 0; i < 3; ++i) g.flip[i] = (mask >> i) & 1;
      out.push_back(g);
    }
  } while (std::next_permutation(p.begin(), p.end()));
  return out;
}

namespace {

std::vector<Box> level1_boxes(const IfsSpec& spec) {
  std::vector<Box> boxes;
  for (int i = 0; i < spec.N(); ++i) boxes.push_back(cell_box(spec, {i}));
  return boxes;
}

bool contains(const Box& b, const Point& p) {
  for (int o = 0; o < 3; ++o)
    if (p[o] < b.corner[o] || p[o] > b.corner[o] + b.side) return false;
  return true;
}

Verdict check_face_cover(const IfsSpec& spec, const std::vector<Box>& boxes) {
  Verdict v;
  Rational side(1, spec.k);
  for (int o = 0; o < 3; ++o) {
    for (int s = 0; s < 2; ++s) {
      int a = (o + 1) % 3, b = (o + 2) % 3;
      Rational plane = s == 0 ? Rational(0) : Rational(1) - side;
      std::vector<std::array<Rational, 2>> squares;
      std::vector<Rational> xs{0, 1}, ys{0, 1};
      for (const auto& bx : boxes) {
        if (bx.corner[o] != plane) continue;
        squares.push_back({bx.corner[a], bx.corner[b]});
        xs.push_back(bx.corner[a]);
        xs.push_back(bx.corner[a] + side);
        ys.push_back(bx.corner[b]);
        ys.push_back(bx.corner[b] + side);
      }
      std::sort(xs.begin(), xs.end());
      xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
      std::sort(ys.begin(), ys.end());
      ys.erase(std::unique(ys.begin(), ys.end()), ys.end());
      for (std::size_t i = 0; i + 1 < xs.size(); ++i) {
        for (std::size_t j = 0; j + 1 < ys.size(); ++j) {
          Rational mx = (xs[i] + xs[i + 1]) / 2, my = (ys[j] + ys[j + 1]) / 2;
          bool covered = std::any_of(squares.begin(), squares.end(), [&](const auto& sq) {
            return sq[0] <= mx && mx <= sq[0] + side && sq[1] <= my && my <= sq[1] + side;
          });
          if (!covered) {
            static const char* axis[] = {"x1", "x2", "x3"};
            v.pass = false;
            v.witness = std::string("face ") + axis[o] + "=" + std::to_string(s) +
                        ": patch " + axis[a] + " in [" + format_rational(xs[i]) + ", " +
                        format_rational(xs[i + 1]) + "], " + axis[b] + " in [" +
                        format_rational(ys[j]) + ", " + format_rational(ys[j + 1]) +
                        "] is not covered";
            return v;
          }
        }
      }
    }
  }
  return v;
}

}  // namespace

ValidationReport validate(const IfsSpec& spec) {
  ValidationReport rep;
  const int N = spec.N();
  auto boxes = level1_boxes(spec);

  for (int i = 0; i < N && rep.non_overlapping.pass; ++i)
    for (int j = i + 1; j < N; ++j) {
      auto x = box_intersection(boxes[i], boxes[j]);
      if (x.kind == IntersectionKind::box) {
        rep.non_overlapping.pass = false;
        rep.non_overlapping.cells = {i, j};
        rep.non_overlapping.witness = "cells " + std::to_string(i) + " and " +
                                      std::to_string(j) + " overlap with volume " +
                                      format_rational(x.measure);
        break;
      }
    }

  rep.face_included = check_face_cover(spec, boxes);

  // Contact graph plus the diagonal-contact test.
  std::vector<int> parent(N);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (int i = 0; i < N; ++i)
    for (int j = i + 1; j < N; ++j) {
      auto x = box_intersection(boxes[i], boxes[j]);
      if (x.kind == IntersectionKind::empty) continue;
      parent[find(i)] = find(j);
      if (x.kind == IntersectionKind::point && rep.strong_connectivity.pass) {
        bool covered = false;
        for (int l = 0; l < N && !covered; ++l)
          if (l != i && l != j && contains(boxes[l], x.lo)) covered = true;
        if (!covered) {
          rep.strong_connectivity.pass = false;
          rep.strong_connectivity.cells = {i, j};
          rep.strong_connectivity.witness = "cells " + std::to_string(i) + " and " +
                                            std::to_string(j) + " meet only at " +
                                            point_str(x.lo) + " (diagonal contact)";
        }
      }
    }
  if (rep.strong_connectivity.pass) {
    for (int i = 1; i < N; ++i)
      if (find(i) != find(0)) {
        rep.strong_connectivity.pass = false;
        rep.strong_connectivity.cells = {0, i};
        rep.strong_connectivity.witness =
            "cells 0 and " + std::to_string(i) + " lie in different contact components";
        break;
      }
  }

  std::set<std::pair<Point, Rational>> box_set;
  for (const auto& b : boxes) box_set.insert({b.corner, b.side});
  for (const auto& g : all_isometries()) {
    bool ok = true;
    for (int i = 0; i < N && ok; ++i) {
      Box gb = g.apply(boxes[i]);
      if (!box_set.count({gb.corner, gb.side})) {
        ok = false;
        rep.symmetry.pass = false;
        rep.symmetry.cells = {i};
        rep.symmetry.witness = "isometry " + g.describe() + " moves cell " + std::to_string(i) +
                               " to a non-cell at " + point_str(gb.corner);
      }
    }
    if (!ok) break;
  }

  if (N < n_lower_bound(spec.k) || N > n_upper_bound(spec.k)) {
    rep.n_bounds.pass = false;
    rep.n_bounds.witness = "N=" + std::to_string(N) + " outside [" +
                           std::to_string(n_lower_bound(spec.k)) + ", " +
                           std::to_string(n_upper_bound(spec.k)) + "]";
  }
  return rep;
}

Lemma28Constants lemma28_constants(const IfsSpec& spec) {
  auto boxes = level1_boxes(spec);
  bool found = false;
  Rational best;
  for (int i = 0; i < spec.N(); ++i)
    for (int j = i + 1; j < spec.N(); ++j) {
      auto x = box_intersection(boxes[i], boxes[j]);
      if (x.kind == IntersectionKind::empty) continue;
      for (int o = 0; o < 3; ++o) {
        Rational len = x.hi[o] - x.lo[o];
        if (len > 0 && (!found || len < best)) {
          best = len;
          found = true;
        }
      }
    }
  if (!found) throw Error("no cell pair has an intersection with positive projection");
  Lemma28Constants r;
  r.c_prime = best * spec.k;
  r.c = r.c_prime * r.c_prime / 81;
  return r;
}

Rational c_star(const IfsSpec& spec) {
  auto boxes = level1_boxes(spec);
  bool found = false;
  Rational best_sq;
  for (int i = 0; i < spec.N(); ++i)
    for (int j = i + 1; j < spec.N(); ++j) {
      Rational d2 = 0;
      for (int o = 0; o < 3; ++o) {
        Rational right = boxes[j].corner[o] - (boxes[i].corner[o] + boxes[i].side);
        Rational left = boxes[i].corner[o] - (boxes[j].corner[o] + boxes[j].side);
        Rational gap = std::max({Rational(0), right, left});
        d2 += gap * gap;
      }
      if (d2 > 0 && (!found || d2 < best_sq)) {
        best_sq = d2;
        found = true;
      }
    }
  Rational half(1, 2);
  if (!found) return half;
  Rational scaled = sqrt_lower(best_sq * spec.k * spec.k);
  return std::min(half, scaled);
}

std::vector<int> digit_permutation(const IfsSpec& spec, const Isometry& g) {
  auto boxes = level1_boxes(spec);
  std::vector<int> sigma(spec.N(), -1);
  for (int i = 0; i < spec.N(); ++i) {
    Box gb = g.apply(boxes[i]);
    for (int j = 0; j < spec.N(); ++j)
      if (boxes[j].corner == gb.corner) {
        sigma[i] = j;
        break;
      }
    if (sigma[i] < 0)
      throw Error("isometry " + g.describe() + " maps cell " + std::to_string(i) +
                  " outside the cell set");
  }
  return sigma;
}

Word apply_isometry(const IfsSpec& spec, const Isometry& g, const Word& w) {
  // g∘Ψ_i = Ψ_{σ(i)}∘g, so the action is digitwise.
  auto sigma = digit_permutation(spec, g);
  Word r(w.size());
  for (std::size_t j = 0; j < w.size(); ++j) r[j] = sigma.at(w[j]);
  return r;
}

Rational fold_coordinate(const Rational& t) {
  // Reduce t mod 2 into [0,2), then reflect (1,2) onto (0,1).
  Rational two = 2;
  Rational q = t / two;
  BigInt fl = numerator(q) / denominator(q);
  if (q < 0 && Rational(fl) != q) fl -= 1;
  Rational r = t - two * Rational(fl);
  return r > 1 ? two - r : r;
}

Point fold_point(const Point& x) {
  return {fold_coordinate(x[0]), fold_coordinate(x[1]), fold_coordinate(x[2])};
}

Word fold_word(const IfsSpec& spec, int m, int n, const Word& u) {
  if (static_cast<int>(u.size()) != m + n) throw Error("fold_word: word length is not m+n");
  Box b = cell_box(spec, u);
  Rational scale = rational_pow(Rational(spec.k), m);
  Point lo, hi;
  for (int o = 0; o < 3; ++o) {
    Rational a = fold_coordinate(b.corner[o] * scale);
    Rational c = fold_coordinate((b.corner[o] + b.side) * scale);
    lo[o] = std::min(a, c);
    hi[o] = std::max(a, c);
  }
  Lattice lat = make_lattice(spec, n);
  for (std::int64_t i = 0; i < lat.size(); ++i) {
    auto c = lat.corner(i);
    bool match = true;
    for (int o = 0; o < 3 && match; ++o)
      match = lat.to_rational(c[o]) == lo[o] &&
              lat.to_rational(c[o] + lat.side) == hi[o];
    if (match) return index_word(i, n, spec.N());
  }
  throw Error("fold_word: folded box matches no level-" + std::to_string(n) + " cell");
}

Lattice make_lattice(const IfsSpec& spec, int level) {
  Lattice lat;
  lat.k = spec.k;
  lat.N = spec.N();
  lat.level = level;
  BigInt q = spec.k;  // keeps side k^-level representable when all c_i are 0
  for (const auto& c : spec.cells)
    for (const auto& x : c) q = boost::multiprecision::lcm(q, denominator(x));
  lat.q = to_i64(q);
  lat.side = lat.q;
  lat.extent = lat.q * int_pow(spec.k, level);
  for (const auto& c : spec.cells) {
    std::array<std::int64_t, 3> a;
    for (int o = 0; o < 3; ++o) a[o] = to_i64(numerator(Rational(c[o] * lat.q)));
    lat.digit_offset.push_back(a);
  }
  return lat;
}

std::array<std::int64_t, 3> Lattice::corner(std::int64_t index) const {
  // corner(w) = sum_j c_{w_j} k^{-(j-1)}; in units 1/(q k^level) this is
  // sum_j a_{w_j} k^{level-j+1}.
  std::array<std::int64_t, 3> acc{0, 0, 0};
  std::int64_t mult = k;
  for (int j = level; j >= 1; --j) {
    int d = static_cast<int>(index % N);
    index /= N;
    for (int o = 0; o < 3; ++o) acc[o] += digit_offset[d][o] * mult;
    mult *= k;
  }
  return acc;
}

CornerIndex::CornerIndex(const Lattice& lat) : extent_(lat.extent) {
  map_.reserve(static_cast<std::size_t>(lat.size()) * 2);
  for (std::int64_t i = 0; i < lat.size(); ++i) map_.emplace(key(lat.corner(i)), i);
}

std::uint64_t CornerIndex::key(const std::array<std::int64_t, 3>& c) const {
  std::uint64_t e = static_cast<std::uint64_t>(extent_) + 1;
  return (static_cast<std::uint64_t>(c[0]) * e + static_cast<std::uint64_t>(c[1])) * e +
         static_cast<std::uint64_t>(c[2]);
}

std::int64_t CornerIndex::find(const std::array<std::int64_t, 3>& corner) const {
  for (auto v : corner)
    if (v < 0 || v > extent_) return -1;
  auto it = map_.find(key(corner));
  return it == map_.end() ? -1 : it->second;
}

}  // namespace usc
