#pragma once

#include "usc/io.hpp"

#include <gtest/gtest.h>

#include <string>

namespace usc::test {

inline std::string data_path(const std::string& name) { return std::string(USC_DATA_DIR) + "/" + name; }

inline const IfsSpec& carpet() {
  static const IfsSpec spec = load_spec(data_path("carpet26.json"));
  return spec;
}

inline IfsSpec menger() {
  ParseOptions po;
  po.enforce_n_bounds = false;
  return load_spec(data_path("menger.json"), po);
}

inline GraphStore& store() {
  static GraphStore s(carpet());
  return s;
}

// Digit of the level-1 cell with translation c.
inline int digit_at(const IfsSpec& spec, const Point& c) {
  for (int i = 0; i < spec.N(); ++i)
    if (spec.cells[i] == c) return i;
  return -1;
}

inline Point pt(int a, int b, int c, int den = 3) { return {Rational(a, den), Rational(b, den), Rational(c, den)}; }

}  // namespace usc::test
