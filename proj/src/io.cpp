#include "usc/io.hpp"

#include <nlohmann/json.hpp>
#include <zlib.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

namespace usc {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const char* method_name(SolveOptions::Method m) {
  switch (m) {
    case SolveOptions::Method::dense: return "dense";
    case SolveOptions::Method::iterative: return "iterative";
    default: return "automatic";
  }
}

SolveOptions::Method parse_method(const std::string& s) {
  if (s == "dense") return SolveOptions::Method::dense;
  if (s == "iterative") return SolveOptions::Method::iterative;
  return SolveOptions::Method::automatic;
}

json band_json(const Band& b) { return {{"min", b.min}, {"max", b.max}, {"ratio", b.ratio()}}; }

}  // namespace

std::string RunManifest::to_json() const {
  json j;
  j["version"] = version;
  j["spec"] = {{"path", spec_path}, {"hash", spec_hash}};
  j["commands"] = commands;
  j["levels"] = levels;
  j["seeds"] = seeds;
  j["solver"] = {{"method", method_name(solve.method)},
                 {"tolerance", solve.tolerance},
                 {"max_iterations", solve.max_iterations},
                 {"dense_limit", solve.dense_limit},
                 {"direct_limit", solve.direct_limit}};
  j["max_vertices"] = max_vertices;
  j["workers"] = workers;
  j["out_dir"] = out_dir;
  return j.dump(2) + "\n";
}

RunManifest RunManifest::from_json(const std::string& text) {
  RunManifest m;
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ParseError(std::string("manifest: ") + e.what());
  }
  m.version = j.value("version", "");
  m.spec_path = j.at("spec").value("path", "");
  m.spec_hash = j.at("spec").value("hash", std::uint64_t{0});
  m.commands = j.value("commands", std::vector<std::string>{});
  m.levels = j.value("levels", std::vector<int>{});
  m.seeds = j.value("seeds", std::vector<std::uint64_t>{});
  if (j.contains("solver")) {
    const auto& s = j["solver"];
    m.solve.method = parse_method(s.value("method", "automatic"));
    m.solve.tolerance = s.value("tolerance", m.solve.tolerance);
    m.solve.max_iterations = s.value("max_iterations", m.solve.max_iterations);
    m.solve.dense_limit = s.value("dense_limit", m.solve.dense_limit);
    m.solve.direct_limit = s.value("direct_limit", m.solve.direct_limit);
  }
  m.max_vertices = j.value("max_vertices", m.max_vertices);
  m.workers = j.value("workers", 1);
  m.out_dir = j.value("out_dir", "");
  return m;
}

void write_text(const std::string& path, const std::string& content) {
  fs::path p(path);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path);
  out << content;
}

void write_gzip(const std::string& path, const std::string& content) {
  fs::path p(path);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  // zlib writes a fixed header (no name, mtime 0), so reruns are byte-identical.
  gzFile f = gzopen(path.c_str(), "wb9");
  if (!f) throw Error("cannot write " + path);
  const char* data = content.data();
  std::size_t left = content.size();
  while (left > 0) {
    unsigned chunk = static_cast<unsigned>(std::min<std::size_t>(left, 1u << 30));
    if (gzwrite(f, data, chunk) != static_cast<int>(chunk)) {
      gzclose(f);
      throw Error("gzip write failed for " + path);
    }
    data += chunk;
    left -= chunk;
  }
  gzclose(f);
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

bool file_exists(const std::string& path) { return fs::exists(path); }

std::vector<std::string> split_list(const std::string& text, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, sep)) {
    auto a = item.find_first_not_of(" \t"), b = item.find_last_not_of(" \t");
    if (a != std::string::npos) out.push_back(item.substr(a, b - a + 1));
  }
  return out;
}

std::vector<int> parse_levels(const std::string& text) {
  std::set<int> levels;
  for (const auto& part : split_list(text, ',')) {
    try {
      auto dots = part.find("..");
      if (dots == std::string::npos) {
        levels.insert(std::stoi(part));
      } else {
        int a = std::stoi(part.substr(0, dots)), b = std::stoi(part.substr(dots + 2));
        if (a > b) throw ParseError("empty level range " + part);
        for (int n = a; n <= b; ++n) levels.insert(n);
      }
    } catch (const std::logic_error&) {
      throw ParseError("bad level list '" + text + "'");
    }
  }
  if (levels.empty() || *levels.begin() < 1) throw ParseError("levels must be positive: '" + text + "'");
  return {levels.begin(), levels.end()};
}

ConstantsTable constants_from_csv(const std::string& csv) {
  ConstantsTable t;
  std::stringstream ss(csv);
  std::string line;
  std::getline(ss, line);
  if (line.rfind("level,quantity,value", 0) != 0) throw ParseError("constants table: bad header");
  while (std::getline(ss, line)) {
    if (line.empty()) continue;
    auto f = split_list(line, ',');
    if (f.size() != 6) throw ParseError("constants table: bad row '" + line + "'");
    ConstantRow r;
    r.level = std::stoi(f[0]);
    r.quantity = f[1];
    r.value = std::stod(f[2]);
    r.method = f[3];
    r.tolerance = std::stod(f[4]);
    r.iterations = std::stoi(f[5]);
    t.rows.push_back(r);
  }
  return t;
}

std::string validation_to_json(const IfsSpec& spec, const ValidationReport& rep) {
  auto v = [](const Verdict& x) {
    json j{{"pass", x.pass}};
    if (!x.pass) j["witness"] = x.witness;
    if (!x.cells.empty()) j["cells"] = x.cells;
    return j;
  };
  json j{{"name", spec.name},
         {"N", spec.N()},
         {"k", spec.k},
         {"pass", rep.pass()},
         {"non_overlapping", v(rep.non_overlapping)},
         {"face_included", v(rep.face_included)},
         {"strong_connectivity", v(rep.strong_connectivity)},
         {"symmetry", v(rep.symmetry)},
         {"n_bounds", v(rep.n_bounds)}};
  return j.dump(2) + "\n";
}

std::string fit_to_json(const ScalingFit& fit) {
  json pts = json::array();
  for (auto [n, x] : fit.points) pts.push_back({n, x});
  json j{{"quantity", to_string(fit.quantity)},
         {"points", pts},
         {"slope", fit.slope},
         {"intercept", fit.intercept},
         {"residual", fit.residual},
         {"rho", fit.rho},
         {"d_H", fit.d_H},
         {"d_W", fit.d_W}};
  return j.dump(2) + "\n";
}

std::string subgaussian_to_json(const SubGaussianFit& fit) {
  json j{{"d_H", fit.d_H},
         {"d_W", fit.d_W},
         {"predicted_slope", fit.predicted},
         {"window", {fit.window_lo, fit.window_hi}},
         {"times", fit.times},
         {"on_diagonal", {{"slope", fit.on_slope}, {"intercept", fit.on_intercept}, {"r2", fit.on_r2},
                          {"per_source", fit.source_slopes}}},
         {"off_diagonal", {{"time", fit.off_time}, {"slope", fit.off_slope},
                           {"intercept", fit.off_intercept}, {"r2", fit.off_r2},
                           {"points", fit.off_points}}},
         {"monotone_violations", fit.monotone_violations}};
  return j.dump(2) + "\n";
}

std::string balls_to_json(const BallCheckReport& rep) {
  json samples = json::array();
  for (const auto& s : rep.samples)
    samples.push_back({{"center", s.center}, {"r", s.r}, {"size", s.size}, {"size2", s.size2},
                       {"volume", s.volume}, {"poincare", s.poincare}, {"capacity", s.capacity},
                       {"tent", s.tent}, {"tent_depth", s.tent_depth}});
  json j{{"level", rep.level},
         {"d_H", rep.d_H},
         {"d_W", rep.d_W},
         {"skipped", rep.skipped},
         {"volume", band_json(rep.volume)},
         {"poincare", band_json(rep.poincare)},
         {"capacity", band_json(rep.capacity)},
         {"tent", band_json(rep.tent)},
         {"samples", samples}};
  return j.dump(2) + "\n";
}

std::string holder_to_json(const HolderEstimate& est) {
  json prof = json::array();
  for (auto [d, o] : est.profile) prof.push_back({d, o});
  return json{{"beta", est.beta}, {"degenerate", est.degenerate}, {"profile", prof}}.dump(2) + "\n";
}

std::string besov_to_json(const BesovReport& rep) {
  json prof = json::array();
  for (auto [r, I] : rep.profile) prof.push_back({r, I});
  json j{{"profile", prof},         {"sup", rep.sup},       {"r_sup", rep.r_sup},
         {"energy", rep.energy},    {"normalized", rep.normalized}, {"ratio", rep.ratio}};
  return j.dump(2) + "\n";
}

}  // namespace usc
