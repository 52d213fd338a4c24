// usc: command-line driver for carpet graphs, constants, walks, bricks and heat kernels.

#include "usc/io.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <cmath>
#include <filesystem>
#include <iostream>

using namespace usc;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct MissingFile : Error {
  using Error::Error;
};

struct Globals {
  std::string spec_path;
  std::string out = "usc-out";
  std::uint64_t seed = 1;
  int workers = 1;
  std::int64_t max_vertices = 500000;
  double tolerance = 1e-10;
  bool no_cache = false;
};

struct Context {
  Globals g;
  std::vector<std::string> argv;
  RunManifest manifest;

  IfsSpec load(bool lenient = false) const {
    if (g.spec_path.empty()) throw ParseError("--spec is required");
    if (!fs::exists(g.spec_path)) throw MissingFile("spec file not found: " + g.spec_path);
    ParseOptions po;
    po.enforce_n_bounds = !lenient;
    return load_spec(g.spec_path, po);
  }
  SolveOptions solve() const {
    SolveOptions o;
    o.tolerance = g.tolerance;
    return o;
  }
  BuildOptions build() const {
    BuildOptions b;
    b.max_vertices = g.max_vertices;
    return b;
  }
  std::string cache_dir() const { return g.no_cache ? std::string() : (fs::path(g.out) / "cache").string(); }
  std::string path(const std::string& name) const { return (fs::path(g.out) / name).string(); }

  void begin(const IfsSpec& spec, std::vector<int> levels, std::vector<std::uint64_t> seeds = {}) {
    manifest.spec_path = g.spec_path;
    manifest.spec_hash = spec_hash(spec);
    manifest.commands = argv;
    manifest.levels = std::move(levels);
    manifest.seeds = seeds.empty() ? std::vector<std::uint64_t>{g.seed} : std::move(seeds);
    manifest.solve = solve();
    manifest.max_vertices = g.max_vertices;
    manifest.workers = g.workers;
    manifest.out_dir = g.out;
    write_text(path("manifest.json"), manifest.to_json());
  }
};

void say(const std::string& s) { std::cout << s << '\n'; }

std::string fmt(double x, int prec = 6) {
  std::ostringstream os;
  os.precision(prec);
  os << x;
  return os.str();
}

std::int32_t named_source(const CellGraph& cg, const std::string& name) {
  const auto e = cg.lat.extent, s = cg.lat.side, mid = (e - s) / 2;
  std::array<std::int64_t, 3> c;
  if (name == "corner") {
    c = {0, 0, 0};
  } else if (name == "center-face") {
    c = {mid, mid, 0};
  } else if (name == "edge-mid") {
    c = {mid, 0, 0};
  } else {
    try {
      auto v = std::stol(name);
      if (v < 0 || v >= cg.size()) throw Error("source index out of range: " + name);
      return static_cast<std::int32_t>(v);
    } catch (const std::logic_error&) {
      throw ParseError("unknown source '" + name + "' (corner, center-face, edge-mid or an index)");
    }
  }
  CornerIndex idx(cg.lat);
  auto v = idx.find(c);
  if (v < 0) throw Error("source '" + name + "' is not a cell at level " + std::to_string(cg.level));
  return static_cast<std::int32_t>(v);
}

// d_W for heat comes from the R_{n,F} scaling fit over the two finest levels ≤ n.
ScalingFit spectral_dw(GraphStore& store, int n, const SolveOptions& opts) {
  if (n < 2) throw Error("heat needs level ≥ 2 for a two-level resistance fit");
  std::vector<std::pair<int, double>> pts;
  for (int m = std::max(2, n - 1); m <= n; ++m) pts.emplace_back(m, face_resistance(*store.get(m), opts).value);
  if (pts.size() < 2) pts.insert(pts.begin(), {1, face_resistance(*store.get(1), opts).value});
  return scaling_fit(Quantity::rnf, pts, store.spec().N(), store.spec().k);
}

int cmd_validate(Context& ctx) {
  auto spec = ctx.load(true);
  auto rep = validate(spec);
  auto line = [](const char* name, const Verdict& v) {
    say(std::string(name) + ": " + (v.pass ? "pass" : "FAIL  " + v.witness));
  };
  say("spec " + spec.name + " (N=" + std::to_string(spec.N()) + ", k=" + std::to_string(spec.k) + ")");
  line("non_overlapping", rep.non_overlapping);
  line("face_included", rep.face_included);
  line("strong_connectivity", rep.strong_connectivity);
  line("symmetry", rep.symmetry);
  line("n_bounds", rep.n_bounds);
  ctx.begin(spec, {});
  write_text(ctx.path("validation.json"), validation_to_json(spec, rep));
  return rep.pass() ? 0 : 1;
}

int cmd_graph(Context& ctx, int level) {
  auto spec = ctx.load();
  ctx.begin(spec, {level});
  GraphStore store(spec, ctx.build(), ctx.cache_dir());
  auto cg = store.get(level);
  say("level " + std::to_string(level) + ": " + std::to_string(cg->size()) + " vertices, " +
      std::to_string(cg->g.edge_count()) + " edges, max degree " + std::to_string(cg->g.max_degree()) +
      ", connected " + (is_connected(cg->g) ? "yes" : "no"));
  write_text(ctx.path("graph_L" + std::to_string(level) + ".json"), graph_to_json(*cg) + "\n");
  return 0;
}

int cmd_constants(Context& ctx, const std::string& levels_s, const std::string& quantities_s) {
  auto spec = ctx.load();
  auto levels = parse_levels(levels_s);
  auto quantities = split_list(quantities_s);
  for (const auto& q : quantities)
    if (q != "scriptR_tilde" && q != "barR") parse_quantity(q);
  ctx.begin(spec, levels);
  GraphStore store(spec, ctx.build(), ctx.cache_dir());
  auto table = compute_constants(store, levels, quantities, ctx.solve(), ctx.g.workers);
  for (const auto& r : table.rows)
    say("n=" + std::to_string(r.level) + " " + r.quantity + " = " + fmt(r.value, 10) + " (" + r.method + ")");
  write_text(ctx.path("constants.csv"), table.to_csv());
  write_text(ctx.path("constants.json"), table.to_json() + "\n");
  return 0;
}

int cmd_fit(Context& ctx, const std::string& quantity, const std::string& table_path,
            const std::string& levels_s) {
  auto spec = ctx.load();
  auto levels = parse_levels(levels_s);
  auto q = parse_quantity(quantity);
  ctx.begin(spec, levels);
  ConstantsTable table;
  std::string tp = table_path.empty() ? ctx.path("constants.csv") : table_path;
  if (fs::exists(tp)) table = constants_from_csv(read_text(tp));
  auto series = table.series(quantity);
  std::vector<std::pair<int, double>> pts;
  for (auto [n, x] : series)
    if (std::find(levels.begin(), levels.end(), n) != levels.end()) pts.emplace_back(n, x);
  if (pts.size() != levels.size()) {
    GraphStore store(spec, ctx.build(), ctx.cache_dir());
    pts = compute_constants(store, levels, {quantity}, ctx.solve(), ctx.g.workers).series(quantity);
  }
  auto fit = scaling_fit(q, pts, spec.N(), spec.k);
  say(quantity + ": rho = " + fmt(fit.rho) + ", d_H = " + fmt(fit.d_H) + ", d_W = " + fmt(fit.d_W));
  write_text(ctx.path("fit_" + quantity + ".json"), fit_to_json(fit));
  return 0;
}

int cmd_walk(Context& ctx, int n, int paths, double mult) {
  auto spec = ctx.load();
  ctx.begin(spec, {n});
  GraphStore store(spec, ctx.build(), ctx.cache_dir());
  auto cg = store.get(n);
  auto P = build_kernel(*cg);
  auto chk = verify_kernel(P);
  double lam = lambda_n(cg->g, ctx.solve()).value;
  auto A = cg->face_set(0, 0), B = cg->face_set(0, 1);
  auto h = mean_hitting_exact(P, A, ctx.solve());
  auto horizon = walk_horizon(P, lam, mult);
  hitting_mc(h, P, B, paths, horizon, ctx.g.seed, ctx.g.workers);
  auto t71 = theorem71_ratios(store, {n}, ctx.solve()).front();
  auto dn = dirichlet_norm(P, A, lam, ctx.solve());
  say("kernel: exact row sums " + std::string(chk.exact_row_sums ? "yes" : "no") + ", detailed balance " +
      (chk.exact_detailed_balance ? "yes" : "no"));
  say("E[T1] from F(1,1): exact " + fmt(h.exact_mean) + ", MC " + fmt(h.mc_mean) + " ± " + fmt(h.mc_stderr) +
      " (" + std::to_string(h.samples) + " paths, " + std::to_string(h.censored) + " censored)");
  say("t(n) = " + fmt(t71.t) + ", T(n) = " + fmt(t71.T) + ", c2 = " + fmt(dn.c2));
  json j{{"level", n},
         {"lambda", lam},
         {"kernel_hash", P.hash()},
         {"exact_row_sums", chk.exact_row_sums},
         {"exact_detailed_balance", chk.exact_detailed_balance},
         {"horizon", horizon},
         {"seed", ctx.g.seed},
         {"hitting", {{"exact_mean", h.exact_mean}, {"mc_mean", h.mc_mean}, {"mc_stderr", h.mc_stderr},
                      {"paths", h.samples}, {"censored", h.censored}}},
         {"theorem71", {{"t", t71.t}, {"T", t71.T}, {"argmin", t71.argmin}}},
         {"dirichlet_norm", {{"s", dn.s}, {"c2", dn.c2}}}};
  write_text(ctx.path("walk_L" + std::to_string(n) + ".json"), j.dump(2) + "\n");
  return 0;
}

int cmd_wall(Context& ctx, int m, int n, int paths, double mult) {
  auto spec = ctx.load();
  ctx.begin(spec, {m, n});
  GraphStore store(spec, ctx.build(), ctx.cache_dir());
  auto gn = store.get(n);
  auto wall = build_wall(spec, m, *gn, ctx.build());
  auto W = build_wall_kernel(wall, *gn);
  auto C = build_kernel(*gn);
  auto coupling = coupling_identity_check(W, C, wall.fold);
  auto band = lemma52_band(wall, W, 200, ctx.g.seed);
  double lam = lambda_n(gn->g, ctx.solve()).value;
  auto l69 = lemma69_estimate(wall, W, *gn, paths, walk_horizon(W, lam, mult), ctx.g.seed, ctx.g.workers);
  say("wall (" + std::to_string(m) + "," + std::to_string(n) + "): " + std::to_string(wall.size()) + " vertices");
  say("coupling exact " + std::string(coupling.exact ? "yes" : "no") + ", float residual " +
      fmt(coupling.float_residual));
  say("walk form / energy in [" + fmt(band.min_ratio) + ", " + fmt(band.max_ratio) + "], " +
      std::to_string(band.violations) + " violations");
  say("P(tau <= T_{k^m+1}) = " + fmt(l69.estimate) + " (Wilson lower " + fmt(l69.wilson_lower) +
      ", bound " + fmt(l69.bound) + ")");
  json j{{"m", m},
         {"n", n},
         {"vertices", wall.size()},
         {"coupling", {{"exact", coupling.exact}, {"float_residual", coupling.float_residual},
                       {"worst_vertex", coupling.worst_vertex}}},
         {"band", {{"min", band.min_ratio}, {"max", band.max_ratio}, {"samples", band.samples},
                   {"violations", band.violations}}},
         {"lemma69", {{"J", l69.J}, {"paths", l69.paths}, {"successes", l69.successes},
                      {"censored", l69.censored}, {"estimate", l69.estimate},
                      {"wilson_lower", l69.wilson_lower}, {"bound", l69.bound}, {"pass", l69.pass}}}};
  write_text(ctx.path("wall_m" + std::to_string(m) + "_n" + std::to_string(n) + ".json"), j.dump(2) + "\n");
  return 0;
}

int cmd_brick(Context& ctx, const std::string& kind, int n, const std::string& word_s, int L_star) {
  auto spec = ctx.load();
  ctx.begin(spec, {n});
  GraphStore store(spec, ctx.build(), ctx.cache_dir());
  BrickOptions bo;
  bo.solve = ctx.solve();
  bo.strict = false;
  bo.L_star = L_star;
  BrickLadder ladder(store, bo);
  BrickFunction f;
  std::string name = "brick_" + kind + "_L" + std::to_string(n);
  if (kind == "g") {
    f = ladder.g(n);
  } else if (kind == "f") {
    f = ladder.f(n);
  } else if (kind == "cutoff") {
    Word w;
    for (const auto& d : split_list(word_s)) w.push_back(std::stoi(d));
    if (w.empty()) throw ParseError("cutoff needs --word");
    for (int d : w)
      if (d < 0 || d >= spec.N()) throw ParseError("digit out of range in --word");
    f = ladder.cutoff(w, n);
    name += "_w";
    for (int d : w) name += "-" + std::to_string(d);
  } else {
    throw ParseError("brick kind must be g, f or cutoff");
  }
  for (const auto& c : f.certificates)
    say(c.name + ": " + (c.pass ? "pass" : "FAIL") + (c.detail.empty() ? "" : "  " + c.detail));
  say("energy " + fmt(f.energy) + ", energy ratio " + fmt(f.energy_ratio));
  write_text(ctx.path(name + ".json"), f.to_json() + "\n");
  return f.certified() ? 0 : 1;
}

int cmd_heat(Context& ctx, int n, const std::string& sources_s, const std::string& times_s, double theta,
             bool balls, bool besov, bool gzip) {
  auto spec = ctx.load();
  ctx.begin(spec, {n});
  GraphStore store(spec, ctx.build(), ctx.cache_dir());
  auto cg = store.get(n);
  auto P = build_kernel(*cg);
  auto dw = spectral_dw(store, n, ctx.solve());
  double lam = lambda_n(cg->g, ctx.solve()).value;
  auto [lo, hi] = diffusive_window(P, lam, theta);
  std::vector<std::int32_t> sources;
  for (const auto& s : split_list(sources_s)) sources.push_back(named_source(*cg, s));
  std::vector<std::int64_t> times;
  if (times_s == "dyadic") {
    times = dyadic_times(hi);
  } else {
    for (const auto& t : split_list(times_s)) times.push_back(std::stoll(t));
    std::sort(times.begin(), times.end());
  }
  HeatOptions ho;
  ho.theta = theta;
  ho.workers = ctx.g.workers;
  ho.level = n;
  ho.time_scale = lam;
  ho.space_scale = 1.0 / static_cast<double>(int_pow(spec.k, n));
  auto snaps = heat_rows(P, sources, times, ho);
  const std::string tag = "_L" + std::to_string(n);
  auto csv = snapshots_to_csv(snaps);
  if (gzip)
    write_gzip(ctx.path("heat" + tag + ".csv.gz"), csv);
  else
    write_text(ctx.path("heat" + tag + ".csv"), csv);

  std::vector<std::vector<std::int32_t>> dist;
  for (auto s : sources) dist.push_back(bfs_distances(cg->g, s));
  say("d_W = " + fmt(dw.d_W) + " from the R_{n,F} fit; window [" + std::to_string(lo) + ", " +
      std::to_string(hi) + "]");
  json doc{{"d_W_fit", json::parse(fit_to_json(dw))}};
  try {
    auto sg = subgaussian_fit(snaps, P.pi, dist, dw.d_H, dw.d_W, lo, hi);
    say("on-diagonal slope " + fmt(sg.on_slope) + " vs -d_H/d_W = " + fmt(sg.predicted));
    doc["subgaussian"] = json::parse(subgaussian_to_json(sg));
  } catch (const Error& e) {
    say(std::string("sub-Gaussian fit skipped: ") + e.what());
    doc["subgaussian"] = {{"error", e.what()}};
  }
  if (snaps.size() >= 2) {
    auto he = holder_estimate(snaps, cg->g, P.pi, dw.d_W);
    say("Hölder exponent " + fmt(he.beta) + (he.degenerate ? " (degenerate)" : ""));
    doc["holder"] = json::parse(holder_to_json(he));
  }
  if (balls) {
    BallOptions bo;
    bo.seed = ctx.g.seed;
    bo.workers = ctx.g.workers;
    auto br = ball_checks(store, n, dw.d_H, dw.d_W, bo);
    say("ball bands: volume " + fmt(br.volume.ratio()) + ", Poincaré " + fmt(br.poincare.ratio()) +
        ", capacity " + fmt(br.capacity.ratio()));
    write_text(ctx.path("balls" + tag + ".json"), balls_to_json(br));
  }
  if (besov) {
    BrickOptions bo;
    bo.solve = ctx.solve();
    bo.strict = false;
    BrickLadder ladder(store, bo);
    auto rep = besov_energy(*cg, ladder.f(n).values, besov_radii(spec.k, n), dw.d_H, dw.d_W);
    say("Besov sup I_r / normalized energy = " + fmt(rep.ratio));
    doc["besov"] = json::parse(besov_to_json(rep));
  }
  write_text(ctx.path("heat_fit" + tag + ".json"), doc.dump(2) + "\n");
  return 0;
}

int cmd_report(Context& ctx) {
  json artifacts = json::object();
  std::vector<fs::path> files;
  if (fs::exists(ctx.g.out))
    for (const auto& e : fs::directory_iterator(ctx.g.out))
      if (e.is_regular_file() && e.path().extension() == ".json") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  for (const auto& p : files) {
    auto name = p.filename().string();
    if (name == "report.json" || name.rfind("graph_", 0) == 0 || name.rfind("brick_", 0) == 0) continue;
    auto doc = json::parse(read_text(p.string()));
    if (doc.contains("samples")) doc.erase("samples");
    artifacts[name] = std::move(doc);
  }
  say(std::to_string(artifacts.size()) + " artifacts summarized");
  write_text(ctx.path("report.json"), json{{"artifacts", artifacts}}.dump(2) + "\n");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Unconstrained Sierpinski carpet toolkit"};
  app.require_subcommand(1);
  Context ctx;
  for (int i = 1; i < argc; ++i) ctx.argv.emplace_back(argv[i]);
  auto& g = ctx.g;
  app.add_option("--spec", g.spec_path, "carpet description (JSON)");
  app.add_option("--out", g.out, "output directory")->capture_default_str();
  app.add_option("--seed", g.seed, "master seed")->capture_default_str();
  app.add_option("--workers", g.workers, "worker threads")->capture_default_str()->check(CLI::PositiveNumber);
  app.add_option("--max-vertices", g.max_vertices, "vertex budget per graph")->capture_default_str();
  app.add_option("--tolerance", g.tolerance, "solver relative tolerance")->capture_default_str();
  app.add_flag("--no-cache", g.no_cache, "ignore and do not write graph caches");

  std::function<int()> run;

  app.add_subcommand("validate", "check the five carpet conditions")->callback([&] {
    run = [&] { return cmd_validate(ctx); };
  });

  auto* graph = app.add_subcommand("graph", "build a level-n cell graph");
  int graph_level = 1;
  graph->add_option("--level", graph_level)->required();
  graph->callback([&] { run = [&] { return cmd_graph(ctx, graph_level); }; });

  auto* constants = app.add_subcommand("constants", "compute λₙ, R_{n,F}, 𝓡ₙ, σₘ, R-probes");
  std::string levels = "1..3", quantities = "lambda,rnf,scriptR";
  constants->add_option("--levels", levels)->capture_default_str();
  constants->add_option("--quantities", quantities)->capture_default_str();
  constants->callback([&] { run = [&] { return cmd_constants(ctx, levels, quantities); }; });

  auto* fit = app.add_subcommand("fit", "fit ρ and d_W from a constants table");
  std::string fit_q = "rnf", fit_table, fit_levels = "2..3";
  fit->add_option("--quantity", fit_q)->capture_default_str();
  fit->add_option("--table", fit_table, "constants.csv (default: <out>/constants.csv)");
  fit->add_option("--levels", fit_levels)->capture_default_str();
  fit->callback([&] { run = [&] { return cmd_fit(ctx, fit_q, fit_table, fit_levels); }; });

  int walk_level = 2, paths = 10000;
  double mult = 50.0;
  auto* walk = app.add_subcommand("walk", "cell-graph walk: kernel checks, hitting times, Monte Carlo");
  walk->add_option("--level", walk_level)->capture_default_str();
  walk->add_option("--paths", paths)->capture_default_str();
  walk->add_option("--horizon-mult", mult)->capture_default_str();
  walk->callback([&] { run = [&] { return cmd_walk(ctx, walk_level, paths, mult); }; });

  int wall_m = 1, wall_n = 2, wall_paths = 20000;
  auto* wall = app.add_subcommand("wall", "wall graph: coupling, walk-form band, layer crossing");
  wall->add_option("--m", wall_m)->capture_default_str();
  wall->add_option("--level", wall_n, "n")->capture_default_str();
  wall->add_option("--paths", wall_paths)->capture_default_str();
  wall->add_option("--horizon-mult", mult)->capture_default_str();
  wall->callback([&] { run = [&] { return cmd_wall(ctx, wall_m, wall_n, wall_paths, mult); }; });

  std::string brick_kind, word;
  int brick_level = 1, L_star = 10;
  auto* brick = app.add_subcommand("brick", "g_m, f_n or cut-off functions with certificates");
  brick->add_option("kind", brick_kind, "g | f | cutoff")->required()->check(CLI::IsMember({"g", "f", "cutoff"}));
  brick->add_option("--level", brick_level)->required();
  brick->add_option("--word", word, "comma-separated digits (cutoff)");
  brick->add_option("--L-star", L_star)->capture_default_str();
  brick->callback([&] { run = [&] { return cmd_brick(ctx, brick_kind, brick_level, word, L_star); }; });

  int heat_level = 3;
  std::string sources = "corner,center-face", times = "dyadic";
  double theta = 0.5;
  bool balls = false, besov = false, gzip = false;
  auto* heat = app.add_subcommand("heat", "lazy heat kernel rows and shape fits");
  heat->add_option("--level", heat_level)->capture_default_str();
  heat->add_option("--sources", sources)->capture_default_str();
  heat->add_option("--times", times, "dyadic or a comma list")->capture_default_str();
  heat->add_option("--theta", theta)->capture_default_str()->check(CLI::Range(0.0, 1.0));
  heat->add_flag("--balls", balls, "ball volume, Poincaré and capacity bands");
  heat->add_flag("--besov", besov, "Besov functional of the f_n brick");
  heat->add_flag("--gzip", gzip, "gzip the snapshot CSV");
  heat->callback([&] {
    run = [&] { return cmd_heat(ctx, heat_level, sources, times, theta, balls, besov, gzip); };
  });

  app.add_subcommand("report", "summarize the JSON artifacts in --out")->callback([&] {
    run = [&] { return cmd_report(ctx); };
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }
  try {
    return run();
  } catch (const BudgetExceeded& e) {
    std::cerr << "budget exceeded: " << e.what() << '\n';
    return 3;
  } catch (const MissingFile& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const ParseError& e) {
    std::cerr << "parse error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
