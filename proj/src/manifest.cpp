#include "sgsim/manifest.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <utility>
#include <vector>

#include <json.hpp>

namespace sgsim {

namespace {

using nlohmann::json;

[[noreturn]] void missing(const std::string& key) {
  throw parse_error("manifest: missing required field '" + key + "'");
}

const json& require(const json& j, const std::string& key) {
  const auto it = j.find(key);
  if (it == j.end()) missing(key);
  return *it;
}

double number_at(const json& j, const std::string& key) {
  const json& v = require(j, key);
  if (!v.is_number()) throw parse_error("manifest: '" + key + "' must be a number");
  return v.get<double>();
}

double number_or(const json& j, const std::string& key, double fallback) {
  const auto it = j.find(key);
  if (it == j.end()) return fallback;
  if (!it->is_number())
    throw parse_error("manifest: '" + key + "' must be a number");
  return it->get<double>();
}

std::string text_at(const json& j, const std::string& key) {
  const json& v = require(j, key);
  if (!v.is_string()) throw parse_error("manifest: '" + key + "' must be a string");
  return v.get<std::string>();
}

OrderPair order_at(const json& j, const std::string& key) {
  const json& v = require(j, key);
  if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number())
    throw parse_error("manifest: '" + key + "' must be a pair of numbers");
  return {v[0].get<double>(), v[1].get<double>()};
}

GridPtr parse_grid(const json& j) {
  const json& g = require(j, "grid");
  const int dim = static_cast<int>(number_at(g, "dim"));
  const int n = static_cast<int>(number_at(g, "n"));
  return make_grid(dim, n, number_at(g, "half_width"));
}

SgSymbol parse_generator(const json& j) {
  const json& g = require(j, "generator");
  SgSymbol a = SgSymbol::from_expr_text(text_at(g, "expr"), order_at(g, "order"));
  if (g.contains("hypo_order")) a.set_hypo_order(order_at(g, "hypo_order"));
  return a;
}

NemytskiiFn parse_coefficient(const json& j, const std::string& key, GridPtr grid) {
  const json& c = require(j, key);
  LipParams lip{};
  if (c.contains("lip")) {
    const json& l = c.at("lip");
    if (!l.is_array() || l.size() != 4)
      throw parse_error("manifest: '" + key + ".lip' must be [z, zeta, r, rho]");
    lip = {l[0].get<double>(), l[1].get<double>(), l[2].get<double>(),
           l[3].get<double>()};
  }
  NemytskiiFn fn = NemytskiiFn::from_expr_text(text_at(c, "expr"), lip,
                                               number_or(c, "modulus", 1.0));
  if (c.contains("ball_radius"))
    fn.restrict_to_ball(number_at(c, "ball_radius"), Field(std::move(grid)));
  if (c.contains("preserves_real") && c.at("preserves_real").get<bool>())
    fn.declare_preserves_real();
  return fn;
}

Field parse_initial_state(const json& j, const GridPtr& grid) {
  const json& u = require(j, "u0");
  if (u.contains("file")) return read_field(text_at(u, "file"));
  const Expr e = Expr::parse(text_at(u, "expr"));
  if (e.uses_xi() || e.uses_u())
    throw parse_error("manifest: 'u0.expr' must depend on x only");
  if (e.max_coord_dim() > grid->dim())
    throw parse_error("manifest: 'u0.expr' references a coordinate beyond the grid");
  return Field::from_function(grid, [&e](std::span<const double> x) {
    EvalCtx ctx;
    ctx.x = x;
    return e.eval(ctx);
  });
}

SpectralMeasure parse_measure(const json& j, GridPtr grid) {
  const json& m = require(j, "measure");
  std::vector<SpectralMeasure::Atom> atoms;
  if (m.contains("atoms")) {
    for (const json& a : m.at("atoms")) {
      SpectralMeasure::Atom atom;
      for (const json& c : require(a, "location")) atom.location.push_back(c.get<double>());
      atom.mass = number_at(a, "mass");
      atoms.push_back(std::move(atom));
    }
  }
  if (m.contains("density"))
    return SpectralMeasure::from_density_expr(std::move(grid),
                                              text_at(m, "density"), std::move(atoms));
  if (atoms.empty())
    throw parse_error("manifest: 'measure' needs a density, atoms, or both");
  return SpectralMeasure::atoms_only(std::move(grid), std::move(atoms));
}

SolverConfig parse_config(const json& j) {
  SolverConfig cfg;
  if (!j.contains("config")) return cfg;
  const json& c = j.at("config");
  cfg.dt = number_or(c, "dt", cfg.dt);
  cfg.k_modes = static_cast<int>(number_or(c, "k_modes", cfg.k_modes));
  cfg.tolerance = number_or(c, "tolerance", cfg.tolerance);
  cfg.max_iterations =
      static_cast<int>(number_or(c, "max_iterations", cfg.max_iterations));
  cfg.n_paths = static_cast<int>(number_or(c, "n_paths", cfg.n_paths));
  if (c.contains("seed")) cfg.seed = c.at("seed").get<std::uint64_t>();
  cfg.threads = static_cast<int>(number_or(c, "threads", cfg.threads));
  return cfg;
}

}  // namespace

RunManifest parse_manifest(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw parse_error(std::string("manifest: invalid JSON: ") + e.what());
  }
  try {
    GridPtr grid = parse_grid(j);
    CauchyProblemSpec problem{parse_generator(j),
                              parse_coefficient(j, "gamma", grid),
                              parse_coefficient(j, "sigma", grid),
                              parse_initial_state(j, grid),
                              parse_measure(j, grid),
                              number_at(j, "horizon")};
    if (j.contains("index")) {
      const json& idx = j.at("index");
      problem.index = {number_at(idx, "z"), number_at(idx, "zeta")};
    }
    problem.kappa = number_or(j, "kappa", 0.0);
    problem.lambda = number_or(j, "lambda", 0.0);
    return RunManifest{std::move(problem), parse_config(j)};
  } catch (const json::exception& e) {
    throw parse_error(std::string("manifest: ") + e.what());
  }
}

RunManifest load_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw io_error("manifest: cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_manifest(buf.str());
}

void write_moment_csv(const MomentReport& rep, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw io_error("moment table: cannot write '" + path + "'");
  char line[160];
  std::snprintf(line, sizeof line,
                "# t0=%.17g n_paths_requested=%d n_paths_used=%d n_failures=%d "
                "worst_q_hat=%.17g\n",
                rep.t0, rep.n_paths_requested, rep.n_paths_used, rep.n_failures,
                rep.worst_q_hat);
  out << line << "time,mean_sq,se\n";
  for (std::size_t k = 0; k < rep.times.size(); ++k) {
    std::snprintf(line, sizeof line, "%.17g,%.17g,%.17g\n", rep.times[k],
                  rep.mean_sq[k], rep.se[k]);
    out << line;
  }
  if (!out) throw io_error("moment table: write failed for '" + path + "'");
}

MomentReport read_moment_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw io_error("moment table: cannot open '" + path + "'");
  MomentReport rep;
  std::string line;
  if (!std::getline(in, line) || line.rfind("# ", 0) != 0)
    throw parse_error("moment table: missing header in '" + path + "'");
  if (std::sscanf(line.c_str(),
                  "# t0=%lg n_paths_requested=%d n_paths_used=%d n_failures=%d "
                  "worst_q_hat=%lg",
                  &rep.t0, &rep.n_paths_requested, &rep.n_paths_used,
                  &rep.n_failures, &rep.worst_q_hat) != 5)
    throw parse_error("moment table: malformed header in '" + path + "'");
  if (!std::getline(in, line) || line != "time,mean_sq,se")
    throw parse_error("moment table: malformed column row in '" + path + "'");
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    double t = 0.0, m = 0.0, s = 0.0;
    if (std::sscanf(line.c_str(), "%lg,%lg,%lg", &t, &m, &s) != 3)
      throw parse_error("moment table: malformed row '" + line + "'");
    rep.times.push_back(t);
    rep.mean_sq.push_back(m);
    rep.se.push_back(s);
  }
  return rep;
}

}  // namespace sgsim
