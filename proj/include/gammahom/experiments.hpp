#pragma once

// Scenario runner behind the CLI: each scenario computes a table or record,
// writes it under an output directory, and grades itself with checks that
// are recomputed from the written files rather than from live state.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"

#include "gammahom/cell.hpp"
#include "gammahom/common.hpp"
#include "gammahom/energy.hpp"
#include "gammahom/geodesic.hpp"
#include "gammahom/grid.hpp"
#include "gammahom/minimize.hpp"
#include "gammahom/potential.hpp"

namespace gammahom {

using json = nlohmann::json;

struct CheckResult {
  std::string name;
  bool pass = false;
  double measured = 0.0;
  double bound = 0.0;
};

struct ScenarioOutcome {
  std::string scenario;
  std::vector<CheckResult> checks;

  bool all_pass() const {
    for (const auto& c : checks)
      if (!c.pass) return false;
    return true;
  }
};

namespace detail {

inline void parallel_for(int n, int jobs, const std::function<void(int)>& fn) {
  jobs = std::max(1, std::min(jobs, n));
  if (jobs == 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  pool.reserve(static_cast<size_t>(jobs));
  for (int t = 0; t < jobs; ++t)
    pool.emplace_back([&] {
      for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1)) fn(i);
    });
  for (auto& th : pool) th.join();
}

inline void write_text_file(const std::string& path, const std::string& content) {
  std::FILE* f = std::fopen(path.c_str(), "wb");
  if (!f) throw BadConfig("cannot open for writing: " + path);
  const size_t n = std::fwrite(content.data(), 1, content.size(), f);
  std::fclose(f);
  if (n != content.size()) throw BadConfig("short write: " + path);
}

inline std::string read_text_file(const std::string& path) {
  std::FILE* f = std::fopen(path.c_str(), "rb");
  if (!f) throw BadConfig("cannot open for reading: " + path);
  std::string out;
  char buf[1 << 14];
  size_t n;
  while ((n = std::fread(buf, 1, sizeof buf, f)) > 0) out.append(buf, n);
  std::fclose(f);
  return out;
}

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};

inline void write_csv(const std::string& path, const std::vector<std::string>& header,
                      const std::vector<std::vector<double>>& rows) {
  std::string out;
  for (size_t i = 0; i < header.size(); ++i) {
    if (i) out += ',';
    out += header[i];
  }
  out += '\n';
  for (const auto& row : rows) {
    for (size_t i = 0; i < row.size(); ++i) {
      if (i) out += ',';
      out += fmt_g17(row[i]);
    }
    out += '\n';
  }
  write_text_file(path, out);
}

inline CsvTable read_csv(const std::string& path) {
  const std::string text = read_text_file(path);
  CsvTable table;
  size_t pos = 0;
  bool first = true;
  while (pos < text.size()) {
    size_t eol = text.find('\n', pos);
    if (eol == std::string::npos) eol = text.size();
    const std::string line = text.substr(pos, eol - pos);
    pos = eol + 1;
    if (line.empty()) continue;
    std::vector<std::string> fields;
    size_t f0 = 0;
    while (true) {
      const size_t comma = line.find(',', f0);
      fields.push_back(line.substr(f0, comma - f0));
      if (comma == std::string::npos) break;
      f0 = comma + 1;
    }
    if (first) {
      table.header = fields;
      first = false;
      continue;
    }
    std::vector<double> row;
    row.reserve(fields.size());
    for (const auto& s : fields) {
      char* end = nullptr;
      const double v = std::strtod(s.c_str(), &end);
      row.push_back(end == s.c_str() ? std::nan("") : v);
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

inline json load_json_file(const std::string& path) {
  return json::parse(read_text_file(path));
}

inline CheckResult make_check(const std::string& name, double measured, double bound,
                              bool pass) {
  CheckResult c;
  c.name = name;
  c.measured = measured;
  c.bound = bound;
  c.pass = pass;
  return c;
}

// measured stays below bound
inline CheckResult check_le(const std::string& name, double measured, double bound) {
  return make_check(name, measured, bound, measured <= bound);
}

inline CheckResult check_ge(const std::string& name, double measured, double bound) {
  return make_check(name, measured, bound, measured >= bound);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Config parsing

inline Potential potential_from_config(const json& pc) {
  const std::string family = pc.value("family", std::string("quartic"));
  if (family == "quartic")
    return make_quartic(pc.value("a", 1.0), pc.value("b", -1.0), pc.value("wobble", 0.0),
                        pc.value("wobble_freq", 1));
  if (family == "min_squares")
    return make_min_squares(pc.value("a", 1.0), pc.value("b", -1.0),
                            pc.value("wobble", 0.0), pc.value("wobble_freq", 1));
  if (family == "bz") return make_bz(pc.value("k", 0.3));
  if (family == "quartic2") {
    const auto a = pc.value("a2", std::vector<double>{1.0, 0.0});
    const auto b = pc.value("b2", std::vector<double>{-1.0, 0.0});
    if (a.size() != 2 || b.size() != 2)
      throw BadConfig("quartic2 wells need exactly 2 components");
    return make_quartic2(vec2(a[0], a[1]), vec2(b[0], b[1]));
  }
  throw BadConfig("unknown potential family: " + family);
}

inline Microstructure pattern_from_config(const json& pc) {
  const std::string kind = pc.value("kind", std::string("interval"));
  const int m = pc.value("m", 128);
  if (kind == "interval")
    return make_interval_microstructure(m, pc.value("lo", 0.25), pc.value("hi", -0.25));
  if (kind == "uniform")
    return make_uniform_microstructure(pc.value("dim", 1), m, pc.value("take_a", true));
  throw BadConfig("unknown pattern kind: " + kind);
}

inline RecoverySpec recovery_spec_from_config(const json& cfg) {
  RecoverySpec spec;
  spec.base = pattern_from_config(cfg.value("pattern", json::object()));
  if (cfg.value("profile", std::string("geodesic")) == std::string("linear"))
    spec.profile = RecoveryProfile::LinearRamp;
  return spec;
}

inline EnergyParams energy_params_from_config(const json& cfg) {
  EnergyParams params;
  params.delta = cfg.value("delta", 0.25);
  params.eps = params.delta * cfg.value("eps_ratio", 1.0 / 32.0);
  if (cfg.contains("mass") && !cfg["mass"].is_null())
    params.mass_constraint = cfg["mass"].get<double>();
  return params;
}

// ---------------------------------------------------------------------------
// dw: geodesic distance table with metric spot checks

inline ScenarioOutcome run_dw(const json& cfg, uint64_t seed, const std::string& out,
                              int jobs, bool check_only) {
  const Potential pot = potential_from_config(cfg.value("potential", json::object()));
  if (pot.dim_p != 1) throw Unsupported("dw scenario writes scalar state columns");
  const std::string csv_path = out + "/dw.csv";
  const std::string meta_path = out + "/dw.json";

  if (!check_only) {
    const int n_queries = cfg.value("queries", 60);
    const double R = cfg.value("sample_radius", 2.0);
    const double h_p = cfg.value("h_p", 1.0 / 128.0);
    const int n_triples = n_queries / 6;
    const int n_rows = n_queries;

    Rng rng(seed);
    struct Item {
      double y, p, q;
    };
    std::vector<Item> items;
    items.reserve(static_cast<size_t>(n_rows));
    auto push_pair = [&](double y, double p, double q) {
      items.push_back({y, p, q});
      items.push_back({y, q, p});
    };
    for (int t = 0; t < n_triples; ++t) {
      const double y = rng.uniform(-0.5, 0.5);
      const double p = rng.uniform(-R, R);
      const double q = rng.uniform(-R, R);
      const double r = rng.uniform(-R, R);
      push_pair(y, p, q);
      push_pair(y, p, r);
      push_pair(y, r, q);
    }
    while (static_cast<int>(items.size()) < n_rows) {
      const double y = rng.uniform(-0.5, 0.5);
      push_pair(y, rng.uniform(-R, R), rng.uniform(-R, R));
    }
    items.resize(static_cast<size_t>(n_rows));

    std::vector<std::vector<double>> rows(items.size());
    detail::parallel_for(static_cast<int>(items.size()), jobs, [&](int i) {
      const Item& it = items[static_cast<size_t>(i)];
      GeodesicQuery query;
      query.y = vec1(it.y);
      query.p = vec1(it.p);
      query.q = vec1(it.q);
      query.h_p = h_p;
      const auto res = dw(pot, query);
      rows[static_cast<size_t>(i)] = {
          it.y,
          it.p,
          it.q,
          res.distance,
          res.euclidean_length,
          res.z0 ? (*res.z0)[0] : std::nan(""),
          res.tol};
    });
    detail::write_csv(csv_path, {"y", "p", "q", "distance", "euclidean_length", "z0", "tol"},
                      rows);

    json meta;
    meta["length_bound"] = calibrate_length_bound(pot, 200, seed);
    meta["h_p"] = h_p;
    detail::write_text_file(meta_path, meta.dump(2) + "\n");
  }

  const auto table = detail::read_csv(csv_path);
  const json meta = detail::load_json_file(meta_path);
  const double L = meta.at("length_bound").get<double>();
  const double h_p = meta.at("h_p").get<double>();

  ScenarioOutcome outcome;
  outcome.scenario = "dw";

  double max_sym = 0.0, max_tri = -1e300, max_seg = -1e300, max_len = 0.0;
  for (size_t i = 0; i + 1 < table.rows.size(); i += 2)
    max_sym = std::max(max_sym, std::abs(table.rows[i][3] - table.rows[i + 1][3]));
  for (size_t i = 0; i + 5 < table.rows.size(); i += 6) {
    const double d_pq = table.rows[i][3];
    const double d_pr = table.rows[i + 2][3];
    const double d_rq = table.rows[i + 4][3];
    max_tri = std::max(max_tri, d_pq - (d_pr + d_rq + 3.0 * table.rows[i][6]));
  }
  for (const auto& row : table.rows) {
    const detail::Factor f = [&pot, &row](const Vec& s) {
      return std::sqrt(std::max(0.0, eval_W(pot, vec1(row[0]), s)));
    };
    const double chord = detail::segment_cost(f, vec1(row[1]), vec1(row[2]), h_p);
    max_seg = std::max(max_seg, row[3] - (chord + row[6]));
    max_len = std::max(max_len, row[4]);
  }
  outcome.checks.push_back(detail::check_le("symmetry_gap", max_sym, 1e-12));
  outcome.checks.push_back(detail::check_le("triangle_excess", max_tri, 0.0));
  outcome.checks.push_back(detail::check_le("segment_bound_excess", max_seg, 0.0));
  outcome.checks.push_back(detail::check_le("euclidean_length_max", max_len, L));
  return outcome;
}

// ---------------------------------------------------------------------------
// whom: homogenized well table with convexity and zero-set grading

inline ScenarioOutcome run_whom(const json& cfg, uint64_t seed, const std::string& out,
                                int jobs, bool check_only) {
  const Potential pot = potential_from_config(cfg.value("potential", json::object()));
  const MicroGrid micro{1, cfg.value("micro_m", 128)};
  const std::string grid_path = out + "/whom.csv";
  const std::string pairs_path = out + "/whom_pairs.csv";
  const std::string meta_path = out + "/whom.json";

  if (!check_only) {
    const json pg = cfg.value("p_grid", json::object());
    const double lo = pg.value("lo", -1.5);
    const double hi = pg.value("hi", 1.5);
    const int count = pg.value("count", 64);
    if (count < 3) throw BadConfig("p grid needs at least 3 points");

    std::vector<std::vector<double>> rows(static_cast<size_t>(count));
    detail::parallel_for(count, jobs, [&](int i) {
      const double p = lo + (hi - lo) * i / (count - 1);
      const auto res = w_hom(pot, p, micro);
      rows[static_cast<size_t>(i)] = {p, res.value, res.dual_lambda};
    });
    detail::write_csv(grid_path, {"p", "value", "lambda"}, rows);

    const int n_pairs = cfg.value("pairs", 100);
    Rng rng(seed);
    std::vector<std::array<double, 2>> endpoints(static_cast<size_t>(n_pairs));
    for (auto& e : endpoints) {
      e[0] = rng.uniform(lo, hi);
      e[1] = rng.uniform(lo, hi);
    }
    std::vector<std::vector<double>> pair_rows(static_cast<size_t>(n_pairs));
    detail::parallel_for(n_pairs, jobs, [&](int i) {
      const double p1 = endpoints[static_cast<size_t>(i)][0];
      const double p2 = endpoints[static_cast<size_t>(i)][1];
      const double pm = 0.5 * (p1 + p2);
      pair_rows[static_cast<size_t>(i)] = {p1,
                                           p2,
                                           pm,
                                           w_hom(pot, p1, micro).value,
                                           w_hom(pot, p2, micro).value,
                                           w_hom(pot, pm, micro).value};
    });
    detail::write_csv(pairs_path, {"p1", "p2", "pm", "v1", "v2", "vm"}, pair_rows);

    // selection hull zero interval: averages of the pointwise lower and
    // upper well over the cell
    double z_lo = 0.0, z_hi = 0.0;
    for (int li = 0; li < micro.m; ++li) {
      const WellsAt w = eval_wells(pot, vec1(micro_node_y(li, micro.m)));
      z_lo += std::min(w.a[0], w.b[0]) / micro.m;
      z_hi += std::max(w.a[0], w.b[0]) / micro.m;
    }
    json meta;
    meta["zero_set"] = {z_lo, z_hi};
    detail::write_text_file(meta_path, meta.dump(2) + "\n");
  }

  const auto grid = detail::read_csv(grid_path);
  const auto pairs = detail::read_csv(pairs_path);
  const json meta = detail::load_json_file(meta_path);
  const double z_lo = meta.at("zero_set")[0].get<double>();
  const double z_hi = meta.at("zero_set")[1].get<double>();

  ScenarioOutcome outcome;
  outcome.scenario = "whom";

  double max_mid = -1e300;
  for (const auto& row : pairs.rows)
    max_mid = std::max(max_mid, row[5] - 0.5 * (row[3] + row[4]));
  outcome.checks.push_back(detail::check_le("convexity_midpoint_excess", max_mid, 1e-6));

  int zero_mismatches = 0;
  for (const auto& row : grid.rows) {
    const bool is_zero = row[1] <= 1e-6;
    const bool in_hull = row[0] >= z_lo - 1e-6 && row[0] <= z_hi + 1e-6;
    if (is_zero != in_hull) ++zero_mismatches;
  }
  outcome.checks.push_back(
      detail::check_le("zero_set_mismatches", static_cast<double>(zero_mismatches), 0.0));

  double min_value = 1e300;
  for (const auto& row : grid.rows) min_value = std::min(min_value, row[1]);
  outcome.checks.push_back(detail::check_ge("min_value", min_value, -1e-12));
  return outcome;
}

// ---------------------------------------------------------------------------
// h1: constrained interface problem at one mass

inline ScenarioOutcome run_h1(const json& cfg, uint64_t, const std::string& out, int,
                              bool check_only) {
  const Potential pot = potential_from_config(cfg.value("potential", json::object()));
  const MicroGrid micro{1, cfg.value("micro_m", 128)};
  const std::string path = out + "/h1.json";

  if (!check_only) {
    const double p = cfg.value("p", 0.0);
    const auto res = h1_tilde(pot, p, micro, cfg.value("max_interfaces", 6));
    json rec;
    rec["p"] = res.p;
    rec["value"] = res.value;
    rec["slack"] = res.slack;
    rec["interfaces"] = res.interfaces;
    json runs = json::array();
    for (const auto& [label, len] : res.runs) runs.push_back({label, len});
    rec["runs"] = runs;
    detail::write_text_file(path, rec.dump(2) + "\n");
  }

  const json rec = detail::load_json_file(path);
  ScenarioOutcome outcome;
  outcome.scenario = "h1";
  outcome.checks.push_back(
      detail::check_ge("value", rec.at("value").get<double>(), -1e-12));

  // rebuild the selection from the stored run lengths and grade its mass
  double mass = 0.0;
  int li = 0;
  for (const auto& run : rec.at("runs")) {
    const int label = run[0].get<int>();
    for (int t = 0; t < run[1].get<int>(); ++t, ++li) {
      const WellsAt w = eval_wells(pot, vec1(micro_node_y(li, micro.m)));
      mass += (label ? w.a[0] : w.b[0]) / micro.m;
    }
  }
  const bool complete = li == micro.m;
  outcome.checks.push_back(detail::make_check("selection_complete",
                                              static_cast<double>(li), micro.m, complete));
  outcome.checks.push_back(detail::check_le(
      "mass_gap", std::abs(mass - rec.at("p").get<double>()),
      rec.at("slack").get<double>() + 1e-9));
  return outcome;
}

// ---------------------------------------------------------------------------
// energy: one field evaluation with the unfolding identity

inline GridField field_from_config(const json& cfg, const Potential& pot,
                                   const EnergyParams& params, const MacroGrid& macro,
                                   uint64_t seed) {
  const std::string kind = cfg.value("field", std::string("recovery"));
  if (kind == "recovery")
    return build_recovery(pot, recovery_spec_from_config(cfg), params, macro);
  if (kind == "constant") {
    GridField u = make_field(macro, pot.dim_p);
    const double c = cfg.value("constant", 1.0);
    fill_field(u, [&](const Vec&, int) { return c; });
    return u;
  }
  if (kind == "tanh") {
    if (pot.dim_p != 1 || macro.dim != 1)
      throw Unsupported("tanh profile is scalar and 1-D");
    GridField u = make_field(macro);
    const double eps = params.eps;
    fill_field(u, [&](const Vec& x, int) { return std::tanh((x[0] - 0.5) / eps); });
    return u;
  }
  if (kind == "noise") return make_random_init(macro, pot, seed);
  throw BadConfig("unknown field kind: " + kind);
}

inline ScenarioOutcome run_energy(const json& cfg, uint64_t seed, const std::string& out,
                                  int, bool check_only) {
  const std::string path = out + "/energy.json";

  if (!check_only) {
    const Potential pot = potential_from_config(cfg.value("potential", json::object()));
    const EnergyParams params = energy_params_from_config(cfg);
    const MacroGrid macro{cfg.value("dim", 1), cfg.value("macro_n", 512)};
    const GridField u = field_from_config(cfg, pot, params, macro, seed);

    const auto e = energy(pot, u, params);
    const auto re = energy_rescaled(pot, u, params);
    json rec;
    rec["total"] = e.total;
    rec["bulk"] = e.bulk;
    rec["gradient_part"] = e.gradient_part;
    rec["rescaled_total"] = re.total;
    rec["remainder"] = re.remainder;
    rec["per_cell"] = re.per_cell;
    rec["delta"] = params.delta;
    rec["dim"] = macro.dim;
    detail::write_text_file(path, rec.dump(2) + "\n");
  }

  const json rec = detail::load_json_file(path);
  ScenarioOutcome outcome;
  outcome.scenario = "energy";

  const double total = rec.at("total").get<double>();
  const double split_gap =
      std::abs(total - (rec.at("bulk").get<double>() + rec.at("gradient_part").get<double>()));
  outcome.checks.push_back(
      detail::check_le("bulk_gradient_split_gap", split_gap, 1e-12 * (1.0 + total)));

  double cell_measure = 1.0;
  for (int a = 0; a < rec.at("dim").get<int>(); ++a)
    cell_measure *= rec.at("delta").get<double>();
  double resum = rec.at("remainder").get<double>();
  for (const auto& v : rec.at("per_cell")) resum += v.get<double>() * cell_measure;
  outcome.checks.push_back(detail::check_le(
      "unfolding_identity_gap", std::abs(resum - rec.at("rescaled_total").get<double>()),
      0.0));
  outcome.checks.push_back(detail::check_ge("total", total, -1e-12));
  return outcome;
}

// ---------------------------------------------------------------------------
// minimize: projected descent with a written trace

inline ScenarioOutcome run_minimize(const json& cfg, uint64_t seed,
                                    const std::string& out, int, bool check_only) {
  const std::string trace_path = out + "/minimize_trace.csv";
  const std::string path = out + "/minimize.json";

  if (!check_only) {
    const Potential pot = potential_from_config(cfg.value("potential", json::object()));
    const EnergyParams params = energy_params_from_config(cfg);
    const MacroGrid macro{cfg.value("dim", 1), cfg.value("macro_n", 512)};
    json fc = cfg;
    if (!fc.contains("field")) fc["field"] = "noise";
    const GridField init = field_from_config(fc, pot, params, macro, seed);

    SolveOptions opts;
    opts.max_iters = cfg.value("max_iters", 2000);
    opts.grad_tol = cfg.value("grad_tol", 1e-8);
    const auto res = minimize_energy(pot, params, init, opts);

    std::vector<std::vector<double>> rows;
    rows.reserve(res.trace.size());
    for (const auto& t : res.trace)
      rows.push_back({static_cast<double>(t.iter), t.energy, t.grad_norm});
    detail::write_csv(trace_path, {"iter", "energy", "grad_norm"}, rows);

    double mean = 0.0;
    for (double v : res.u.data) mean += v;
    mean /= static_cast<double>(res.u.data.size());
    json rec;
    rec["final_energy"] = res.trace.back().energy;
    rec["iterations"] = res.trace.back().iter;
    rec["converged"] = res.converged;
    rec["stalled"] = res.stalled;
    rec["final_mean"] = mean;
    if (params.mass_constraint) rec["mass_constraint"] = *params.mass_constraint;
    detail::write_text_file(path, rec.dump(2) + "\n");
  }

  const auto trace = detail::read_csv(trace_path);
  const json rec = detail::load_json_file(path);
  ScenarioOutcome outcome;
  outcome.scenario = "minimize";

  double worst_step = -1e300;
  for (size_t i = 1; i < trace.rows.size(); ++i)
    worst_step = std::max(worst_step, trace.rows[i][1] - trace.rows[i - 1][1]);
  outcome.checks.push_back(detail::check_le(
      "trace_monotone_excess", trace.rows.size() > 1 ? worst_step : -1.0, 0.0));
  outcome.checks.push_back(detail::check_le(
      "final_matches_trace",
      std::abs(rec.at("final_energy").get<double>() - trace.rows.back()[1]), 0.0));
  if (rec.contains("mass_constraint"))
    outcome.checks.push_back(detail::check_le(
        "mass_preserved",
        std::abs(rec.at("final_mean").get<double>() -
                 rec.at("mass_constraint").get<double>()),
        1e-10));
  return outcome;
}

// ---------------------------------------------------------------------------
// recovery: one recovery field against the interface problem prediction

inline ScenarioOutcome run_recovery(const json& cfg, uint64_t, const std::string& out,
                                    int, bool check_only) {
  const std::string csv_path = out + "/recovery.csv";
  const std::string path = out + "/recovery.json";

  if (!check_only) {
    const Potential pot = potential_from_config(cfg.value("potential", json::object()));
    const EnergyParams params = energy_params_from_config(cfg);
    const RecoverySpec spec = recovery_spec_from_config(cfg);
    const int d = static_cast<int>(std::lround(1.0 / params.delta));
    const MacroGrid macro{1, d * spec.base.m};
    const GridField u = build_recovery(pot, spec, params, macro);

    std::vector<std::vector<double>> rows;
    rows.reserve(static_cast<size_t>(macro.n));
    for (int64_t j = 0; j < macro.n; ++j)
      rows.push_back({node_coord(u, j), u.at(j)});
    detail::write_csv(csv_path, {"x", "u"}, rows);

    const auto re = energy_rescaled(pot, u, params);
    double pattern_mass = 0.0;
    for (int li = 0; li < spec.base.m; ++li) {
      const WellsAt w = eval_wells(pot, vec1(micro_node_y(li, spec.base.m)));
      pattern_mass += (spec.base.take_a[static_cast<size_t>(li)] ? w.a[0] : w.b[0]) /
                      spec.base.m;
    }
    const auto pred = h1_tilde(pot, pattern_mass, MicroGrid{1, spec.base.m});

    json rec;
    rec["rescaled_total"] = re.total;
    rec["remainder"] = re.remainder;
    rec["per_cell"] = re.per_cell;
    rec["max_cell"] = *std::max_element(re.per_cell.begin(), re.per_cell.end());
    rec["prediction"] = pred.value;
    rec["tolerance"] = cfg.value("tolerance", 0.10);
    detail::write_text_file(path, rec.dump(2) + "\n");
  }

  const json rec = detail::load_json_file(path);
  ScenarioOutcome outcome;
  outcome.scenario = "recovery";
  const double pred = rec.at("prediction").get<double>();
  const double max_cell = rec.at("max_cell").get<double>();
  const double tol = rec.at("tolerance").get<double>();
  outcome.checks.push_back(detail::check_le("prediction_gap", std::abs(max_cell - pred),
                                            tol * std::max(pred, 1e-12)));
  double min_cell = 1e300;
  for (const auto& v : rec.at("per_cell")) min_cell = std::min(min_cell, v.get<double>());
  outcome.checks.push_back(detail::check_ge("min_cell", min_cell, -1e-12));
  return outcome;
}

// ---------------------------------------------------------------------------
// scaling: slope of the recovery energy in the scale ratio

inline ScenarioOutcome run_scaling(const json& cfg, uint64_t, const std::string& out,
                                   int, bool check_only) {
  const std::string csv_path = out + "/scaling.csv";
  const std::string path = out + "/scaling.json";

  if (!check_only) {
    const Potential pot = potential_from_config(cfg.value("potential", json::object()));
    const RecoverySpec spec = recovery_spec_from_config(cfg);
    const std::vector<double> ratios =
        cfg.value("ratios", std::vector<double>{1.0 / 8.0, 1.0 / 16.0, 1.0 / 32.0});
    const auto table = scaling_probe(pot, spec, ratios);

    std::vector<std::vector<double>> rows;
    rows.reserve(table.rows.size());
    for (const auto& r : table.rows)
      rows.push_back({r.ratio, r.rescaled, r.bulk_share, r.gradient_share});
    detail::write_csv(csv_path, {"ratio", "rescaled", "bulk_share", "gradient_share"},
                      rows);

    json rec;
    rec["slope"] = table.slope;
    rec["expect_slope"] = cfg.value("expect_slope", 1.0);
    rec["slope_margin"] = cfg.value("slope_margin", 0.1);
    rec["check_shares"] = cfg.value("check_shares", true);
    detail::write_text_file(path, rec.dump(2) + "\n");
  }

  const auto table = detail::read_csv(csv_path);
  const json rec = detail::load_json_file(path);
  ScenarioOutcome outcome;
  outcome.scenario = "scaling";
  outcome.checks.push_back(detail::check_le(
      "slope_gap",
      std::abs(rec.at("slope").get<double>() - rec.at("expect_slope").get<double>()),
      rec.at("slope_margin").get<double>()));
  if (rec.at("check_shares").get<bool>()) {
    const auto& last = table.rows.back();
    outcome.checks.push_back(
        detail::check_le("bulk_share_gap", std::abs(last[2] - 0.5), 0.15));
    outcome.checks.push_back(
        detail::check_le("gradient_share_gap", std::abs(last[3] - 0.5), 0.15));
  }
  return outcome;
}

// ---------------------------------------------------------------------------
// gamma0: zeroth-order limit, unconstrained minimized energies along a
// delta list with eps = delta^2

inline ScenarioOutcome run_gamma0(const json& cfg, uint64_t seed, const std::string& out,
                                  int jobs, bool check_only) {
  const std::string csv_path = out + "/gamma0.csv";
  const std::string path = out + "/gamma0.json";

  if (!check_only) {
    json pc = cfg.value("potential", json::object());
    if (!pc.contains("wobble")) pc["wobble"] = 0.01;
    const Potential pot = potential_from_config(pc);
    const std::vector<double> deltas =
        cfg.value("deltas", std::vector<double>{0.25, 0.125, 0.0625});
    const int n_seeds = cfg.value("seeds", 4);

    struct Item {
      int di;
      int si;
    };
    std::vector<Item> items;
    for (int di = 0; di < static_cast<int>(deltas.size()); ++di)
      for (int s = 0; s < n_seeds; ++s) items.push_back({di, s});

    std::vector<double> energies(items.size());
    std::vector<GridField> fields(items.size());
    detail::parallel_for(static_cast<int>(items.size()), jobs, [&](int idx) {
      const auto& it = items[static_cast<size_t>(idx)];
      const double delta = deltas[static_cast<size_t>(it.di)];
      const int d = static_cast<int>(std::lround(1.0 / delta));
      const int m = std::max(64, static_cast<int>(std::lround(8.0 / delta)));
      const MacroGrid macro{1, d * m};
      EnergyParams params;
      params.delta = delta;
      params.eps = delta * delta;
      SolveOptions opts;
      opts.max_iters = cfg.value("max_iters", 4000);
      opts.grad_tol = cfg.value("grad_tol", 1e-10);

      // alternate constant and noise starts: noise descends into the pinned
      // local wells, constants reach the basin floor the grading expects
      const uint64_t s = seed + static_cast<uint64_t>(it.si);
      GridField init;
      if (it.si % 2 == 0) {
        Rng rng(s);
        const double mag = rng.uniform(0.3, std::max(0.3, pot.max_well_norm()));
        const double c = it.si % 4 == 0 ? mag : -mag;
        init = make_field(macro, pot.dim_p);
        fill_field(init, [&](const Vec&, int) { return c; });
      } else {
        init = make_random_init(macro, pot, s);
      }
      const auto res = minimize_energy(pot, params, init, opts);
      energies[static_cast<size_t>(idx)] = res.trace.back().energy;
      fields[static_cast<size_t>(idx)] = res.u;
    });

    std::vector<std::vector<double>> rows;
    for (int di = 0; di < static_cast<int>(deltas.size()); ++di) {
      double best = 1e300;
      size_t best_idx = 0;
      for (size_t idx = 0; idx < items.size(); ++idx)
        if (items[idx].di == di && energies[idx] < best) {
          best = energies[idx];
          best_idx = idx;
        }
      const GridField& u = fields[best_idx];
      const double h = 1.0 / static_cast<double>(u.n);
      double pair_const = 0.0, pair_cos = 0.0, pair_sin = 0.0;
      for (int64_t j = 0; j < u.node_count(); ++j) {
        const double x = node_coord(u, j);
        pair_const += u.at(j) * h;
        pair_cos += u.at(j) * std::cos(2.0 * M_PI * x) * h;
        pair_sin += u.at(j) * std::sin(2.0 * M_PI * x) * h;
      }
      const double delta = deltas[static_cast<size_t>(di)];
      rows.push_back({delta, delta * delta, best, pair_const, pair_cos, pair_sin});
    }
    detail::write_csv(csv_path,
                      {"delta", "eps", "best_energy", "pair_const", "pair_cos", "pair_sin"},
                      rows);

    const MicroGrid micro{1, 256};
    double z_lo = 0.0, z_hi = 0.0;
    for (int li = 0; li < micro.m; ++li) {
      const WellsAt w = eval_wells(pot, vec1(micro_node_y(li, micro.m)));
      z_lo += std::min(w.a[0], w.b[0]) / micro.m;
      z_hi += std::max(w.a[0], w.b[0]) / micro.m;
    }
    json rec;
    rec["zero_set"] = {z_lo, z_hi};
    rec["energy_bound"] = cfg.value("energy_bound", 1e-4);
    detail::write_text_file(path, rec.dump(2) + "\n");
  }

  const auto table = detail::read_csv(csv_path);
  const json rec = detail::load_json_file(path);
  ScenarioOutcome outcome;
  outcome.scenario = "gamma0";

  double worst_step = -1e300;
  for (size_t i = 1; i < table.rows.size(); ++i)
    worst_step = std::max(worst_step, table.rows[i][2] - table.rows[i - 1][2]);
  outcome.checks.push_back(detail::make_check(
      "energies_decreasing", worst_step, 0.0, table.rows.size() > 1 && worst_step < 0.0));
  outcome.checks.push_back(detail::check_le("final_energy", table.rows.back()[2],
                                            rec.at("energy_bound").get<double>()));

  const double z_lo = rec.at("zero_set")[0].get<double>();
  const double z_hi = rec.at("zero_set")[1].get<double>();
  double worst_pairing = 0.0;
  for (const auto& row : table.rows) {
    const double excess = std::max(z_lo - 0.05 - row[3], row[3] - (z_hi + 0.05));
    worst_pairing = std::max(worst_pairing, excess);
  }
  outcome.checks.push_back(detail::check_le("pairing_in_zero_set", worst_pairing, 0.0));
  return outcome;
}

// ---------------------------------------------------------------------------
// gamma1: rescaled recovery energies along a ratio list against the
// interface problem value

inline ScenarioOutcome run_gamma1(const json& cfg, uint64_t, const std::string& out,
                                  int jobs, bool check_only) {
  const std::string csv_path = out + "/gamma1.csv";
  const std::string path = out + "/gamma1.json";

  if (!check_only) {
    const Potential pot = potential_from_config(cfg.value("potential", json::object()));
    const RecoverySpec spec = recovery_spec_from_config(cfg);
    const double delta = cfg.value("delta", 0.25);
    const std::vector<double> ratios =
        cfg.value("ratios", std::vector<double>{1.0 / 8.0, 1.0 / 16.0, 1.0 / 32.0});
    const int d = static_cast<int>(std::lround(1.0 / delta));
    const MacroGrid macro{1, d * spec.base.m};

    std::vector<std::vector<double>> rows(ratios.size());
    detail::parallel_for(static_cast<int>(ratios.size()), jobs, [&](int i) {
      EnergyParams params;
      params.delta = delta;
      params.eps = delta * ratios[static_cast<size_t>(i)];
      const GridField u = build_recovery(pot, spec, params, macro);
      const auto re = energy_rescaled(pot, u, params);
      rows[static_cast<size_t>(i)] = {
          ratios[static_cast<size_t>(i)],
          *std::max_element(re.per_cell.begin(), re.per_cell.end()), re.total};
    });
    detail::write_csv(csv_path, {"ratio", "max_cell", "rescaled_total"}, rows);

    double pattern_mass = 0.0;
    for (int li = 0; li < spec.base.m; ++li) {
      const WellsAt w = eval_wells(pot, vec1(micro_node_y(li, spec.base.m)));
      pattern_mass += (spec.base.take_a[static_cast<size_t>(li)] ? w.a[0] : w.b[0]) /
                      spec.base.m;
    }
    json rec;
    rec["prediction"] = h1_tilde(pot, pattern_mass, MicroGrid{1, spec.base.m}).value;
    rec["tolerance"] = cfg.value("tolerance", 0.10);
    detail::write_text_file(path, rec.dump(2) + "\n");
  }

  const auto table = detail::read_csv(csv_path);
  const json rec = detail::load_json_file(path);
  ScenarioOutcome outcome;
  outcome.scenario = "gamma1";

  double worst_step = -1e300;
  for (size_t i = 1; i < table.rows.size(); ++i)
    worst_step = std::max(worst_step, table.rows[i][1] - table.rows[i - 1][1]);
  outcome.checks.push_back(detail::make_check(
      "monotone_decreasing", worst_step, 0.0, table.rows.size() > 1 && worst_step < 0.0));
  const double pred = rec.at("prediction").get<double>();
  outcome.checks.push_back(detail::check_le(
      "prediction_gap", std::abs(table.rows.back()[1] - pred),
      rec.at("tolerance").get<double>() * std::max(pred, 1e-12)));
  return outcome;
}

// ---------------------------------------------------------------------------
// dichotomy: brute-force minimum of the first-order cell value over all
// patterns at small micro resolution

inline ScenarioOutcome run_dichotomy(const json& cfg, uint64_t, const std::string& out,
                                     int jobs, bool check_only) {
  const std::string path = out + "/dichotomy.json";

  if (!check_only) {
    const int m = cfg.value("m", 8);
    if (m < 2 || m > 16) throw BadConfig("dichotomy pattern resolution must be in [2,16]");
    json cases = cfg.value("cases", json::array({
                                        json{{"family", "quartic"}},
                                        json{{"family", "bz"}, {"k", 0.3}},
                                        json{{"family", "bz"}, {"k", 0.0}},
                                    }));

    json out_cases = json::array();
    for (const auto& pc : cases) {
      const Potential pot = potential_from_config(pc);
      const MicroGrid micro{1, m};
      const int n_patterns = 1 << m;
      std::vector<double> values(static_cast<size_t>(n_patterns));
      detail::parallel_for(n_patterns, jobs, [&](int mask) {
        Microstructure ms;
        ms.dim = 1;
        ms.m = m;
        ms.take_a.assign(static_cast<size_t>(m), 0);
        for (int li = 0; li < m; ++li)
          ms.take_a[static_cast<size_t>(li)] = (mask >> li) & 1 ? 1 : 0;
        values[static_cast<size_t>(mask)] = g1(pot, ms, micro);
      });
      int best_mask = 0;
      for (int mask = 1; mask < n_patterns; ++mask)
        if (values[static_cast<size_t>(mask)] < values[static_cast<size_t>(best_mask)])
          best_mask = mask;
      json c;
      c["family"] = pc.value("family", std::string("quartic"));
      if (pc.contains("k")) c["k"] = pc["k"];
      c["min_value"] = values[static_cast<size_t>(best_mask)];
      c["argmin_mask"] = best_mask;
      out_cases.push_back(c);
    }
    json rec;
    rec["m"] = m;
    rec["cases"] = out_cases;
    detail::write_text_file(path, rec.dump(2) + "\n");
  }

  const json rec = detail::load_json_file(path);
  ScenarioOutcome outcome;
  outcome.scenario = "dichotomy";
  for (const auto& c : rec.at("cases")) {
    const std::string family = c.at("family").get<std::string>();
    const double k = c.value("k", 0.0);
    const double v = c.at("min_value").get<double>();
    const bool continuous = family != "bz" || k == 0.0;
    std::string name = family + (family == "bz" ? "_k" + fmt_g17(k) : "") + "_min";
    if (continuous)
      outcome.checks.push_back(detail::check_le(name, v, 1e-6));
    else
      outcome.checks.push_back(detail::check_ge(name, v, 1e-3));
  }
  return outcome;
}

// ---------------------------------------------------------------------------
// verify-assumptions: structural checks on the configured potential

inline ScenarioOutcome run_verify_assumptions(const json& cfg, uint64_t seed,
                                              const std::string& out, int,
                                              bool check_only) {
  const std::string path = out + "/verify.json";

  if (!check_only) {
    const Potential pot = potential_from_config(cfg.value("potential", json::object()));
    const int samples = cfg.value("samples", 20000);
    const AssumptionReport rep = verify_assumptions(pot, samples, seed);

    json rec;
    rec["samples"] = samples;
    rec["violation_count"] = rep.violations.size();
    json viols = json::array();
    const size_t keep = std::min<size_t>(rep.violations.size(), 16);
    for (size_t i = 0; i < keep; ++i) {
      const auto& v = rep.violations[i];
      json y = json::array(), p = json::array();
      for (int d = 0; d < pot.dim_y; ++d) y.push_back(v.y[d]);
      for (int d = 0; d < pot.dim_p; ++d) p.push_back(v.p[d]);
      viols.push_back({{"check", v.check}, {"y", y}, {"p", p}, {"detail", v.detail}});
    }
    rec["violations"] = viols;
    json cr = json::array();
    for (const auto& [r, inf_w] : rep.c_r) cr.push_back(json::array({r, inf_w}));
    rec["c_r"] = cr;
    detail::write_text_file(path, rec.dump(2) + "\n");
  }

  const json rec = detail::load_json_file(path);
  ScenarioOutcome outcome;
  outcome.scenario = "verify-assumptions";
  outcome.checks.push_back(detail::check_le(
      "assumption_violations",
      static_cast<double>(rec.at("violation_count").get<size_t>()), 0.0));
  double min_cr = 1e300;
  for (const auto& pair : rec.at("c_r")) min_cr = std::min(min_cr, pair[1].get<double>());
  outcome.checks.push_back(detail::check_ge("separation_infimum", min_cr, 1e-12));
  return outcome;
}

// ---------------------------------------------------------------------------
// Dispatch and records

inline const std::vector<std::string>& scenario_names() {
  static const std::vector<std::string> names = {
      "dw",      "whom",   "h1",     "energy",    "minimize",           "recovery",
      "scaling", "gamma0", "gamma1", "dichotomy", "verify-assumptions"};
  return names;
}

namespace detail {

inline std::vector<std::string> scenario_outputs(const std::string& name) {
  if (name == "dw") return {"dw.csv", "dw.json"};
  if (name == "whom") return {"whom.csv", "whom_pairs.csv", "whom.json"};
  if (name == "h1") return {"h1.json"};
  if (name == "energy") return {"energy.json"};
  if (name == "minimize") return {"minimize_trace.csv", "minimize.json"};
  if (name == "recovery") return {"recovery.csv", "recovery.json"};
  if (name == "scaling") return {"scaling.csv", "scaling.json"};
  if (name == "gamma0") return {"gamma0.csv", "gamma0.json"};
  if (name == "gamma1") return {"gamma1.csv", "gamma1.json"};
  if (name == "dichotomy") return {"dichotomy.json"};
  if (name == "verify-assumptions") return {"verify.json"};
  throw BadConfig("unknown scenario: " + name);
}

inline json outcome_to_json(const ScenarioOutcome& outcome) {
  json checks = json::array();
  for (const auto& c : outcome.checks) {
    json jc;
    jc["name"] = c.name;
    jc["pass"] = c.pass;
    jc["measured"] = c.measured;
    jc["bound"] = c.bound;
    checks.push_back(jc);
  }
  json rec;
  rec["scenario"] = outcome.scenario;
  rec["checks"] = checks;
  rec["all_pass"] = outcome.all_pass();
  return rec;
}

}  // namespace detail

inline ScenarioOutcome run_scenario(const std::string& name, const json& cfg,
                                    uint64_t seed, const std::string& out, int jobs = 1,
                                    bool check_only = false) {
  if (jobs < 1) throw BadConfig("jobs must be at least 1");
  std::filesystem::create_directories(out);
  const auto t0 = std::chrono::steady_clock::now();

  ScenarioOutcome outcome;
  if (name == "dw")
    outcome = run_dw(cfg, seed, out, jobs, check_only);
  else if (name == "whom")
    outcome = run_whom(cfg, seed, out, jobs, check_only);
  else if (name == "h1")
    outcome = run_h1(cfg, seed, out, jobs, check_only);
  else if (name == "energy")
    outcome = run_energy(cfg, seed, out, jobs, check_only);
  else if (name == "minimize")
    outcome = run_minimize(cfg, seed, out, jobs, check_only);
  else if (name == "recovery")
    outcome = run_recovery(cfg, seed, out, jobs, check_only);
  else if (name == "scaling")
    outcome = run_scaling(cfg, seed, out, jobs, check_only);
  else if (name == "gamma0")
    outcome = run_gamma0(cfg, seed, out, jobs, check_only);
  else if (name == "gamma1")
    outcome = run_gamma1(cfg, seed, out, jobs, check_only);
  else if (name == "dichotomy")
    outcome = run_dichotomy(cfg, seed, out, jobs, check_only);
  else if (name == "verify-assumptions")
    outcome = run_verify_assumptions(cfg, seed, out, jobs, check_only);
  else
    throw BadConfig("unknown scenario: " + name);

  detail::write_text_file(out + "/results.json",
                          detail::outcome_to_json(outcome).dump(2) + "\n");

  if (!check_only) {
    const auto wall_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                             std::chrono::steady_clock::now() - t0)
                             .count();
    json outputs;
    auto files = detail::scenario_outputs(name);
    files.push_back("results.json");
    for (const auto& f : files) {
      char hex[19];
      std::snprintf(hex, sizeof hex, "0x%016llx",
                    static_cast<unsigned long long>(
                        fnv1a64(detail::read_text_file(out + "/" + f))));
      outputs[f] = hex;
    }
    char cfg_hex[19];
    std::snprintf(cfg_hex, sizeof cfg_hex, "0x%016llx",
                  static_cast<unsigned long long>(fnv1a64(cfg.dump())));
    json record;
    record["scenario"] = name;
    record["seed"] = seed;
    record["jobs"] = jobs;
    record["config_fnv64"] = cfg_hex;
    record["outputs"] = outputs;
    record["wall_ms"] = wall_ms;
    detail::write_text_file(out + "/run_record.json", record.dump(2) + "\n");
  }
  return outcome;
}

}  // namespace gammahom
