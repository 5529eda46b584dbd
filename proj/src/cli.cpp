#include "frwcap/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "frwcap/engine.hpp"
#include "frwcap/microwalk.hpp"
#include "frwcap/oracle.hpp"
#include "frwcap/sgf.hpp"
#include "frwcap/sgf_cache.hpp"

namespace frwcap {
namespace {

using nlohmann::json;
using Clock = std::chrono::steady_clock;

constexpr int kSchemaVersion = 1;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const size_t m = v.size() / 2;
  return (v.size() % 2) ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

// least-squares slope of y against x
double fit_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const size_t n = x.size();
  double mx = 0, my = 0;
  for (size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double num = 0, den = 0;
  for (size_t i = 0; i < n; ++i) {
    num += (x[i] - mx) * (y[i] - my);
    den += (x[i] - mx) * (x[i] - mx);
  }
  return num / den;
}

// mean total variation distance expected from multinomial sampling noise
double expected_tv(const std::vector<double>& p, long samples) {
  double sum = 0;
  for (double v : p)
    sum += std::sqrt(2.0 * v * (1.0 - v) / (M_PI * samples));
  return 0.5 * sum;
}

void emit_report(const json& report, const std::string& out_path,
                 std::ostream& out) {
  const std::string text = report.dump(2) + "\n";
  if (out_path.empty()) {
    out << text;
    return;
  }
  std::ofstream f(out_path, std::ios::trunc);
  if (!f) throw std::runtime_error("cannot open " + out_path + " for writing");
  f << text;
  if (!f) throw std::runtime_error("short write to " + out_path);
}

json config_json(const Config& cfg, const std::string& structure,
                 int threads) {
  json c;
  c["structure"] = structure;
  c["grid_n"] = cfg.grid_n;
  c["expansion"] = cfg.expansion;
  c["mode"] = mode_name(cfg.mode);
  c["rel_std_tol"] = cfg.rel_std_tol;
  c["min_walks"] = cfg.min_walks;
  c["max_walks"] = cfg.max_walks;
  c["batch"] = cfg.batch;
  c["seed"] = cfg.seed;
  c["snap_tol"] = cfg.snap_tol;
  c["hop_cap"] = cfg.hop_cap;
  c["gaussian_gap_fraction"] = cfg.gaussian_gap_fraction;
  c["world_margin"] = cfg.world_margin;
  c["threads"] = threads;
  return c;
}

json result_json(const CapacitanceResult& r) {
  json terms = json::array();
  for (const TerminalEstimate& t : r.terminals) {
    json e;
    e["conductor_id"] = t.conductor_id;
    e["capacitance_farads"] = t.value;
    e["std_err_farads"] = t.std_err;
    e["walks_landed"] = t.walks_landed;
    terms.push_back(e);
  }
  json first;
  first["stratified"] = r.dispatch.first_stratified;
  first["shrunk"] = r.dispatch.first_shrunk;
  first["layered"] = r.dispatch.first_layered;
  first["homogenized"] = r.dispatch.first_homogenized;
  json sub;
  sub["cached"] = r.dispatch.cached;
  sub["microwalk"] = r.dispatch.microwalk;
  sub["microwalk_e"] = r.dispatch.microwalk_e;
  sub["fdm"] = r.dispatch.fdm;

  json res;
  res["master_id"] = r.master_id;
  res["terminals"] = terms;
  res["walks"] = r.walks;
  res["converged"] = r.converged;
  res["aborted"] = r.aborted;
  res["resampled"] = r.resampled;
  res["dispatch_stats"] = json{{"first", first}, {"subsequent", sub}};
  res["cache"] = json{{"hits", r.cache_hits}, {"misses", r.cache_misses}};
  return res;
}

void extract_summary(std::ostream& err, const CapacitanceResult& r) {
  err << "master " << r.master_id << ": " << r.walks << " walks, "
      << (r.converged ? "converged" : "walk budget exhausted") << "\n";
  for (const TerminalEstimate& t : r.terminals) {
    if (t.conductor_id < 0)
      err << "  C[ground]";
    else
      err << "  C[" << r.master_id << "][" << t.conductor_id << "]";
    err << " = " << t.value << " F +- " << t.std_err << "\n";
  }
  const uint64_t subs = r.dispatch.subsequent_total();
  err << "  dispatch: first s/k/l/h = " << r.dispatch.first_stratified << "/"
      << r.dispatch.first_shrunk << "/" << r.dispatch.first_layered << "/"
      << r.dispatch.first_homogenized << "; subsequent cached/mw/mwe/fdm = "
      << r.dispatch.cached << "/" << r.dispatch.microwalk << "/"
      << r.dispatch.microwalk_e << "/" << r.dispatch.fdm << " of " << subs
      << "\n";
  const uint64_t gets = r.cache_hits + r.cache_misses;
  err << "  cache: " << r.cache_hits << "/" << gets << " hits; T_MW "
      << r.t_mw_seconds << " s; T_total " << r.t_total_seconds << " s\n";
}

struct EngineArgs {
  std::string structure;
  std::string out;
  std::string cache;
  std::string mode = mode_name(Config{}.mode);
  Config cfg;
  int threads = 0;
};

// flags shared by extract and oracle-compare; defaults mirror Config
void add_engine_flags(CLI::App* cmd, EngineArgs& a) {
  cmd->add_option("--structure", a.structure, "structure JSON file")
      ->required();
  cmd->add_option("--grid-n", a.cfg.grid_n, "transition lattice size")->capture_default_str();
  cmd->add_option("--expansion", a.cfg.expansion,
                  "expanded-walk half-width factor")->capture_default_str();
  cmd->add_option("--mode", a.mode, "fdm|mw|mwe|hybrid-mw|hybrid-mwe")->capture_default_str();
  cmd->add_option("--tol", a.cfg.rel_std_tol,
                  "relative std-error stopping tolerance")->capture_default_str();
  cmd->add_option("--min-walks", a.cfg.min_walks, "minimum walk count")->capture_default_str();
  cmd->add_option("--max-walks", a.cfg.max_walks, "maximum walk count")->capture_default_str();
  cmd->add_option("--batch", a.cfg.batch, "walks per convergence check")->capture_default_str();
  cmd->add_option("--seed", a.cfg.seed, "random seed")->capture_default_str();
  cmd->add_option("--threads", a.threads,
                  "worker threads (0 = FRWCAP_THREADS or 1)")->capture_default_str();
  cmd->add_option("--world-margin", a.cfg.world_margin,
                  "world inflation when the file has no world box")->capture_default_str();
  cmd->add_option("--out", a.out, "write the JSON report here");
  cmd->add_option("--cache", a.cache, "SGF cache file to load and update");
}

CapacitanceResult run_extract(const EngineArgs& a, const Structure& s) {
  StratifiedSgfCache cache;
  if (!a.cache.empty() && std::filesystem::exists(a.cache))
    cache.load(a.cache);
  const CapacitanceResult res = extract(s, a.cfg, a.threads, &cache);
  if (!a.cache.empty()) cache.save(a.cache, a.cfg.grid_n);
  return res;
}

int cmd_extract(EngineArgs& a, const std::vector<std::string>& argv_echo,
                std::ostream& out, std::ostream& err) {
  a.cfg.mode = parse_mode(a.mode);
  a.cfg.validate();
  const Structure s = parse_structure_file(a.structure, a.cfg.world_margin);
  const CapacitanceResult res = run_extract(a, s);

  json rep;
  rep["schema_version"] = kSchemaVersion;
  rep["command"] = "extract";
  rep["argv"] = argv_echo;
  rep["config"] = config_json(a.cfg, a.structure, a.threads);
  rep["results"] = result_json(res);
  rep["timings"] = json{{"t_mw_seconds", res.t_mw_seconds},
                        {"t_total_seconds", res.t_total_seconds}};
  emit_report(rep, a.out, out);
  extract_summary(err, res);
  return 0;
}

struct ValidateArgs {
  int n = 4;
  int grids = 20;
  long samples = 1000000;
  uint64_t seed = 1;
  std::string out;
};

int cmd_validate(const ValidateArgs& a,
                 const std::vector<std::string>& argv_echo, std::ostream& out,
                 std::ostream& err) {
  if (a.n < 1 || a.grids < 1 || a.samples < 10000)
    throw CLI::ValidationError("validate-sgf",
                               "need n >= 1, grids >= 1, samples >= 10000");
  bool all_pass = true;
  json checks = json::array();

  for (int g = 0; g < a.grids; ++g) {
    SplitMix64 grid_rng(a.seed, 1000 + g);
    const DielectricGrid grid = random_voxel_grid(a.n, grid_rng);
    const FDSystem sys = assemble_system(grid);
    const DiscreteSGF sgf = solve_sgf(sys);

    double prob_sum = 0, prob_min = 1;
    for (double p : sgf.probs) {
      prob_sum += p;
      prob_min = std::min(prob_min, p);
    }
    double kernel_sum_max = 0;
    for (const auto& k : sgf.grad_kernels)
      kernel_sum_max = std::max(
          kernel_sum_max,
          std::fabs(std::accumulate(k.begin(), k.end(), 0.0)));
    const bool sgf_ok = std::fabs(prob_sum - 1.0) <= 1e-9 &&
                        prob_min >= -1e-9 && kernel_sum_max <= 1e-9;

    MicroWalkScratch scratch;
    double steps_sum = 0, steps_sq = 0;
    const auto sampler = [&](SplitMix64& r) {
      const Exit e = microwalk_transit(grid, r, scratch);
      steps_sum += e.steps;
      steps_sq += double(e.steps) * e.steps;
      return e.panel;
    };
    SplitMix64 samp_rng(a.seed, 2000 + g);
    const DistributionReport rep =
        compare_distribution(sgf.probs, sampler, a.samples, samp_rng);
    const double tv_threshold = 2.5 * expected_tv(sgf.probs, a.samples);

    const double e_steps = expected_steps(sys);
    const double mean_steps = steps_sum / a.samples;
    const double sd_steps = std::sqrt(
        (steps_sq - steps_sum * steps_sum / a.samples) / (a.samples - 1));
    const double z =
        (mean_steps - e_steps) / (sd_steps / std::sqrt(double(a.samples)));
    const bool steps_ok = std::fabs(z) <= 4.0;

    double dense_diff = 0;
    bool dense_ok = true;
    if (a.n <= 6) {
      const std::vector<double> row = exact_absorption_row(grid);
      for (size_t i = 0; i < row.size(); ++i)
        dense_diff = std::max(dense_diff, std::fabs(row[i] - sgf.probs[i]));
      dense_ok = dense_diff <= 1e-8;
    }

    const bool pass = sgf_ok && steps_ok && dense_ok &&
                      rep.tv_distance <= tv_threshold && rep.gof_pass();
    all_pass = all_pass && pass;

    json c;
    c["grid"] = g;
    c["tv_distance"] = rep.tv_distance;
    c["tv_threshold"] = tv_threshold;
    c["gof_statistic"] = rep.gof_statistic;
    c["gof_critical"] = rep.gof_critical;
    c["expected_steps"] = e_steps;
    c["mean_steps"] = mean_steps;
    c["steps_z"] = z;
    c["sgf_properties_ok"] = sgf_ok;
    if (a.n <= 6) c["dense_max_abs_diff"] = dense_diff;
    c["pass"] = pass;
    checks.push_back(c);
    err << "grid " << g << ": tv " << rep.tv_distance << " (<= "
        << tv_threshold << "), steps z " << z << ", "
        << (pass ? "pass" : "FAIL") << "\n";
  }

  // uniform lattice: the six faces are equivalent, so each absorbs 1/6.
  // Needs an odd size; even sizes start half a pitch off-center.
  const int sn = (a.n % 2 == 1) ? a.n : a.n + 1;
  double face_err = 0;
  {
    Structure s;
    s.background_eps = 1.0;
    s.world = {{-100, -100, -100}, {100, 100, 100}};
    const DiscreteSGF sgf = solve_sgf(
        assemble_system(build_grid(s, {{0, 0, 0}, 10.0}, sn)), false);
    for (int f = 0; f < 6; ++f) {
      double mass = 0;
      for (int v = 0; v < sn; ++v)
        for (int u = 0; u < sn; ++u)
          mass += sgf.probs[surface_panel_index(sn, f, u, v)];
      face_err = std::max(face_err, std::fabs(mass - 1.0 / 6.0));
    }
  }
  const bool symmetry_ok = face_err <= 1e-9;
  all_pass = all_pass && symmetry_ok;
  err << "uniform face symmetry: max |mass - 1/6| = " << face_err << ", "
      << (symmetry_ok ? "pass" : "FAIL") << "\n";

  json rep;
  rep["schema_version"] = kSchemaVersion;
  rep["command"] = "validate-sgf";
  rep["argv"] = argv_echo;
  rep["config"] = json{{"n", a.n},
                       {"symmetry_n", sn},
                       {"grids", a.grids},
                       {"samples", a.samples},
                       {"seed", a.seed}};
  rep["results"] =
      json{{"checks", checks},
           {"uniform_face_symmetry",
            json{{"max_abs_err", face_err}, {"pass", symmetry_ok}}},
           {"all_pass", all_pass}};
  emit_report(rep, a.out, out);
  return all_pass ? 0 : 1;
}

struct BenchArgs {
  std::string n_list = "8,16,32,64";
  uint64_t seed = 1;
  int grids = 20;
  int fdm_max_n = 32;
  std::string out;
};

int cmd_bench(const BenchArgs& a, const std::vector<std::string>& argv_echo,
              std::ostream& out, std::ostream& err) {
  std::vector<int> ns;
  std::stringstream ss(a.n_list);
  for (std::string tok; std::getline(ss, tok, ',');) {
    const int n = std::stoi(tok);
    if (n < 2) throw CLI::ValidationError("bench-scaling", "n must be >= 2");
    ns.push_back(n);
  }
  if (ns.size() < 2)
    throw CLI::ValidationError("bench-scaling", "need at least two sizes");
  if (a.grids < 1)
    throw CLI::ValidationError("bench-scaling", "grids must be >= 1");

  constexpr int kReps = 5;
  json rows = json::array();
  std::vector<double> ln_n, ln_mw, ln_steps, ln_n_fdm, ln_fdm;

  // A single random lattice is a noisy sample of the size law (its block
  // layout sets the diffusivity), so every quantity is averaged over an
  // ensemble of scenes. Each scene is drawn once in continuum coordinates
  // and voxelized at every size; sharing realizations across sizes cancels
  // scene-to-scene variance out of the fitted slopes. Block faces snap to
  // eighths of the cube so each size resolves the same geometry exactly
  // (sub-voxel slivers at the small sizes would otherwise bias the fit).
  // Per grid, timings take the median of kReps windows with a discarded
  // warmup.
  const size_t nn = ns.size();
  std::vector<double> steps_sum(nn, 0), mw_sum(nn, 0), fdm_sum(nn, 0);
  std::vector<long> transit_steps(nn, 0), transits(nn, 0);
  const Cube bench_cube{{0, 0, 0}, 100.0};

  for (int g = 0; g < a.grids; ++g) {
    SplitMix64 scene_rng(a.seed, 5000 + g);
    Structure scene;
    scene.world = {{-200, -200, -200}, {200, 200, 200}};
    for (int b = 0; b < 8; ++b) {
      Box box;
      for (int ax = 0; ax < 3; ++ax) {
        const double f0 = std::round(8.0 * scene_rng.uniform()) / 8.0;
        const double f1 = std::round(8.0 * scene_rng.uniform()) / 8.0;
        box.lo[ax] = -100.0 + 200.0 * std::min(f0, f1);
        box.hi[ax] = -100.0 + 200.0 * std::max(f0, f1) + 1e-9;
      }
      const double eps =
          std::max(-10.0 * std::log1p(-scene_rng.uniform()), 1e-9);
      scene.dielectrics.push_back({box, eps});
    }

    for (size_t si = 0; si < nn; ++si) {
      const int n = ns[si];
      const DielectricGrid grid = build_grid(scene, bench_cube, n);

      MicroWalkScratch scratch;
      SplitMix64 walk_rng(a.seed, 10000 + 100 * n + g);
      const auto rep_time = [&]() {
        const auto t0 = Clock::now();
        long count = 0;
        double elapsed = 0;
        do {
          for (int i = 0; i < 16; ++i)
            transit_steps[si] +=
                microwalk_transit(grid, walk_rng, scratch).steps;
          count += 16;
          elapsed = seconds_since(t0);
        } while (elapsed < 0.004 && count < 4800);
        transits[si] += count;
        return elapsed / count;
      };
      rep_time();  // warmup
      std::vector<double> times(kReps);
      for (int r = 0; r < kReps; ++r) times[r] = rep_time();
      mw_sum[si] += median(times);

      const FDSystem sys = assemble_system(grid);
      steps_sum[si] += expected_steps(sys);

      if (n <= a.fdm_max_n) {
        solve_sgf(sys, false);  // warmup
        std::vector<double> ft(kReps);
        for (int r = 0; r < kReps; ++r) {
          const auto t0 = Clock::now();
          solve_sgf(sys, false);
          ft[r] = seconds_since(t0);
        }
        fdm_sum[si] += median(ft);
      }
    }
  }

  for (size_t si = 0; si < nn; ++si) {
    const int n = ns[si];
    const double mw_per_transit = mw_sum[si] / a.grids;
    const double e_steps = steps_sum[si] / a.grids;

    json row;
    row["n"] = n;
    row["grids"] = a.grids;
    row["mw_seconds_per_transit"] = mw_per_transit;
    row["expected_steps"] = e_steps;
    row["measured_mean_steps"] = double(transit_steps[si]) / transits[si];
    ln_n.push_back(std::log(double(n)));
    ln_mw.push_back(std::log(mw_per_transit));
    ln_steps.push_back(std::log(e_steps));

    if (n <= a.fdm_max_n) {
      const double fdm_per_solve = fdm_sum[si] / a.grids;
      row["fdm_seconds_per_solve"] = fdm_per_solve;
      ln_n_fdm.push_back(std::log(double(n)));
      ln_fdm.push_back(std::log(fdm_per_solve));
    }
    rows.push_back(row);
    err << "n " << n << ": mw " << mw_per_transit * 1e6
        << " us/transit, E[steps] " << e_steps;
    if (row.contains("fdm_seconds_per_solve"))
      err << ", fdm " << row["fdm_seconds_per_solve"].get<double>() << " s";
    err << "\n";
  }

  json slopes;
  slopes["mw_time"] = fit_slope(ln_n, ln_mw);
  slopes["expected_steps"] = fit_slope(ln_n, ln_steps);
  if (ln_fdm.size() >= 2) slopes["fdm_time"] = fit_slope(ln_n_fdm, ln_fdm);
  err << "log-log slopes: mw " << slopes["mw_time"].get<double>()
      << ", steps " << slopes["expected_steps"].get<double>();
  if (slopes.contains("fdm_time"))
    err << ", fdm " << slopes["fdm_time"].get<double>();
  err << "\n";

  json rep;
  rep["schema_version"] = kSchemaVersion;
  rep["command"] = "bench-scaling";
  rep["argv"] = argv_echo;
  rep["config"] = json{{"n_list", a.n_list},
                       {"seed", a.seed},
                       {"grids", a.grids},
                       {"reps", kReps},
                       {"fdm_max_n", a.fdm_max_n}};
  rep["results"] = json{{"rows", rows}, {"slopes", slopes}};
  emit_report(rep, a.out, out);
  return 0;
}

struct CompareArgs {
  EngineArgs eng;
  int resolution = 48;
  double err_tol = 0.05;
};

int cmd_compare(CompareArgs& a, const std::vector<std::string>& argv_echo,
                std::ostream& out, std::ostream& err) {
  a.eng.cfg.mode = parse_mode(a.eng.mode);
  a.eng.cfg.validate();
  const Structure s =
      parse_structure_file(a.eng.structure, a.eng.cfg.world_margin);
  const CapacitanceResult res = run_extract(a.eng, s);
  const ReferenceSolution ref = reference_capacitance(s, a.resolution);

  int master_row = -1;
  for (size_t i = 0; i < ref.terminal_ids.size(); ++i)
    if (ref.terminal_ids[i] == s.master_id) master_row = static_cast<int>(i);
  if (master_row < 0) throw std::runtime_error("oracle lost the master");

  json terms = json::array();
  double num = 0, den = 0;
  for (size_t k = 0; k < ref.terminal_ids.size(); ++k) {
    const TerminalEstimate* t = res.find_terminal(ref.terminal_ids[k]);
    if (!t) throw std::runtime_error("terminal sets disagree");
    const double c_ref = ref.capacitance(master_row, static_cast<int>(k));
    num += std::fabs(t->value - c_ref);
    den += std::fabs(c_ref);
    json e;
    e["conductor_id"] = t->conductor_id;
    e["frw_farads"] = t->value;
    e["frw_std_err"] = t->std_err;
    e["reference_farads"] = c_ref;
    terms.push_back(e);
  }
  const double err_avg = num / den;
  const bool pass = err_avg <= a.err_tol;

  json rep;
  rep["schema_version"] = kSchemaVersion;
  rep["command"] = "oracle-compare";
  rep["argv"] = argv_echo;
  rep["config"] = config_json(a.eng.cfg, a.eng.structure, a.eng.threads);
  rep["config"]["resolution"] = a.resolution;
  rep["config"]["err_tol"] = a.err_tol;
  rep["results"] = json{{"terminals", terms},
                        {"err_avg", err_avg},
                        {"oracle_residual", ref.residual},
                        {"walks", res.walks},
                        {"converged", res.converged},
                        {"pass", pass}};
  emit_report(rep, a.eng.out, out);
  err << "err_avg = " << err_avg << " (tol " << a.err_tol << "), "
      << (pass ? "pass" : "FAIL") << "\n";
  return pass ? 0 : 1;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out,
            std::ostream& err) {
  CLI::App app{"floating random walk capacitance extraction"};
  app.name("frwcap");
  app.require_subcommand(1);

  EngineArgs ext;
  CLI::App* c_ext =
      app.add_subcommand("extract", "extract a capacitance row");
  add_engine_flags(c_ext, ext);

  ValidateArgs val;
  CLI::App* c_val = app.add_subcommand(
      "validate-sgf", "check lattice transitions against exact solves");
  c_val->add_option("--n", val.n, "lattice size")->capture_default_str();
  c_val->add_option("--grids", val.grids, "number of random grids")->capture_default_str();
  c_val->add_option("--samples", val.samples, "transits per grid")->capture_default_str();
  c_val->add_option("--seed", val.seed, "random seed")->capture_default_str();
  c_val->add_option("--out", val.out, "write the JSON report here");

  BenchArgs bench;
  CLI::App* c_bench = app.add_subcommand(
      "bench-scaling", "time transitions across lattice sizes");
  c_bench->add_option("--n-list", bench.n_list, "comma-separated sizes")->capture_default_str();
  c_bench->add_option("--seed", bench.seed, "random seed")->capture_default_str();
  c_bench->add_option("--grids", bench.grids, "random grids per size")
      ->capture_default_str();
  c_bench->add_option("--fdm-max-n", bench.fdm_max_n,
                      "largest size to time direct solves at")->capture_default_str();
  c_bench->add_option("--out", bench.out, "write the JSON report here");

  CompareArgs cmp;
  CLI::App* c_cmp = app.add_subcommand(
      "oracle-compare", "extract and compare against the grid oracle");
  add_engine_flags(c_cmp, cmp.eng);
  c_cmp->add_option("--resolution", cmp.resolution,
                    "oracle voxels per axis")->capture_default_str();
  c_cmp->add_option("--err-tol", cmp.err_tol,
                    "average relative error threshold")->capture_default_str();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e, out, err);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (c_ext->parsed()) return cmd_extract(ext, args, out, err);
    if (c_val->parsed()) return cmd_validate(val, args, out, err);
    if (c_bench->parsed()) return cmd_bench(bench, args, out, err);
    if (c_cmp->parsed()) return cmd_compare(cmp, args, out, err);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
  err << "error: no subcommand\n";
  return 2;
}

int run_cli(int argc, const char* const* argv, std::ostream& out,
            std::ostream& err) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run_cli(args, out, err);
}

}  // namespace frwcap
