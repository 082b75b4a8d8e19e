// Experiment CLI: builds task families, runs training, runs the bound
// verification suite, prints theoretical constants, and sweeps parameters.
// All inputs and outputs are persisted so any run reproduces byte-for-byte
// from the files alone.

#include <cstdio>
#include <filesystem>
#include <future>
#include <iostream>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "maml/family_io.hpp"
#include "maml/trainer.hpp"
#include "maml/verifier.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitCheckFailed = 1;
constexpr int kExitConfigError = 2;
constexpr int kExitDiverged = 3;

struct CommonArgs {
  std::string config_path;
  std::string out_dir;
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;
  int workers = 1;
  bool allow_unsafe_alpha = false;
};

json load_config(const CommonArgs& args, const std::set<std::string>& known) {
  json cfg = json::object();
  if (!args.config_path.empty())
    cfg = json::parse(maml::read_text_file(args.config_path));
  for (const auto& kv : args.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("override must be key=value: " + kv);
    const std::string key = kv.substr(0, eq);
    const std::string val = kv.substr(eq + 1);
    if (!known.empty() && !known.count(key))
      throw std::invalid_argument("override references unknown config key: " + key);
    try {
      cfg[key] = json::parse(val);
    } catch (const json::parse_error&) {
      cfg[key] = val;  // bare string value
    }
  }
  if (args.seed) cfg["seed"] = *args.seed;
  return cfg;
}

// Family references are either inline documents or paths relative to the
// config file location.
maml::TaskDistribution resolve_family(const json& cfg,
                                      const std::string& config_path) {
  if (!cfg.contains("family"))
    throw std::invalid_argument("config needs a 'family' entry (path or inline)");
  const json& fam = cfg["family"];
  if (fam.is_object()) return maml::family_from_json(fam);
  fs::path p = fam.get<std::string>();
  if (p.is_relative() && !config_path.empty())
    p = fs::path(config_path).parent_path() / p;
  return maml::load_family(p);
}

maml::TaskDistribution build_family(const json& cfg) {
  const std::string family = cfg.at("family").get<std::string>();
  const int d = cfg.at("d").get<int>();
  const int num_tasks = cfg.at("num_tasks").get<int>();
  const double R = cfg.at("R").get<double>();
  const std::uint64_t seed = cfg.value("seed", 0ULL);
  if (family == "quadratic")
    return maml::make_quadratic_family(
        d, num_tasks, cfg.at("L_target").get<double>(),
        cfg.value("sigma", 0.0), cfg.value("sigma_g", 0.0),
        cfg.value("sigma_H", 0.0), R, seed);
  if (family == "trig")
    return maml::make_trig_family(
        d, num_tasks, cfg.at("c_max").get<double>(),
        cfg.at("a_max").get<double>(), cfg.value("lambda", 0.0), R,
        cfg.value("sigma_g", 0.0), cfg.value("sigma_H", 0.0), seed);
  if (family == "finite_sum_mse")
    return maml::make_finite_sum_mse(
        d, num_tasks, cfg.at("support_size").get<int>(),
        cfg.at("query_size").get<int>(), cfg.value("noise_std", 0.0), R, seed);
  throw std::invalid_argument("unknown family: " + family);
}

void ensure_out_dir(const std::string& dir) {
  if (dir.empty()) throw std::invalid_argument("--out directory is required");
  fs::create_directories(dir);
}

int cmd_make_family(const CommonArgs& args) {
  const json cfg = load_config(
      args, {"family", "d", "num_tasks", "R", "seed", "L_target", "sigma",
             "sigma_g", "sigma_H", "c_max", "a_max", "lambda", "support_size",
             "query_size", "noise_std"});
  ensure_out_dir(args.out_dir);
  const maml::TaskDistribution dist = build_family(cfg);
  const fs::path out = fs::path(args.out_dir) / "family.json";
  maml::save_family(dist, out);
  std::cout << "wrote " << out.string() << "  (family=" << to_string(dist.family)
            << ", d=" << dist.dimension() << ", tasks=" << dist.num_tasks()
            << ", L=" << dist.profile.L << ", rho=" << dist.profile.rho << ")\n";
  return kExitOk;
}

maml::RunConfig run_config_from(const json& cfg) {
  json c = cfg;
  c.erase("family");
  c.erase("sweep");
  return maml::run_config_from_json(c);
}

int write_run_outputs(const maml::RunConfig& rc, const maml::RunMetrics& m,
                      const maml::TaskDistribution& dist,
                      const std::string& out_dir) {
  maml::write_text_file(fs::path(out_dir) / "metrics.csv", metrics_to_csv(m));
  json summary = run_summary_json(rc, m);
  maml::write_text_file(fs::path(out_dir) / "summary.json",
                        summary.dump(2) + "\n");
  json resolved = maml::run_config_to_json(rc);
  resolved["family"] = maml::family_to_json(dist);
  maml::write_text_file(fs::path(out_dir) / "resolved_config.json",
                        resolved.dump(2) + "\n");
  return kExitOk;
}

int cmd_run(const CommonArgs& args) {
  const json cfg = load_config(
      args, {"case", "N", "K", "B", "S", "D", "T", "Bprime", "DL", "alpha",
             "C_beta", "seed", "record_exact_grad", "allow_unsafe_alpha",
             "record_timing", "zeta_draws", "workers", "w0", "family"});
  ensure_out_dir(args.out_dir);
  const maml::TaskDistribution dist = resolve_family(cfg, args.config_path);
  maml::RunConfig rc = run_config_from(cfg);
  if (args.workers > 1) rc.workers = args.workers;
  if (args.allow_unsafe_alpha) rc.allow_unsafe_alpha = true;

  const maml::RunMetrics m = maml::run_maml(rc, dist);
  write_run_outputs(rc, m, dist, args.out_dir);
  std::cout << "run: K=" << m.rows.size() << " zeta=" << m.zeta
            << " E||grad L(w_zeta)||=" << m.zeta_mean_grad_norm
            << " final=" << m.final_grad_norm
            << (m.diverged ? " DIVERGED" : "")
            << (m.ball_violation ? " BALL-VIOLATION" : "") << "\n";
  if (m.diverged && !rc.allow_unsafe_alpha) return kExitDiverged;
  return kExitOk;
}

int cmd_constants(const CommonArgs& args) {
  const json cfg = load_config(args, {"case", "family", "profile", "alpha", "N",
                                      "C_beta", "S", "D", "T", "B", "seed"});
  maml::SmoothnessProfile profile;
  std::string case_name = cfg.value("case", "resampling");
  if (cfg.contains("family")) {
    const maml::TaskDistribution dist = resolve_family(cfg, args.config_path);
    profile = dist.profile;
    case_name = to_string(dist.objective);
  } else if (cfg.contains("profile")) {
    const json& p = cfg["profile"];
    profile.L = p.at("L").get<double>();
    profile.rho = p.value("rho", 0.0);
    profile.sigma = p.value("sigma", 0.0);
    profile.sigma_g = p.value("sigma_g", 0.0);
    profile.sigma_H = p.value("sigma_H", 0.0);
    profile.b = p.value("b", 0.0);
    profile.b_tilde = p.value("b_tilde", 0.0);
  } else {
    throw std::invalid_argument("constants needs 'family' or 'profile'");
  }

  const int n = cfg.value("N", 1);
  double alpha = -1.0;
  if (cfg.contains("alpha") && cfg["alpha"].is_number())
    alpha = cfg["alpha"].get<double>();
  if (alpha < 0.0) alpha = maml::default_alpha(n, profile.L);

  json out;
  out["alpha"] = alpha;
  out["alpha_max"] = maml::inner_stepsize_bound(n, profile.L);
  out["N"] = n;
  if (case_name == "resampling") {
    const auto c = maml::resampling_constants(
        profile, alpha, n, cfg.value("C_beta", 100.0), cfg.value("S", 1),
        cfg.value("D", 1), cfg.value("T", 1), cfg.value("B", 1));
    out["case"] = "resampling";
    out["C_L"] = c.c_L;
    out["C_err1"] = c.c_err1;
    out["C_err2"] = c.c_err2;
    out["C_squ1"] = c.c_squ1;
    out["C_squ2"] = c.c_squ2;
    out["C_squ3"] = c.c_squ3;
    out["chi"] = c.chi;
    out["xi"] = c.xi;
    out["phi"] = c.phi;
    out["theta"] = c.theta;
    out["theta_positive"] = c.theta_factor > 0.0;
    out["C_l"] = c.c_l;
    out["Bprime_min"] = c.bprime_min;
    out["DL_min"] = c.dl_min;
    if (!(c.theta_factor > 0.0))
      std::cerr << "warning: theta <= 0; the convergence guarantee needs "
                   "C_beta, S and B chosen so that theta > 0\n";
  } else {
    const auto c = maml::finite_sum_constants(
        profile, alpha, n, cfg.value("C_beta", 80.0), cfg.value("B", 1));
    out["case"] = "finite_sum";
    out["C_L"] = c.c_L;
    out["C_b"] = c.c_b;
    out["A_squ1"] = c.a_squ1;
    out["A_squ2"] = c.a_squ2;
    out["xi"] = c.xi;
    out["theta"] = c.theta;
    out["theta_positive"] = c.theta_factor > 0.0;
    out["phi"] = c.phi;
    out["C_1"] = c.c_1;
    out["C_2"] = c.c_2;
    out["C_l"] = c.c_l;
    out["Bprime_min"] = c.bprime_min;
    if (!(c.theta_factor > 0.0))
      std::cerr << "warning: theta <= 0; the convergence guarantee needs "
                   "C_beta and B chosen so that theta > 0\n";
  }
  const std::string doc = out.dump(2) + "\n";
  std::cout << doc;
  if (!args.out_dir.empty()) {
    ensure_out_dir(args.out_dir);
    maml::write_text_file(fs::path(args.out_dir) / "constants.json", doc);
  }
  return kExitOk;
}

int cmd_verify(const CommonArgs& args) {
  const json cfg = load_config(
      args, {"family", "N", "alpha", "S", "D", "T", "C_beta", "Bprime", "DL",
             "path_trials", "moment_trials", "lemma_trials", "pairs", "seed"});
  maml::VerifySettings s;
  s.N = cfg.value("N", s.N);
  if (cfg.contains("alpha") && cfg["alpha"].is_number())
    s.alpha = cfg["alpha"].get<double>();
  s.S = cfg.value("S", s.S);
  s.D = cfg.value("D", s.D);
  s.T = cfg.value("T", s.T);
  s.C_beta = cfg.value("C_beta", s.C_beta);
  s.Bprime = cfg.value("Bprime", s.Bprime);
  s.DL = cfg.value("DL", s.DL);
  s.path_trials = cfg.value("path_trials", s.path_trials);
  s.moment_trials = cfg.value("moment_trials", s.moment_trials);
  s.lemma_trials = cfg.value("lemma_trials", s.lemma_trials);
  s.pairs = cfg.value("pairs", s.pairs);
  s.seed = cfg.value("seed", s.seed);

  std::vector<maml::TaskDistribution> dists;
  if (cfg.contains("family")) {
    dists.push_back(resolve_family(cfg, args.config_path));
  } else {
    // Default suite: one nonconvex resampling family, one finite-sum family.
    dists.push_back(maml::make_trig_family(5, 8, 0.5, 1.5, 1.0, 2.0, 0.3, 0.3,
                                           s.seed + 1));
    dists.push_back(maml::make_finite_sum_mse(5, 12, 8, 8, 0.1, 4.0, s.seed + 2));
  }

  std::vector<maml::BoundReport> all;
  for (const auto& dist : dists) {
    auto reports = maml::run_verify_suite(dist, s);
    for (auto& r : reports) {
      r.name = to_string(dist.objective) + "/" + r.name;
      all.push_back(std::move(r));
    }
  }

  std::string csv = maml::report_csv_header() + "\n";
  bool ok = true;
  for (const auto& r : all) {
    csv += maml::report_csv_row(r) + "\n";
    std::cout << maml::report_line(r) << "\n";
    ok = ok && r.satisfied;
  }
  if (!args.out_dir.empty()) {
    ensure_out_dir(args.out_dir);
    maml::write_text_file(fs::path(args.out_dir) / "verify.csv", csv);
  }
  std::cout << (ok ? "verify: all checks satisfied\n"
                   : "verify: CHECK FAILURES present\n");
  return ok ? kExitOk : kExitCheckFailed;
}

int cmd_sweep(const CommonArgs& args) {
  const json cfg = load_config(
      args, {"case", "N", "K", "B", "S", "D", "T", "Bprime", "DL", "alpha",
             "C_beta", "seed", "record_exact_grad", "allow_unsafe_alpha",
             "record_timing", "zeta_draws", "workers", "w0", "family", "sweep"});
  ensure_out_dir(args.out_dir);
  if (!cfg.contains("sweep") || !cfg["sweep"].contains("axes") ||
      cfg["sweep"]["axes"].empty())
    throw std::invalid_argument("sweep config needs nonempty sweep.axes");
  const maml::TaskDistribution dist = resolve_family(cfg, args.config_path);

  static const std::set<std::string> sweepable = {"K", "S", "B", "T",
                                                  "D", "N", "alpha"};
  std::vector<std::string> keys;
  std::vector<std::vector<json>> values;
  for (const auto& axis : cfg["sweep"]["axes"]) {
    const std::string key = axis.at("key").get<std::string>();
    if (!sweepable.count(key))
      throw std::invalid_argument("cannot sweep over key: " + key);
    if (axis.at("values").empty())
      throw std::invalid_argument("sweep axis has no values: " + key);
    keys.push_back(key);
    values.push_back(std::vector<json>(axis["values"].begin(),
                                       axis["values"].end()));
  }

  std::vector<json> grid;
  std::vector<std::size_t> idx(keys.size(), 0);
  while (true) {
    json point = cfg;
    point.erase("sweep");
    for (std::size_t a = 0; a < keys.size(); ++a) point[keys[a]] = values[a][idx[a]];
    grid.push_back(std::move(point));
    std::size_t a = 0;
    for (; a < keys.size(); ++a) {
      if (++idx[a] < values[a].size()) break;
      idx[a] = 0;
    }
    if (a == keys.size()) break;
  }

  std::vector<maml::RunMetrics> results(grid.size());
  std::atomic<std::size_t> next{0};
  const int nw = std::max(1, std::min<int>(args.workers, grid.size()));
  std::vector<std::future<void>> futs;
  for (int t = 0; t < nw; ++t)
    futs.push_back(std::async(std::launch::async, [&] {
      for (std::size_t g = next.fetch_add(1); g < grid.size();
           g = next.fetch_add(1))
        results[g] = maml::run_maml(run_config_from(grid[g]), dist);
    }));
  for (auto& f : futs) f.get();

  std::string csv = "point";
  for (const auto& k : keys) csv += "," + k;
  csv +=
      ",zeta_mean_grad_norm,final_grad_norm,grad_evals_per_iter,"
      "hess_evals_per_iter,diverged\n";
  for (std::size_t g = 0; g < grid.size(); ++g) {
    const auto& m = results[g];
    const long long iters = std::max<std::size_t>(1, m.rows.size());
    csv += std::to_string(g);
    for (const auto& k : keys) csv += "," + grid[g][k].dump();
    csv += "," + maml::format_double(m.zeta_mean_grad_norm);
    csv += "," + maml::format_double(m.final_grad_norm);
    csv += "," + std::to_string(m.grad_evals / iters);
    csv += "," + std::to_string(m.hess_evals / iters);
    csv += std::string(",") + (m.diverged ? "1" : "0") + "\n";
  }
  maml::write_text_file(fs::path(args.out_dir) / "sweep.csv", csv);
  std::cout << "sweep: " << grid.size() << " points -> "
            << (fs::path(args.out_dir) / "sweep.csv").string() << "\n";
  return kExitOk;
}

void add_common(CLI::App* sub, CommonArgs& args, bool needs_out) {
  sub->add_option("--config", args.config_path, "config document (JSON)");
  if (needs_out)
    sub->add_option("--out", args.out_dir, "output directory")->required();
  else
    sub->add_option("--out", args.out_dir, "output directory");
  sub->add_option("--set", args.overrides,
                  "override config entries, key=value (repeatable)");
  sub->add_option_function<std::uint64_t>(
      "--seed", [&args](const std::uint64_t& s) { args.seed = s; },
      "override seed");
  sub->add_option("--workers", args.workers, "worker threads");
  sub->add_flag("--allow-unsafe-alpha", args.allow_unsafe_alpha,
                "permit alpha above the stepsize bound (divergence demos)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"multi-step MAML experiment toolkit"};
  app.require_subcommand(1);

  CommonArgs make_args, run_args, verify_args, constants_args, sweep_args;
  CLI::App* make = app.add_subcommand("make-family", "build a task family");
  add_common(make, make_args, true);
  CLI::App* run = app.add_subcommand("run", "run Algorithm 1 or 2");
  add_common(run, run_args, true);
  CLI::App* verify = app.add_subcommand("verify", "run the bound-check suite");
  add_common(verify, verify_args, false);
  CLI::App* constants =
      app.add_subcommand("constants", "print all theoretical constants");
  add_common(constants, constants_args, false);
  CLI::App* sweep = app.add_subcommand("sweep", "grid of runs");
  add_common(sweep, sweep_args, true);

  try {
    app.parse(argc, argv);
    if (make->parsed()) return cmd_make_family(make_args);
    if (run->parsed()) return cmd_run(run_args);
    if (verify->parsed()) return cmd_verify(verify_args);
    if (constants->parsed()) return cmd_constants(constants_args);
    if (sweep->parsed()) return cmd_sweep(sweep_args);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const maml::DivergenceError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitDiverged;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfigError;
  }
  return kExitConfigError;
}
