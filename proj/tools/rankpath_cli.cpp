// rankpath: certified on-variety paths for rank-bounded matrices.
//
//   rankpath path    --descriptor d.json --p p.json --q q.json --out path.json
//   rankpath trials  --descriptor d.json --pairs N --seed S --strategy STRAT --report out.json [--csv out.csv]
//   rankpath cusp    --s-min A --s-max B --steps K --out cusp.csv
//   rankpath family  --map F.poly --t T --out fam.csv [--param C.poly]
//   rankpath oracle  --descriptor d.json --p p.json --q q.json --samples N --out oracle.json
//
// Exit status: 0 success, 1 usage / I/O / input errors, 2 bound violation in trials.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include <rankpath.hpp>

using namespace rankpath;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitViolation = 2;

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string ratio_csv(const std::vector<RatioRow>& rows) {
  std::string out = "s,d_out,d_in,ratio\n";
  for (const auto& r : rows)
    out += format_g17(r.s) + "," + format_g17(r.d_out) + "," + format_g17(r.d_in) + "," + format_g17(r.ratio) + "\n";
  return out;
}

struct PairArgs {
  std::string descriptor, p, q, out;
};

void add_pair_options(CLI::App* cmd, PairArgs& a) {
  cmd->add_option("--descriptor", a.descriptor, "variety descriptor JSON")->required();
  cmd->add_option("--p", a.p, "first endpoint (matrix JSON)")->required();
  cmd->add_option("--q", a.q, "second endpoint (matrix JSON)")->required();
  cmd->add_option("--out", a.out, "output JSON")->required();
}

struct LoadedPair {
  VarietyDescriptor d;
  Matrix p, q;
};

LoadedPair load_pair(const PairArgs& a) {
  return {descriptor_from_json(read_json_file(a.descriptor)), matrix_from_json(read_json_file(a.p)),
          matrix_from_json(read_json_file(a.q))};
}

int run_path(const PairArgs& a) {
  const LoadedPair in = load_pair(a);
  const BuiltPath b = build_path(in.p, in.q, in.d);
  write_json_file(a.out, path_to_json(in.d, b));
  const auto& c = b.certificate;
  std::printf("length %.17g  outer %.17g  ratio %.17g  bound %.17g  trace %s\n", c.length, c.outer_distance, c.ratio,
              c.certified_bound, branches_label(c.branch_trace).c_str());
  return kExitOk;
}

int run_oracle(const PairArgs& a, int samples, std::uint64_t seed) {
  const LoadedPair in = load_pair(a);
  OracleConfig cfg;
  cfg.n_samples = samples;
  cfg.seed = seed;
  cfg.validate();
  const Sandwich s = sandwich(in.p, in.q, in.d, cfg);
  const auto graph = graph_upper_bound(in.p, in.q, in.d, cfg);
  Json j{{"outer", s.outer}, {"shortened", s.shortened}, {"constructed", s.constructed}, {"config", to_json(cfg)}};
  j["graph"] = graph ? Json(*graph) : Json("unreachable");
  write_json_file(a.out, j);
  return kExitOk;
}

struct TrialArgs {
  std::string descriptor, config, report, csv;
  int pairs = 100;
  std::uint64_t seed = 0;
  std::string strategy = "AllStrataGrid";
  double radius_min = 0.5, radius_max = 2.0;
};

int run_trials_cmd(const TrialArgs& a, bool pairs_set, bool seed_set, bool strategy_set) {
  TrialConfig cfg;
  if (!a.config.empty()) cfg = trial_config_from_json(read_json_file(a.config));
  if (!a.descriptor.empty()) cfg.descriptor = descriptor_from_json(read_json_file(a.descriptor));
  else if (a.config.empty()) throw CLI::RequiredError("--descriptor (or --config)");
  if (a.config.empty() || pairs_set) cfg.pairs = a.pairs;
  if (a.config.empty() || seed_set) cfg.master_seed = a.seed;
  if (a.config.empty() || strategy_set) cfg.rank_pair_strategy = strategy_from_string(a.strategy);
  if (a.config.empty()) cfg.radius_range = {a.radius_min, a.radius_max};
  cfg.validate();

  const TrialReport rep = run_trials(cfg);
  emit_report(rep, ReportFormat::JSON, a.report);
  if (!a.csv.empty()) emit_report(rep, ReportFormat::CSV, a.csv);
  std::printf("pairs %d  max_ratio %.17g  bound_violations %d  fallback_count %d  failures %d\n", cfg.pairs,
              rep.max_ratio, rep.bound_violations, rep.fallback_count, rep.failures);
  return rep.bound_violations > 0 ? kExitViolation : kExitOk;
}

int run_cusp(double s_min, double s_max, int steps, const std::string& out) {
  if (!(s_min > 0.0 && s_max <= 1.0 && s_min <= s_max)) throw std::invalid_argument("need 0 < s-min <= s-max <= 1");
  const auto rows = cusp_ratio_table(log_spaced(s_min, s_max, steps));
  write_text_file(out, ratio_csv(rows));
  std::vector<double> s, r;
  for (const auto& row : rows) s.push_back(row.s), r.push_back(row.ratio);
  std::printf("log-log slope %.6f\n", loglog_slope(s, r));
  return kExitOk;
}

int run_family(const std::string& map_path, int t, const std::string& param_path, double s_min, double s_max,
               int steps, const std::string& out) {
  const PolyMap f = parse_poly_map(read_text(map_path));
  const VarietyDescriptor d(f.rows, f.cols, t, ScalarField::Real);

  if (param_path.empty()) {
    if (!(f == cusp_family_map()) || t != 3)
      throw std::invalid_argument("--param is required unless the map is the cusp-family example with --t 3");
    const auto rows = surface_demo(log_spaced(s_min, s_max, steps));
    write_text_file(out, ratio_csv(rows));
    std::vector<double> s, r;
    for (const auto& row : rows) s.push_back(row.s), r.push_back(row.ratio);
    std::printf("surface log-log slope %.6f\n", loglog_slope(s, r));
    return kExitOk;
  }

  // The parametrization is a map from one variable to a column of length N.
  const PolyMap curve = parse_poly_map(read_text(param_path));
  if (curve.arity() != 1 || curve.cols != 1 || static_cast<std::size_t>(curve.rows) != f.arity())
    throw std::invalid_argument("parametrization must map one variable to a " + std::to_string(f.arity()) +
                                " x 1 column");
  std::string csv = "s,residual\n";
  for (int k = 0; k < steps; ++k) {
    const double s = steps == 1 ? s_min : s_min + (s_max - s_min) * k / (steps - 1);
    const Matrix x = evaluate(curve, std::span<const double>(&s, 1));
    std::vector<double> point(f.arity());
    for (std::size_t i = 0; i < point.size(); ++i) point[i] = x(static_cast<Index>(i), 0).real();
    csv += format_g17(s) + "," + format_g17(pullback_residual<double>(f, std::span<const double>(point), d)) + "\n";
  }
  write_text_file(out, csv);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Certified on-variety paths for rank-bounded matrices"};
  app.require_subcommand(1);

  PairArgs path_args;
  auto* path_cmd = app.add_subcommand("path", "build and certify a path between two members");
  add_pair_options(path_cmd, path_args);

  TrialArgs trial_args;
  auto* trials_cmd = app.add_subcommand("trials", "seeded Monte Carlo run of the construction");
  trials_cmd->add_option("--descriptor", trial_args.descriptor, "variety descriptor JSON");
  trials_cmd->add_option("--config", trial_args.config, "trial config JSON (flags given explicitly override it)");
  auto* pairs_opt = trials_cmd->add_option("--pairs", trial_args.pairs, "number of pairs")->check(CLI::PositiveNumber);
  auto* seed_opt = trials_cmd->add_option("--seed", trial_args.seed, "master seed");
  auto* strategy_opt = trials_cmd->add_option("--strategy", trial_args.strategy, "AllStrataGrid | TopStratumOnly | Adversarial")
                           ->check(CLI::IsMember({"AllStrataGrid", "TopStratumOnly", "Adversarial"}));
  trials_cmd->add_option("--radius-min", trial_args.radius_min, "smallest endpoint norm");
  trials_cmd->add_option("--radius-max", trial_args.radius_max, "largest endpoint norm");
  trials_cmd->add_option("--report", trial_args.report, "JSON report path")->required();
  trials_cmd->add_option("--csv", trial_args.csv, "optional CSV report path");

  double s_min = 1e-3, s_max = 1e-1;
  int steps = 20;
  std::string out;
  auto* cusp_cmd = app.add_subcommand("cusp", "inner/outer ratio table for the plane cusp");
  cusp_cmd->add_option("--s-min", s_min, "smallest parameter")->required();
  cusp_cmd->add_option("--s-max", s_max, "largest parameter")->required();
  cusp_cmd->add_option("--steps", steps, "log-spaced points")->required()->check(CLI::Range(2, 100000));
  cusp_cmd->add_option("--out", out, "CSV output")->required();

  std::string map_path, param_path;
  int t = 0;
  double fam_min = 1e-2, fam_max = 1e-1;
  int fam_steps = 8;
  auto* family_cmd = app.add_subcommand("family", "pullback family demo or residuals along a parametrized curve");
  family_cmd->add_option("--map", map_path, "polynomial map file")->required();
  family_cmd->add_option("--t", t, "rank bound")->required();
  family_cmd->add_option("--out", out, "CSV output")->required();
  family_cmd->add_option("--param", param_path, "curve file: one variable s, N x 1 column");
  family_cmd->add_option("--s-min", fam_min, "smallest parameter");
  family_cmd->add_option("--s-max", fam_max, "largest parameter");
  family_cmd->add_option("--steps", fam_steps, "parameter count")->check(CLI::Range(2, 100000));

  PairArgs oracle_args;
  int samples = 150;
  std::uint64_t oracle_seed = 0;
  auto* oracle_cmd = app.add_subcommand("oracle", "sandwich the constructed length between independent estimates");
  add_pair_options(oracle_cmd, oracle_args);
  oracle_cmd->add_option("--samples", samples, "graph sample count")->check(CLI::PositiveNumber);
  oracle_cmd->add_option("--seed", oracle_seed, "sampling seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return kExitError;
  }

  try {
    if (*path_cmd) return run_path(path_args);
    if (*trials_cmd) return run_trials_cmd(trial_args, pairs_opt->count() > 0, seed_opt->count() > 0,
                                           strategy_opt->count() > 0);
    if (*cusp_cmd) return run_cusp(s_min, s_max, steps, out);
    if (*family_cmd) return run_family(map_path, t, param_path, fam_min, fam_max, fam_steps, out);
    if (*oracle_cmd) return run_oracle(oracle_args, samples, oracle_seed);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return kExitError;
  } catch (const MembershipError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitError;
  }
  return kExitError;
}
