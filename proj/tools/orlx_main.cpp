#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "orlx/orlx.hpp"

namespace {

using nlohmann::ordered_json;
namespace fs = std::filesystem;

// relative paths that do not resolve from the cwd fall back to ORLX_DATA_DIR
std::string resolve_path(const std::string& p) {
  if (fs::exists(p)) return p;
  if (!fs::path(p).is_absolute()) {
    if (const char* base = std::getenv("ORLX_DATA_DIR")) {
      const fs::path alt = fs::path(base) / p;
      if (fs::exists(alt)) return alt.string();
    }
  }
  return p;
}

nlohmann::json read_json_file(const std::string& path) {
  std::ifstream in(resolve_path(path));
  if (!in) throw std::runtime_error("cannot open: " + path);
  nlohmann::json j;
  in >> j;
  return j;
}

const char* verdict_name(orlx::BpVerdict v) {
  switch (v) {
    case orlx::BpVerdict::kIn: return "InBp";
    case orlx::BpVerdict::kNotIn: return "NotInBp";
    default: return "Inconclusive";
  }
}

ordered_json eval_row(const orlx::YoungFunction& phi, double t) {
  ordered_json row;
  row["t"] = t;
  try {
    row["phi"] = orlx::json_num(phi.eval(t));
  } catch (const std::range_error&) {
    row["phi"] = "inf";
  }
  row["inverse"] = orlx::json_num(orlx::inverse(phi, t));
  return row;
}

struct YoungArgs {
  std::string variant;
  double p = 0.0, delta = 0.0, s = 0.0, a = 0.0;
  bool normalize = false, conj = false;
  std::vector<double> bp;
};

int cmd_young(const YoungArgs& args) {
  orlx::YoungFunction phi = orlx::YoungFunction::power(2.0);
  if (args.variant == "power") {
    if (args.p <= 0.0) throw std::invalid_argument("young: power needs --p");
    phi = orlx::YoungFunction::power(args.p);
  } else if (args.variant == "log_bump") {
    if (args.p <= 0.0 || args.delta <= 0.0)
      throw std::invalid_argument("young: log_bump needs --p and --delta");
    phi = orlx::YoungFunction::log_bump(args.p, args.delta);
  } else if (args.variant == "oscillatory") {
    if (args.s <= 0.0 || args.a <= 0.0)
      throw std::invalid_argument("young: oscillatory needs --s and --a");
    phi = orlx::YoungFunction::oscillatory(args.s, args.a);
  } else {
    throw std::invalid_argument("young: unknown variant " + args.variant);
  }
  if (args.normalize) phi = phi.normalize();

  ordered_json out;
  out["young"] = orlx::young_to_json(phi);
  out["eval"] = ordered_json::array();
  for (int e = -3; e <= 3; ++e)
    out["eval"].push_back(eval_row(phi, std::pow(10.0, double(e))));

  if (args.conj) {
    const auto bar = orlx::conjugate(phi);
    out["conjugate"] = orlx::young_to_json(bar);
    if (args.variant == "power")
      out["conjugate_exponent"] = orlx::dual_exponent(args.p);
    out["conjugate_eval"] = ordered_json::array();
    for (int e = -3; e <= 3; ++e)
      out["conjugate_eval"].push_back(eval_row(bar, std::pow(10.0, double(e))));
  }

  if (!args.bp.empty()) {
    out["bp"] = ordered_json::array();
    for (double q : args.bp) {
      const auto cert = orlx::bp_test(phi, q);
      ordered_json row;
      row["q"] = q;
      row["verdict"] = verdict_name(cert.verdict);
      row["method"] = cert.method;
      row["partial_integral"] = orlx::json_num(cert.partial_integral);
      row["tail_exponent"] = orlx::json_num(cert.tail_exponent);
      row["tail_bound"] = orlx::json_num(cert.tail_bound);
      row["detail"] = cert.detail;
      out["bp"].push_back(std::move(row));
    }
  }
  std::cout << out.dump(2) << "\n";
  return 0;
}

struct WeightArgs {
  std::string file, cls, psi;
  double p = 0.0, s = 0.0, alpha = 0.0;
};

int cmd_weight(const WeightArgs& args) {
  const orlx::GridFunction w = orlx::load_gridfunction(resolve_path(args.file));
  const auto grids = orlx::shifted_family(w.domain);
  orlx::WeightReport rep;
  if (args.cls == "ap") {
    if (args.p <= 1.0) throw std::invalid_argument("weight: --class ap needs --p > 1");
    rep = orlx::ap_characteristic(w, args.p, grids);
  } else if (args.cls == "a1") {
    rep = orlx::a1_characteristic(w, grids);
  } else if (args.cls == "rh") {
    if (args.s <= 1.0) throw std::invalid_argument("weight: --class rh needs --s > 1");
    rep = orlx::rhs_characteristic(w, args.s, grids);
  } else if (args.cls == "rhinf") {
    rep = orlx::rhinf_characteristic(w, grids);
  } else if (args.cls == "rhpsi") {
    if (args.psi.empty())
      throw std::invalid_argument("weight: --class rhpsi needs --psi <descriptor>");
    const auto psi = orlx::young_from_json(nlohmann::json::parse(args.psi));
    rep = orlx::rhpsi_characteristic(w, psi, grids);
  } else if (args.cls == "ainfty") {
    if (!(args.alpha > 0.0 && args.alpha < 1.0))
      throw std::invalid_argument("weight: --class ainfty needs --alpha in (0,1)");
    rep = orlx::ainfty_characteristic(w, args.alpha, grids);
  } else {
    throw std::invalid_argument("weight: unknown class " + args.cls);
  }
  ordered_json out = orlx::weight_report_to_json(rep);
  out["class"] = args.cls;
  std::cout << out.dump(2) << "\n";
  return 0;
}

struct SparseArgs {
  std::string f_file, g_file, family_file;
  double a = 0.0;
  bool cells = false;
  std::uint64_t seed = 1;
};

int cmd_sparse(const SparseArgs& args) {
  const bool stopping_mode = !args.f_file.empty() || !args.g_file.empty();
  const bool check_mode = !args.family_file.empty();
  if (stopping_mode == check_mode)
    throw std::invalid_argument("sparse: pass either --f and --g, or --family");

  ordered_json out;
  if (check_mode) {
    const auto j = read_json_file(args.family_file);
    const orlx::Domain dom(j.at("dim").get<int>(), j.at("depth").get<int>());
    std::array<int, 2> thirds{{0, 0}};
    const auto sig = j.at("sigma_thirds");
    for (std::size_t d = 0; d < sig.size() && d < 2; ++d)
      thirds[d] = sig[d].get<int>();
    const orlx::Grid grid(dom, thirds);
    std::vector<orlx::Cube> cubes;
    for (const auto& row : j.at("cubes")) {
      std::array<std::int64_t, 2> idx{{0, 0}};
      const auto ji = row.at("index");
      for (std::size_t d = 0; d < ji.size() && d < 2; ++d)
        idx[d] = ji[d].get<std::int64_t>();
      cubes.emplace_back(grid, row.at("level").get<int>(), idx);
    }
    const auto chk = orlx::sparse_check(grid, std::move(cubes));
    if (std::holds_alternative<orlx::SparseFamily>(chk)) {
      out["outcome"] = "family";
      out["family"] =
          orlx::sparse_family_to_json(std::get<orlx::SparseFamily>(chk), args.cells);
    } else {
      const auto& v = std::get<orlx::SparseViolation>(chk);
      out["outcome"] = "violation";
      out["violation"] = {{"cube", orlx::cube_to_json(v.cube)},
                          {"fraction", v.fraction}};
    }
  } else {
    if (args.f_file.empty() || args.g_file.empty())
      throw std::invalid_argument("sparse: stopping mode needs both --f and --g");
    const orlx::GridFunction f = orlx::load_gridfunction(resolve_path(args.f_file));
    const orlx::GridFunction g = orlx::load_gridfunction(resolve_path(args.g_file));
    const double a = args.a > 1.0
                         ? args.a
                         : orlx::default_stopping_a(
                               f.domain, orlx::shifted_family(f.domain), args.seed);
    const auto res = orlx::stopping_sparse(f, g, a, orlx::standard_grid(f.domain));
    out["a"] = a;
    out["k_lo"] = res.k_lo;
    out["k_hi"] = res.k_hi;
    out["empty"] = res.empty;
    out["covering_ok"] = res.covering_ok;
    out["classes_ok"] = res.classes_ok;
    out["members"] = res.members.size();
    out["classes"] = ordered_json::array();
    for (std::size_t i = 0; i < res.classes.size(); ++i)
      out["classes"].push_back({{"k", res.class_k[i]},
                                {"cubes", res.classes[i].cubes.size()},
                                {"packing", res.classes[i].packing}});
    if (std::holds_alternative<orlx::SparseFamily>(res.outcome)) {
      out["outcome"] = "family";
      out["family"] = orlx::sparse_family_to_json(
          std::get<orlx::SparseFamily>(res.outcome), args.cells);
    } else {
      const auto& v = std::get<orlx::SparseViolation>(res.outcome);
      out["outcome"] = "violation";
      out["violation"] = {{"cube", orlx::cube_to_json(v.cube)},
                          {"fraction", v.fraction}};
    }
  }
  std::cout << out.dump(2) << "\n";
  return 0;
}

struct VerifyArgs {
  std::string config_file, suite_filter, out_dir;
  std::uint64_t seed = 0;
  bool seed_set = false;
  int depth = 0, dim = 0;
};

int cmd_verify(const VerifyArgs& args) {
  const auto cj = read_json_file(args.config_file);
  std::vector<nlohmann::json> items;
  if (cj.is_array())
    items.assign(cj.begin(), cj.end());
  else if (cj.is_object() && cj.contains("experiments"))
    items.assign(cj.at("experiments").begin(), cj.at("experiments").end());
  else
    items.push_back(cj);

  std::vector<orlx::InequalityReport> reports;
  for (const auto& item : items) {
    orlx::ExperimentConfig cfg = orlx::config_from_json(item);
    if (!args.suite_filter.empty() && cfg.suite != args.suite_filter) continue;
    if (args.seed_set) cfg.seed = args.seed;
    if (args.depth > 0) {
      if (args.depth > 14) throw std::invalid_argument("verify: bad --grid-depth");
      cfg.depth = args.depth;
    }
    if (args.dim > 0) {
      if (args.dim > 2) throw std::invalid_argument("verify: bad --dim");
      cfg.dim = args.dim;
    }
    reports.push_back(orlx::run_suite(cfg));
    const auto& rep = reports.back();
    std::cerr << "suite " << cfg.suite << (cfg.negative_control ? " [control]" : "")
              << ": " << (rep.pass ? "PASS" : "FAIL") << " rows=" << rep.rows.size()
              << " max_ratio=" << rep.max_ratio << " ceiling=" << rep.ceiling << "\n";
  }
  if (reports.empty())
    throw std::invalid_argument("verify: no experiment matches the filter");

  if (!args.out_dir.empty()) {
    fs::create_directories(args.out_dir);
    for (std::size_t i = 0; i < reports.size(); ++i) {
      const std::string stem = std::to_string(i) + "_" + reports[i].config.suite +
                               (reports[i].config.negative_control ? "_control" : "");
      std::ofstream jf(fs::path(args.out_dir) / (stem + ".json"));
      jf << orlx::report_to_json(reports[i]).dump(2) << "\n";
      std::ofstream cf(fs::path(args.out_dir) / (stem + ".csv"));
      orlx::write_report_csv(cf, reports[i]);
    }
  }

  if (reports.size() == 1) {
    std::cout << orlx::report_to_json(reports[0]).dump(2) << "\n";
  } else {
    ordered_json arr = ordered_json::array();
    for (const auto& rep : reports) arr.push_back(orlx::report_to_json(rep));
    std::cout << arr.dump(2) << "\n";
  }

  for (const auto& rep : reports)
    if (!rep.pass) return 1;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"dyadic Orlicz-norm, weight-class, and sparse-operator toolkit"};
  app.require_subcommand(1);
  // global flags (--threads, --seed) are accepted on either side of the
  // subcommand name
  app.fallthrough();

  int threads = 0;
  app.add_option("--threads", threads, "cap worker threads (results unchanged)");

  YoungArgs ya;
  auto* young = app.add_subcommand("young", "inspect a Young function");
  young->add_option("--variant", ya.variant, "power | log_bump | oscillatory")
      ->required();
  young->add_option("--p", ya.p, "exponent (power, log_bump)");
  young->add_option("--delta", ya.delta, "log-power (log_bump)");
  young->add_option("--s", ya.s, "exponent (oscillatory)");
  young->add_option("--a", ya.a, "amplitude (oscillatory)");
  young->add_flag("--normalize", ya.normalize, "rescale so phi(1) = 1");
  young->add_flag("--conjugate", ya.conj, "include the complementary function");
  young->add_option("--bp", ya.bp, "comma-separated q list for the B_q test")
      ->delimiter(',');

  WeightArgs wa;
  auto* weight = app.add_subcommand("weight", "measure a weight characteristic");
  weight->add_option("--file", wa.file, "grid-function payload (with .json sidecar)")
      ->required();
  weight->add_option("--class", wa.cls, "ap | a1 | rh | rhinf | rhpsi | ainfty")
      ->required();
  weight->add_option("--p", wa.p, "exponent for --class ap");
  weight->add_option("--s", wa.s, "exponent for --class rh");
  weight->add_option("--alpha", wa.alpha, "fraction for --class ainfty");
  weight->add_option("--psi", wa.psi, "Young descriptor JSON for --class rhpsi");

  SparseArgs sa;
  auto* sparse = app.add_subcommand(
      "sparse", "stopping-time construction or packing check");
  sparse->add_option("--f", sa.f_file, "left factor grid function");
  sparse->add_option("--g", sa.g_file, "right factor grid function");
  sparse->add_option("--a", sa.a, "threshold ratio override (> 1)");
  sparse->add_option("--family", sa.family_file, "family JSON to re-check");
  sparse->add_flag("--cells", sa.cells, "include E_Q cell lists in the output");

  VerifyArgs va;
  auto* verify = app.add_subcommand("verify", "run experiment suites from a config");
  verify->add_option("--config", va.config_file, "experiment config JSON")->required();
  verify->add_option("--suite", va.suite_filter, "run only this suite name");
  verify->add_option("--grid-depth", va.depth, "override config depth");
  verify->add_option("--dim", va.dim, "override config dimension");
  verify->add_option("--out", va.out_dir, "directory for report JSON + CSV files");

  std::uint64_t seed = 0;
  auto* seed_opt = app.add_option(
      "--seed", seed, "override config seed (defaults always come from the config)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (threads > 0) orlx::set_max_threads(threads);
    if (app.got_subcommand(young)) return cmd_young(ya);
    if (app.got_subcommand(weight)) return cmd_weight(wa);
    if (app.got_subcommand(sparse)) {
      if (seed_opt->count() > 0) sa.seed = seed;
      return cmd_sparse(sa);
    }
    va.seed = seed;
    va.seed_set = seed_opt->count() > 0;
    return cmd_verify(va);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
