// kme_lab: experiments and bound tables for kernel mean embeddings.
// Exit codes: 0 success, 2 usage or configuration error, 3 numeric or
// construction failure (including failed verification checks).

#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "kme/bounds.hpp"
#include "kme/errors.hpp"
#include "kme/estimator.hpp"
#include "kme/lecam.hpp"
#include "kme/serialize.hpp"
#include "kme/sweep.hpp"

#ifndef KME_LAB_VERSION
#define KME_LAB_VERSION "0.0.0"
#endif

namespace fs = std::filesystem;
using kme::ArgumentError;
using kme::Json;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitNumeric = 3;

// ---------------------------------------------------------------------------
// List parsing. "a,b,...,c" continues the progression of a and b up to c:
// geometric when b/a is an integer that lands on c, arithmetic otherwise.

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(s);
  while (std::getline(is, cur, sep)) {
    const auto b = cur.find_first_not_of(" \t");
    const auto e = cur.find_last_not_of(" \t");
    out.push_back(b == std::string::npos ? "" : cur.substr(b, e - b + 1));
  }
  return out;
}

double parse_double(const std::string& s, const std::string& what) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ArgumentError("cannot parse " + what + " value '" + s + "'");
  }
}

long parse_long(const std::string& s, const std::string& what) {
  try {
    std::size_t pos = 0;
    const long v = std::stol(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ArgumentError("cannot parse " + what + " value '" + s + "' as an integer");
  }
}

std::vector<double> parse_doubles(const std::string& s, const std::string& what) {
  std::vector<double> out;
  for (const auto& tok : split(s, ',')) out.push_back(parse_double(tok, what));
  return out;
}

std::vector<long> parse_int_list(const std::string& s, const std::string& what) {
  const auto toks = split(s, ',');
  std::vector<long> out;
  for (std::size_t i = 0; i < toks.size(); ++i) {
    if (toks[i] != "...") {
      out.push_back(parse_long(toks[i], what));
      continue;
    }
    if (out.size() < 2 || i + 1 >= toks.size()) {
      throw ArgumentError(what + ": '...' needs two terms before it and one after it");
    }
    const long a = out[out.size() - 2];
    const long b = out.back();
    const long end = parse_long(toks[++i], what);
    if (b <= a) throw ArgumentError(what + ": '...' needs an increasing progression");
    std::vector<long> geo;
    if (a > 0 && b % a == 0) {
      for (long v = b * (b / a); v <= end; v *= b / a) geo.push_back(v);
    }
    if (!geo.empty() && geo.back() == end) {
      out.insert(out.end(), geo.begin(), geo.end());
    } else {
      for (long v = b + (b - a); v <= end; v += b - a) out.push_back(v);
      if (out.back() != end) throw ArgumentError(what + ": progression does not reach " + std::to_string(end));
    }
  }
  if (out.empty()) throw ArgumentError(what + ": empty list");
  return out;
}

std::vector<int> parse_ints(const std::string& s, const std::string& what) {
  std::vector<int> out;
  for (long v : parse_int_list(s, what)) out.push_back(static_cast<int>(v));
  return out;
}

// ---------------------------------------------------------------------------
// Kernel flags shared by the subcommands.

struct KernelFlags {
  std::string family;
  std::string kernel_json;
  std::string eta, betas, etas, c, gamma, tau;
  std::string gamma_scale, tau_offset;

  void add(CLI::App* app) {
    app->add_option("--kernel", family, "gaussian | mixture | imq | matern");
    app->add_option("--kernel-json", kernel_json, "full kernel spec as JSON (needed for custom nu)");
    app->add_option("--eta", eta, "Gaussian bandwidth");
    app->add_option("--betas", betas, "mixture weights, comma separated");
    app->add_option("--etas", etas, "mixture bandwidths, comma separated");
    app->add_option("--c", c, "IMQ / Matern scale");
    app->add_option("--gamma", gamma, "IMQ exponent");
    app->add_option("--tau", tau, "Matern smoothness");
    app->add_option("--gamma-scale", gamma_scale, "IMQ exponent as a multiple of d");
    app->add_option("--tau-offset", tau_offset, "Matern smoothness as d/2 + offset");
  }

  bool present() const { return !family.empty() || !kernel_json.empty(); }

  kme::RadialKernel make(int d) const {
    if (!kernel_json.empty()) {
      Json spec = Json::parse(kernel_json);
      spec["d"] = d;
      return kme::kernel_from_json(spec);
    }
    if (family.empty()) throw ArgumentError("missing --kernel");
    auto need = [](const std::string& v, const char* flag) {
      if (v.empty()) throw ArgumentError(std::string("missing ") + flag);
      return parse_double(v, flag);
    };
    switch (kme::family_from_name(family)) {
      case kme::KernelFamily::gaussian: return kme::make_gaussian_kernel(d, need(eta, "--eta"));
      case kme::KernelFamily::gaussian_mixture:
        if (betas.empty() || etas.empty()) throw ArgumentError("missing --betas / --etas");
        return kme::make_mixture_kernel(d, parse_doubles(betas, "--betas"), parse_doubles(etas, "--etas"));
      case kme::KernelFamily::inverse_multiquadric: {
        const double g = gamma_scale.empty() ? need(gamma, "--gamma") : parse_double(gamma_scale, "--gamma-scale") * d;
        return kme::make_imq_kernel(d, need(c, "--c"), g);
      }
      case kme::KernelFamily::matern: {
        const double t = tau_offset.empty() ? need(tau, "--tau") : 0.5 * d + parse_double(tau_offset, "--tau-offset");
        return kme::make_matern_kernel(d, need(c, "--c"), t);
      }
      case kme::KernelFamily::custom: throw ArgumentError("custom kernels need --kernel-json");
    }
    throw ArgumentError("unknown kernel family");
  }
};

struct Common {
  std::string config;
  int jobs = 0;
  std::string out_dir = ".";
  void add(CLI::App* app) {
    app->add_option("--config", config, "JSON file whose keys mirror the long flags");
    app->add_option("--jobs", jobs, "worker threads (0: KME_LAB_JOBS or all cores); never changes results");
    app->add_option("--out-dir", out_dir, "directory for output files");
  }
};

int check_d(int d) {
  if (d < 1) throw ArgumentError("--d must be >= 1");
  return d;
}

long check_n(long n) {
  if (n < 1) throw ArgumentError("--n must be >= 1");
  return n;
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

fs::path prepare_dir(const std::string& dir) {
  fs::path p(dir);
  std::error_code ec;
  fs::create_directories(p, ec);
  if (ec) throw ArgumentError("cannot create output directory '" + dir + "': " + ec.message());
  return p;
}

void write_json(const fs::path& path, const Json& j) {
  std::ofstream os(path);
  if (!os) throw ArgumentError("cannot write " + path.string());
  os << j.dump(2) << '\n';
}

Json option_values(const CLI::App* app) {
  Json params = Json::object();
  for (const CLI::Option* opt : app->get_options()) {
    if (opt->count() == 0) continue;
    const std::string name = opt->get_name(false, true);
    if (name == "--help" || name == "-h") continue;
    const auto& res = opt->results();
    if (opt->get_type_size() == 0) params[name.substr(2)] = true;
    else params[name.substr(2)] = res.empty() ? "" : res.back();
  }
  return params;
}

void write_manifest(const fs::path& dir, const std::string& sub, const CLI::App* app, const Json& kernel,
                    std::optional<std::uint64_t> seed, const std::vector<fs::path>& outputs) {
  Json m;
  m["subcommand"] = sub;
  m["kernel"] = kernel;
  m["parameters"] = option_values(app);
  m["seed"] = seed ? Json(*seed) : Json(nullptr);
  m["tool_version"] = KME_LAB_VERSION;
  m["timestamp"] = utc_timestamp();
  Json outs = Json::array();
  for (const auto& p : outputs) outs.push_back(p.string());
  m["outputs"] = outs;
  write_json(dir / (sub + "_manifest.json"), m);
}

// ---------------------------------------------------------------------------
// rate

struct RateCmd {
  KernelFlags kernel;
  Common common;
  int d = 1;
  std::string target = "gaussian";
  double sigma2 = 1.0;
  std::string mu, x, v;
  double p = 0.5;
  std::string n;
  int reps = 200;
  std::uint64_t seed = 7;
  std::string norms = "rkhs,l2";
  int bootstrap = 1000;

  void add(CLI::App* app) {
    kernel.add(app);
    common.add(app);
    app->add_option("--d", d, "dimension");
    app->add_option("--target", target, "gaussian | two-point");
    app->add_option("--sigma2", sigma2, "Gaussian target variance");
    app->add_option("--mu", mu, "Gaussian target mean (default 0)");
    app->add_option("--x", x, "two-point target atom x");
    app->add_option("--v", v, "two-point target atom v");
    app->add_option("--p", p, "two-point target mass at x");
    app->add_option("--n", n, "sample sizes, e.g. 64,128,...,8192")->required();
    app->add_option("--reps", reps, "replicates per sample size");
    app->add_option("--seed", seed, "random seed");
    app->add_option("--norms", norms, "comma list of rkhs, l2");
    app->add_option("--bootstrap", bootstrap, "bootstrap resamples for the slope interval");
  }

  Eigen::VectorXd vec(const std::string& s, const char* flag, bool zero_default) const {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(d);
    if (s.empty()) {
      if (zero_default) return out;
      throw ArgumentError(std::string("missing ") + flag);
    }
    const auto vals = parse_doubles(s, flag);
    if (static_cast<int>(vals.size()) != d) throw ArgumentError(std::string(flag) + " must have d entries");
    for (int i = 0; i < d; ++i) out(i) = vals[i];
    return out;
  }

  int run(const CLI::App* app) {
    check_d(d);
    kme::RateExperimentConfig cfg;
    cfg.kernel = kernel.make(d);
    if (target == "gaussian") {
      cfg.target = kme::IsotropicGaussian{vec(mu, "--mu", true), sigma2};
    } else if (target == "two-point" || target == "two_point") {
      cfg.target = kme::TwoPointDiscrete{vec(x, "--x", false), vec(v, "--v", false), p};
    } else {
      throw ArgumentError("--target must be gaussian or two-point");
    }
    for (long nv : parse_int_list(n, "--n")) cfg.n_grid.push_back(static_cast<int>(check_n(nv)));
    cfg.replicates = reps;
    cfg.norms.clear();
    for (const auto& s : split(norms, ',')) cfg.norms.push_back(kme::norm_from_name(s));
    cfg.seed = seed;
    cfg.jobs = common.jobs;
    cfg.bootstrap_resamples = bootstrap;
    kme::validate_rate_config(cfg);

    const auto reports = kme::run_rate_experiments(cfg);
    const fs::path dir = prepare_dir(common.out_dir);
    Json out;
    out["schema"] = "rate";
    out["kernel"] = kme::kernel_to_json(cfg.kernel);
    out["target"] = kme::target_to_json(cfg.target);
    out["seed"] = seed;
    out["replicates"] = reps;
    Json rs = Json::array();
    for (const auto& r : reports) rs.push_back(kme::to_json(r));
    out["reports"] = rs;
    write_json(dir / "rate_report.json", out);
    {
      std::ofstream csv(dir / "errors.csv");
      if (!csv) throw ArgumentError("cannot write errors.csv");
      kme::write_errors_csv(csv, reports);
    }
    write_manifest(dir, "rate", app, out["kernel"], seed, {dir / "rate_report.json", dir / "errors.csv"});
    for (const auto& r : reports) {
      std::cout << kme::norm_name(r.norm) << ": slope ";
      if (r.slope) std::cout << *r.slope << " [" << *r.slope_ci_lo << ", " << *r.slope_ci_hi << "]";
      else std::cout << "n/a";
      std::cout << '\n';
    }
    return 0;
  }
};

// ---------------------------------------------------------------------------
// bounds

struct BoundsCmd {
  KernelFlags kernel;
  Common common;
  std::string d = "1";
  std::string n = "100";
  std::string theorems = "thm1,cor2,thm6,thm8,thmE1,thm9,cor10,thm12,thm13";
  double sc_sigma2 = 1.0;
  double delta = 0.5;

  void add(CLI::App* app) {
    kernel.add(app);
    common.add(app);
    app->add_option("--d", d, "dimensions, e.g. 1,2,...,10");
    app->add_option("--n", n, "sample sizes");
    app->add_option("--theorems", theorems, "comma list of theorem ids");
    app->add_option("--sc-sigma2", sc_sigma2, "sigma^2 for the strong-convexity constants (thm6, thm12)");
    app->add_option("--delta", delta, "confidence level of the upper bound column");
  }

  int run(const CLI::App* app) {
    const auto dims = parse_ints(d, "--d");
    const auto ns = parse_int_list(n, "--n");
    const auto ths = split(theorems, ',');
    static const std::vector<std::string> known{"thm1", "cor2", "thm6", "thm8", "thmE1", "thm9", "cor10", "thm12", "thm13"};
    for (const auto& t : ths) {
      if (std::find(known.begin(), known.end(), t) == known.end()) throw ArgumentError("unknown theorem id '" + t + "'");
    }
    if (!kernel.present()) throw ArgumentError("missing --kernel");
    Json rows = Json::array();
    Json kernels = Json::array();
    for (int dd : dims) {
      const kme::RadialKernel k = kernel.make(check_d(dd));
      kernels.push_back(kme::kernel_to_json(k));
      const kme::KernelConstants kc = kme::kernel_constants(k);
      std::map<kme::Norm, std::optional<kme::StrongConvexityEstimate>> sc;
      auto strong = [&](kme::Norm norm) -> const std::optional<kme::StrongConvexityEstimate>& {
        auto it = sc.find(norm);
        if (it != sc.end()) return it->second;
        std::optional<kme::StrongConvexityEstimate> e;
        if (dd <= 4 && (norm == kme::Norm::rkhs || kme::moment_condition_holds(k.nu, dd))) {
          e = kme::estimate_cpsi_eps(k, sc_sigma2, norm);
        }
        return sc.emplace(norm, e).first->second;
      };
      for (long nn : ns) {
        check_n(nn);
        for (const auto& t : ths) {
          kme::BoundReport r;
          bool l2 = false;
          if (t == "thm1") r = kme::bound_thm1(kme::find_z_beta(k).beta, nn);
          else if (t == "cor2") r = kme::bound_cor2(kme::alpha_for(k).alpha, nn);
          else if (t == "thm8") r = kme::bound_thm8(k, nn);
          else if (t == "thmE1") r = kme::bound_thmE1(k, nn);
          else if (t == "thm9") { r = kme::bound_thm9(k, kme::find_z_beta(k).z_norm2, nn); l2 = true; }
          else if (t == "cor10") { r = kme::bound_cor10(k, nn); l2 = true; }
          else if (t == "thm13") { r = kme::bound_thm13(k, nn); l2 = true; }
          else {
            l2 = t == "thm12";
            const auto& e = strong(l2 ? kme::Norm::l2 : kme::Norm::rkhs);
            if (e) {
              r = l2 ? kme::bound_thm12(e->c_psi, e->eps_psi, nn) : kme::bound_thm6(e->c_psi, e->eps_psi, nn);
              r.constants.emplace_back("sigma2", e->sigma2);
            } else {
              r.theorem = t;
              r.n = nn;
              r.probability_floor = 0.25;
              r.preconditions.push_back({"constants_estimable", false,
                                         dd > 4 ? "strong-convexity constants are estimated for d <= 4 only"
                                                : "int t^{-d/2} dnu diverges"});
            }
          }
          if (r.kernel_label.empty()) r.kernel_label = kme::kernel_label(k);
          r.d = dd;
          Json row = kme::to_json(r);
          std::optional<double> upper;
          if (!l2) upper = kme::hoeffding_bound(kc.C_k_rkhs, nn, delta);
          else if (kc.C_k_l2) upper = kme::hoeffding_bound(*kc.C_k_l2, nn, delta);
          row["norm"] = l2 ? "l2" : "rkhs";
          row["s_lower"] = row["s"];
          row["upper_bound"] = upper ? Json(*upper) : Json(nullptr);
          row["sandwich_ok"] = (r.s && upper) ? Json(*r.s <= *upper) : Json(nullptr);
          rows.push_back(row);
        }
      }
    }
    const fs::path dir = prepare_dir(common.out_dir);
    Json out;
    out["schema"] = "bounds";
    out["kernels"] = kernels;
    out["delta"] = delta;
    out["rows"] = rows;
    write_json(dir / "bounds.json", out);
    write_manifest(dir, "bounds", app, kernels, std::nullopt, {dir / "bounds.json"});
    std::cout << std::left << std::setw(7) << "thm" << std::setw(4) << "d" << std::setw(8) << "n" << std::setw(14)
              << "s" << std::setw(14) << "upper" << "preconditions\n";
    for (const auto& row : rows) {
      std::string pre = "ok";
      for (const auto& p : row["preconditions"]) {
        if (!p["satisfied"].get<bool>()) pre = "FAILED " + p["name"].get<std::string>();
      }
      auto num = [](const Json& j) { return j.is_null() ? std::string("n/a") : std::to_string(j.get<double>()); };
      std::cout << std::setw(7) << row["theorem"].get<std::string>() << std::setw(4) << row["d"].get<int>()
                << std::setw(8) << row["n"].get<long>() << std::setw(14) << num(row["s"]) << std::setw(14)
                << num(row["upper_bound"]) << pre << '\n';
    }
    return 0;
  }
};

// ---------------------------------------------------------------------------
// verify

struct VerifyCmd {
  Common common;
  std::string families = "gaussian,mixture,imq,matern";
  std::string norms = "rkhs,l2";
  std::string d = "1,2,3";
  std::string sigma2 = "0.5,1";
  int pairs = 20;
  std::uint64_t seed = 7;
  double tol = 1e-6;
  double perturbation = 0.0;

  void add(CLI::App* app) {
    common.add(app);
    app->add_option("--families", families, "reference kernel families");
    app->add_option("--norms", norms, "rkhs, l2");
    app->add_option("--d", d, "dimensions (1..5)");
    app->add_option("--sigma2", sigma2, "Gaussian variances");
    app->add_option("--pairs", pairs, "random mean pairs per cell");
    app->add_option("--seed", seed, "random seed");
    app->add_option("--tol", tol, "pass if |closed - oracle| <= tol (1 + |closed|)");
    app->add_option("--inject-perturbation", perturbation, "test mode: scale closed forms by (1 + value)");
  }

  int run(const CLI::App* app) {
    kme::VerifyConfig cfg;
    cfg.families.clear();
    for (const auto& f : split(families, ',')) cfg.families.push_back(kme::family_from_name(f));
    cfg.norms.clear();
    for (const auto& s : split(norms, ',')) cfg.norms.push_back(kme::norm_from_name(s));
    cfg.dims = parse_ints(d, "--d");
    cfg.sigma2s = parse_doubles(sigma2, "--sigma2");
    for (double s : cfg.sigma2s) {
      if (!(s > 0.0)) throw ArgumentError("--sigma2 values must be > 0");
    }
    cfg.pairs = pairs;
    cfg.seed = seed;
    cfg.tol = tol;
    cfg.perturbation = perturbation;
    cfg.jobs = common.jobs;
    const auto checks = kme::run_verify_sweep(cfg);

    Json arr = Json::array();
    int passed = 0;
    double worst = 0.0;
    for (const auto& c : checks) {
      passed += c.pass;
      worst = std::max(worst, c.abs_error);
      arr.push_back({{"family", c.family},
                     {"d", c.d},
                     {"sigma2", c.sigma2},
                     {"norm", kme::norm_name(c.norm)},
                     {"pair", c.pair},
                     {"delta_norm2", c.delta_norm2},
                     {"closed_form", c.closed_form},
                     {"oracle", c.oracle},
                     {"oracle_error", kme::number_or_null(c.oracle_error)},
                     {"abs_error", kme::number_or_null(c.abs_error)},
                     {"allowed", c.allowed},
                     {"pass", c.pass}});
    }
    const bool all = passed == static_cast<int>(checks.size());
    Json out;
    out["schema"] = "verify";
    out["tol"] = tol;
    out["perturbation"] = perturbation;
    out["seed"] = seed;
    out["summary"] = {{"total", checks.size()},
                      {"passed", passed},
                      {"failed", static_cast<int>(checks.size()) - passed},
                      {"max_abs_error", worst},
                      {"all_pass", all}};
    out["checks"] = arr;
    const fs::path dir = prepare_dir(common.out_dir);
    write_json(dir / "verify.json", out);
    write_manifest(dir, "verify", app, nullptr, seed, {dir / "verify.json"});
    std::cout << passed << "/" << checks.size() << " checks pass (max abs error " << worst << ", tol " << tol << ")\n";
    return all ? 0 : kExitNumeric;
  }
};

// ---------------------------------------------------------------------------
// lecam

struct LecamCmd {
  KernelFlags kernel;
  Common common;
  int d = 1;
  long n = 100;
  std::string norm = "rkhs";
  std::string family = "thm8";
  int stress = 0;
  std::string estimator = "empirical";
  std::uint64_t seed = 7;
  bool check_e1 = false;
  int cap = kme::kHypothesisCap;

  void add(CLI::App* app) {
    kernel.add(app);
    common.add(app);
    app->add_option("--d", d, "dimension");
    app->add_option("--n", n, "sample size");
    app->add_option("--norm", norm, "rkhs | l2");
    app->add_option("--family", family, "thm8 (Gaussian packing) | two-point");
    app->add_option("--stress", stress, "replicates for the empirical stress test (0 skips it)");
    app->add_option("--estimator", estimator, "empirical | zero");
    app->add_option("--seed", seed, "random seed");
    app->add_flag("--check-e1", check_e1, "also check the closeness condition of the alternate RKHS proof");
    app->add_option("--cap", cap, "maximum number of hypotheses");
  }

  int run(const CLI::App* app) {
    check_d(d);
    check_n(n);
    const kme::RadialKernel k = kernel.make(d);
    const kme::Norm nm = kme::norm_from_name(norm);
    kme::HardFamily f;
    if (family == "thm8") f = kme::build_hard_family_thm8(k, n, nm, cap);
    else if (family == "two-point" || family == "two_point") f = kme::build_two_point_family(k, n, nm);
    else throw ArgumentError("--family must be thm8 or two-point");
    const kme::ConditionReport cr = kme::verify_hard_family(f, check_e1, common.jobs);
    Json out;
    out["schema"] = "lecam";
    out["family"] = kme::to_json(f);
    out["conditions"] = kme::to_json(cr);
    if (stress > 0) {
      out["stress"] = kme::to_json(kme::minimax_stress(estimator, f, stress, seed, common.jobs));
    } else {
      out["stress"] = nullptr;
    }
    const fs::path dir = prepare_dir(common.out_dir);
    write_json(dir / "lecam.json", out);
    write_manifest(dir, "lecam", app, kme::kernel_to_json(k), seed, {dir / "lecam.json"});
    std::cout << f.theorem << " family, " << f.hypotheses.size() << " hypotheses, s = " << f.s
              << ": conditions " << (cr.all_pass() ? "pass" : "FAIL");
    if (stress > 0) std::cout << ", worst-case exceedance " << out["stress"]["worst_case"].get<double>();
    std::cout << '\n';
    return cr.all_pass() ? 0 : kExitNumeric;
  }
};

// ---------------------------------------------------------------------------
// constants

struct ConstantsCmd {
  KernelFlags kernel;
  Common common;
  std::string d = "1,2,3,4,5";

  void add(CLI::App* app) {
    kernel.add(app);
    common.add(app);
    app->add_option("--d", d, "dimensions");
  }

  static std::vector<kme::RadialKernel> default_rows(int dd) {
    return {kme::make_gaussian_kernel(dd, 1.0),
            kme::make_mixture_kernel(dd, {0.6, 0.4}, {1.0, 0.5}),
            kme::make_imq_kernel(dd, 1.0, 2.0),
            kme::make_imq_kernel(dd, 1.0, 0.5),
            kme::make_matern_kernel(dd, 1.0, 0.5 * dd + 1.5),
            kme::make_matern_kernel(dd, 1.0, 0.5 * dd + 0.5)};
  }

  int run(const CLI::App* app) {
    Json rows = Json::array();
    bool all_ok = true;
    for (int dd : parse_ints(d, "--d")) {
      check_d(dd);
      const auto ks = kernel.present() ? std::vector<kme::RadialKernel>{kernel.make(dd)} : default_rows(dd);
      for (const auto& k : ks) {
        const kme::AlphaChoice a = kme::alpha_for(k);
        const kme::IntervalConstant bk = kme::bk_for(k);
        const kme::IntervalConstant ak = kme::ak_for(k);
        const kme::IntervalConstant bl = kme::bk_l2_for(k);
        const kme::KernelConstants kc = kme::kernel_constants(k);
        const double mass = kme::nu_interval_mass(k, bk.lo, bk.hi);
        const double tail = kme::nu_interval_mass(k, a.t1, std::numeric_limits<double>::infinity());
        const bool ok = mass >= bk.beta * (1.0 - 1e-12) && tail >= a.alpha * (1.0 - 1e-12);
        all_ok = all_ok && ok;
        Json row;
        row["kernel"] = kme::kernel_to_json(k);
        row["label"] = kme::kernel_label(k);
        row["d"] = dd;
        row["alpha"] = {{"t1", a.t1}, {"alpha", a.alpha}};
        row["B_k"] = kme::to_json(bk);
        row["A_k"] = kme::to_json(ak);
        row["B_k_l2"] = kme::to_json(bl);
        row["mass_check"] = {{"interval_mass", mass}, {"beta", bk.beta}, {"tail_mass", tail}, {"alpha", a.alpha}, {"ok", ok}};
        row["kernel_constants"] = {{"Z_nu", kc.Z_nu},
                                   {"C_k_rkhs", kc.C_k_rkhs},
                                   {"C_k_l2", kc.C_k_l2 ? Json(*kc.C_k_l2) : Json(nullptr)},
                                   {"psi_l2_sq", kc.psi_l2_sq ? Json(*kc.psi_l2_sq) : Json(nullptr)}};
        rows.push_back(row);
        std::cout << std::left << std::setw(52) << row["label"].get<std::string>() << " alpha " << std::setw(12) << a.alpha
                  << " B_k " << std::setw(12) << bk.value << " A_k " << std::setw(12) << ak.value << " B_k_l2 "
                  << std::setw(12) << bl.value << (ok ? " mass ok" : " MASS CHECK FAILED") << '\n';
      }
    }
    const fs::path dir = prepare_dir(common.out_dir);
    Json out;
    out["schema"] = "constants";
    out["rows"] = rows;
    out["all_mass_checks_pass"] = all_ok;
    write_json(dir / "constants.json", out);
    write_manifest(dir, "constants", app, nullptr, std::nullopt, {dir / "constants.json"});
    return all_ok ? 0 : kExitNumeric;
  }
};

// ---------------------------------------------------------------------------
// --config: the JSON keys become flags inserted right after the subcommand, so
// flags given on the command line win (every option keeps its last value).

std::vector<std::string> expand_config(const std::vector<std::string>& args) {
  std::string path;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) path = args[i + 1];
    else if (args[i].rfind("--config=", 0) == 0) path = args[i].substr(9);
  }
  if (path.empty() || args.size() < 2) return args;
  std::ifstream is(path);
  if (!is) throw ArgumentError("cannot read config file '" + path + "'");
  const Json cfg = Json::parse(is);
  if (!cfg.is_object()) throw ArgumentError("config file must hold a JSON object");
  std::vector<std::string> extra;
  for (const auto& [key, value] : cfg.items()) {
    if (key == "config") continue;
    if (key == "kernel" && value.is_object()) {
      extra.push_back("--kernel-json");
      extra.push_back(value.dump());
      continue;
    }
    if (value.is_boolean()) {
      if (value.get<bool>()) extra.push_back("--" + key);
      continue;
    }
    extra.push_back("--" + key);
    if (value.is_string()) {
      extra.push_back(value.get<std::string>());
    } else if (value.is_array()) {
      std::string joined;
      for (const auto& x : value) joined += (joined.empty() ? "" : ",") + (x.is_string() ? x.get<std::string>() : x.dump());
      extra.push_back(joined);
    } else {
      extra.push_back(value.dump());
    }
  }
  std::vector<std::string> out(args.begin(), args.begin() + 2);
  out.insert(out.end(), extra.begin(), extra.end());
  out.insert(out.end(), args.begin() + 2, args.end());
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"kme_lab: kernel mean embedding estimation experiments and minimax bounds"};
  app.set_version_flag("--version", KME_LAB_VERSION);
  app.require_subcommand(1);
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

  RateCmd rate;
  BoundsCmd bounds;
  VerifyCmd verify;
  LecamCmd lecam;
  ConstantsCmd constants;
  CLI::App* s_rate = app.add_subcommand("rate", "empirical convergence rate experiment");
  CLI::App* s_bounds = app.add_subcommand("bounds", "minimax lower-bound table over (d, n)");
  CLI::App* s_verify = app.add_subcommand("verify", "closed forms against independent oracles");
  CLI::App* s_lecam = app.add_subcommand("lecam", "build, verify and stress a hard hypothesis family");
  CLI::App* s_constants = app.add_subcommand("constants", "per-kernel interval constants");
  rate.add(s_rate);
  bounds.add(s_bounds);
  verify.add(s_verify);
  lecam.add(s_lecam);
  constants.add(s_constants);

  std::string sub = "kme_lab";
  try {
    std::vector<std::string> args(argv, argv + argc);
    if (args.size() >= 2) sub = args[1];
    args = expand_config(args);
    std::vector<char*> cargs;
    for (auto& a : args) cargs.push_back(a.data());
    try {
      app.parse(static_cast<int>(cargs.size()), cargs.data());
    } catch (const CLI::ParseError& e) {
      const int code = app.exit(e);
      return code == 0 ? 0 : kExitUsage;
    }
    if (s_rate->parsed()) return rate.run(s_rate);
    if (s_bounds->parsed()) return bounds.run(s_bounds);
    if (s_verify->parsed()) return verify.run(s_verify);
    if (s_lecam->parsed()) return lecam.run(s_lecam);
    if (s_constants->parsed()) return constants.run(s_constants);
    return kExitUsage;
  } catch (const kme::ArgumentError& e) {
    std::cerr << "kme_lab " << sub << ": error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const kme::UnsupportedCaseError& e) {
    std::cerr << "kme_lab " << sub << ": unsupported: " << e.what() << '\n';
    return kExitUsage;
  } catch (const kme::PreconditionError& e) {
    std::cerr << "kme_lab " << sub << ": precondition failed: " << e.what() << '\n';
    return kExitUsage;
  } catch (const Json::exception& e) {
    std::cerr << "kme_lab " << sub << ": invalid JSON: " << e.what() << '\n';
    return kExitUsage;
  } catch (const kme::IntegrationError& e) {
    std::cerr << "kme_lab " << sub << ": numeric failure: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const std::exception& e) {
    std::cerr << "kme_lab " << sub << ": failure: " << e.what() << '\n';
    return kExitNumeric;
  }
}
