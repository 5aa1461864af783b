#include "kme/serialize.hpp"

#include <cmath>
#include <ostream>

#include "kme/errors.hpp"

namespace kme {

namespace {

double required_number(const Json& spec, const char* key) {
  if (!spec.contains(key) || !spec.at(key).is_number()) {
    throw ArgumentError(std::string("kernel spec: '") + key + "' must be a number");
  }
  return spec.at(key).get<double>();
}

std::vector<double> number_list(const Json& v, const char* key) {
  if (!v.is_array()) throw ArgumentError(std::string("kernel spec: '") + key + "' must be an array");
  std::vector<double> out;
  for (const auto& x : v) {
    if (!x.is_number()) throw ArgumentError(std::string("kernel spec: '") + key + "' must hold numbers");
    out.push_back(x.get<double>());
  }
  return out;
}

std::vector<std::vector<double>> tuples(const Json& spec, const char* key, std::size_t width) {
  std::vector<std::vector<double>> out;
  if (!spec.contains(key)) return out;
  for (const auto& row : spec.at(key)) {
    auto v = number_list(row, key);
    if (v.size() != width) {
      throw ArgumentError(std::string("kernel spec: entries of '") + key + "' need " + std::to_string(width) +
                          " numbers");
    }
    out.push_back(std::move(v));
  }
  return out;
}

Json vector_json(const Eigen::VectorXd& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(number_or_null(v(i)));
  return a;
}

Json optional_json(const std::optional<double>& x) { return x ? number_or_null(*x) : Json(nullptr); }

}  // namespace

Json number_or_null(double x) { return std::isfinite(x) ? Json(x) : Json(nullptr); }

RadialKernel kernel_from_json(const Json& spec) {
  if (!spec.is_object()) throw ArgumentError("kernel spec must be a JSON object");
  if (!spec.contains("family") || !spec.at("family").is_string()) {
    throw ArgumentError("kernel spec: 'family' is required");
  }
  if (!spec.contains("d") || !spec.at("d").is_number_integer()) throw ArgumentError("kernel spec: integer 'd' is required");
  const int d = spec.at("d").get<int>();
  switch (family_from_name(spec.at("family").get<std::string>())) {
    case KernelFamily::gaussian: return make_gaussian_kernel(d, required_number(spec, "eta"));
    case KernelFamily::gaussian_mixture:
      if (!spec.contains("betas") || !spec.contains("etas")) {
        throw ArgumentError("kernel spec: mixture needs 'betas' and 'etas'");
      }
      return make_mixture_kernel(d, number_list(spec.at("betas"), "betas"), number_list(spec.at("etas"), "etas"));
    case KernelFamily::inverse_multiquadric:
      return make_imq_kernel(d, required_number(spec, "c"), required_number(spec, "gamma"));
    case KernelFamily::matern: return make_matern_kernel(d, required_number(spec, "c"), required_number(spec, "tau"));
    case KernelFamily::custom: {
      NuMeasure nu;
      for (const auto& a : tuples(spec, "atoms", 2)) nu.atoms.push_back({a[0], a[1]});
      for (const auto& g : tuples(spec, "gamma", 3)) nu.gamma.push_back({g[0], g[1], g[2]});
      for (const auto& g : tuples(spec, "invgamma", 3)) nu.invgamma.push_back({g[0], g[1], g[2]});
      return make_custom_kernel(d, std::move(nu));
    }
  }
  throw ArgumentError("kernel spec: unknown family");
}

Json kernel_to_json(const RadialKernel& k) {
  Json j;
  j["family"] = family_name(k.family);
  j["d"] = k.d;
  const auto& p = k.params;
  switch (k.family) {
    case KernelFamily::gaussian: j["eta"] = p.eta; break;
    case KernelFamily::gaussian_mixture:
      j["betas"] = p.betas;
      j["etas"] = p.etas;
      break;
    case KernelFamily::inverse_multiquadric:
      j["c"] = p.c;
      j["gamma"] = p.gamma;
      break;
    case KernelFamily::matern:
      j["c"] = p.c;
      j["tau"] = p.tau;
      break;
    case KernelFamily::custom: {
      Json atoms = Json::array();
      for (const auto& a : k.nu.atoms) atoms.push_back({a.t, a.mass});
      Json gamma = Json::array();
      for (const auto& g : k.nu.gamma) gamma.push_back({g.shape, g.rate, g.weight});
      Json inv = Json::array();
      for (const auto& g : k.nu.invgamma) inv.push_back({g.shape, g.scale, g.weight});
      j["atoms"] = atoms;
      j["gamma"] = gamma;
      j["invgamma"] = inv;
      break;
    }
  }
  return j;
}

Json target_to_json(const Target& t) {
  Json j;
  if (const auto* g = std::get_if<IsotropicGaussian>(&t)) {
    j["type"] = "gaussian";
    j["mu"] = vector_json(g->mu);
    j["sigma2"] = g->sigma2;
  } else {
    const auto& p = std::get<TwoPointDiscrete>(t);
    j["type"] = "two_point";
    j["x"] = vector_json(p.x);
    j["v"] = vector_json(p.v);
    j["p"] = p.p;
  }
  return j;
}

Json to_json(const BoundReport& r) {
  Json j;
  j["theorem"] = r.theorem;
  j["kernel"] = r.kernel_label;
  j["d"] = r.d;
  j["n"] = r.n;
  j["s"] = optional_json(r.s);
  j["probability_floor"] = r.probability_floor;
  Json pre = Json::array();
  for (const auto& p : r.preconditions) pre.push_back({{"name", p.name}, {"satisfied", p.satisfied}, {"detail", p.detail}});
  j["preconditions"] = pre;
  Json c = Json::object();
  for (const auto& [k, v] : r.constants) c[k] = number_or_null(v);
  j["constants"] = c;
  j["fallback_s"] = optional_json(r.fallback_s);
  j["fallback_floor"] = optional_json(r.fallback_floor);
  return j;
}

Json to_json(const IntervalConstant& c) {
  return Json{{"lo", c.lo},       {"hi", c.hi}, {"beta", c.beta}, {"value", number_or_null(c.value)},
              {"printed", optional_json(c.printed)}, {"branch", c.branch}};
}

Json to_json(const StrongConvexityEstimate& e) {
  return Json{{"c_psi", e.c_psi}, {"eps_psi", e.eps_psi}, {"sigma2", e.sigma2}, {"d", e.d},
              {"norm", norm_name(e.norm)}, {"F0", e.F0}, {"quadrature_error", e.quadrature_error}};
}

Json to_json(const RateReport& r) {
  Json j;
  j["norm"] = norm_name(r.norm);
  j["n_grid"] = r.n_grid;
  j["replicates"] = r.errors.empty() ? 0 : r.errors.front().size();
  j["mean_error"] = r.mean_error;
  j["median_error"] = r.median_error;
  j["slope"] = optional_json(r.slope);
  j["intercept"] = optional_json(r.intercept);
  j["slope_ci"] = r.slope_ci_lo ? Json{*r.slope_ci_lo, *r.slope_ci_hi} : Json(nullptr);
  return j;
}

Json to_json(const HardFamily& f) {
  Json j;
  j["theorem"] = f.theorem;
  j["norm"] = norm_name(f.norm);
  j["kernel"] = kernel_to_json(f.kernel);
  j["n"] = f.n;
  j["s"] = f.s;
  j["construction_s"] = f.construction_s;
  j["alpha"] = f.alpha;
  j["M"] = f.M;
  j["sigma2"] = f.sigma2;
  j["c_nu"] = f.c_nu;
  j["N"] = f.N;
  j["packing_radius"] = f.packing_radius;
  j["probability_floor"] = f.probability_floor;
  Json h = Json::array();
  for (const auto& t : f.hypotheses) h.push_back(target_to_json(t));
  j["hypotheses"] = h;
  return j;
}

Json to_json(const ConditionReport& r) {
  Json j;
  j["min_pairwise_distance"] = r.min_pairwise_distance;
  j["required_separation"] = r.required_separation;
  j["construction_separation"] = r.construction_separation;
  j["mean_kl"] = r.mean_kl;
  j["max_pairwise_kl"] = r.max_pairwise_kl;
  j["kl_budget"] = r.kl_budget;
  j["max_closeness"] = r.max_closeness;
  j["closeness_limit"] = r.closeness_limit;
  j["max_e1_margin"] = optional_json(r.max_e1_margin);
  j["floor_value"] = r.floor_value;
  j["flags"] = {{"separation", r.separation_ok},
                {"construction_separation", r.construction_separation_ok},
                {"kl_budget", r.kl_ok},
                {"closeness", r.closeness_ok},
                {"e1", r.e1_ok ? Json(*r.e1_ok) : Json(nullptr)}};
  j["all_pass"] = r.all_pass();
  return j;
}

Json to_json(const StressSummary& s) {
  Json j;
  j["estimator"] = s.estimator;
  j["replicates"] = s.replicates;
  j["s"] = s.s;
  j["probability_floor"] = s.probability_floor;
  j["exceedance"] = s.exceedance;
  j["worst_case"] = s.worst_case;
  j["worst_hypothesis"] = s.worst_hypothesis;
  return j;
}

void write_errors_csv(std::ostream& os, const std::vector<RateReport>& reports) {
  const auto old_precision = os.precision(17);
  os << "n,replicate,error,norm\n";
  for (const auto& r : reports) {
    for (std::size_t i = 0; i < r.n_grid.size(); ++i) {
      for (std::size_t rep = 0; rep < r.errors[i].size(); ++rep) {
        os << r.n_grid[i] << ',' << rep << ',' << r.errors[i][rep] << ',' << norm_name(r.norm) << '\n';
      }
    }
  }
  os.precision(old_precision);
}

}  // namespace kme
