#include "gibbskit/gibbskit.h"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <memory>
#include <string>

#include <json.hpp>

#include "gibbskit/cluster_expansion.hpp"
#include "gibbskit/exact_oracle.hpp"
#include "gibbskit/imaginary_time_locality.hpp"
#include "gibbskit/partition_algorithms.hpp"
#include "gibbskit/statistics.hpp"
#include "gibbskit/structure_checks.hpp"

struct gk_model {
  gibbskit::Hamiltonian ham;
  nlohmann::json spec;
};

struct gk_state {
  gibbskit::GibbsState state;
};

using nlohmann::json;

namespace gibbskit {
namespace {

thread_local std::string last_error;

template <class F>
gk_status guarded(F&& f) {
  try {
    f();
    last_error.clear();
    return GK_OK;
  } catch (const InvalidArgument& e) {
    last_error = e.what();
    return GK_INVALID_ARGUMENT;
  } catch (const OverCap& e) {
    last_error = e.what();
    return GK_OVER_CAP;
  } catch (const DomainError& e) {
    last_error = e.what();
    return GK_DOMAIN_ERROR;
  } catch (const NumericalError& e) {
    last_error = e.what();
    return GK_NUMERICAL_ERROR;
  } catch (const json::exception& e) {
    last_error = std::string("malformed JSON: ") + e.what();
    return GK_INVALID_ARGUMENT;
  } catch (const std::exception& e) {
    last_error = e.what();
    return GK_INTERNAL_ERROR;
  } catch (...) {
    last_error = "unknown error";
    return GK_INTERNAL_ERROR;
  }
}

void require(const void* p, const char* what) {
  if (p == nullptr) throw InvalidArgument(std::string(what) + " is null");
}

char* copy_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out == nullptr) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

// Typed access to the params object; messages name the offending key.
class Params {
 public:
  explicit Params(json j) : j_(std::move(j)) {
    if (j_.is_null()) j_ = json::object();
    if (!j_.is_object()) throw InvalidArgument("params must be a JSON object");
  }

  bool has(const char* key) const { return j_.contains(key) && !j_[key].is_null(); }
  const json& raw(const char* key) const {
    if (!has(key)) throw InvalidArgument(std::string("config key '") + key + "' is required");
    return j_[key];
  }

  double number(const char* key) const {
    const json& v = raw(key);
    if (!v.is_number()) throw InvalidArgument(std::string("config key '") + key + "' must be a number");
    return v.get<double>();
  }
  double number(const char* key, double fallback) const { return has(key) ? number(key) : fallback; }

  int integer(const char* key) const {
    const json& v = raw(key);
    if (!v.is_number_integer()) throw InvalidArgument(std::string("config key '") + key + "' must be an integer");
    return v.get<int>();
  }
  int integer(const char* key, int fallback) const { return has(key) ? integer(key) : fallback; }

  std::string string(const char* key) const {
    const json& v = raw(key);
    if (!v.is_string()) throw InvalidArgument(std::string("config key '") + key + "' must be a string");
    return v.get<std::string>();
  }
  std::string string(const char* key, const std::string& fallback) const { return has(key) ? string(key) : fallback; }

  std::vector<int> ints(const char* key) const {
    const json& v = raw(key);
    if (!v.is_array()) throw InvalidArgument(std::string("config key '") + key + "' must be an array of integers");
    std::vector<int> out;
    for (const auto& x : v) {
      if (!x.is_number_integer())
        throw InvalidArgument(std::string("config key '") + key + "' must be an array of integers");
      out.push_back(x.get<int>());
    }
    return out;
  }
  std::vector<int> ints(const char* key, std::vector<int> fallback) const {
    return has(key) ? ints(key) : std::move(fallback);
  }

  std::vector<double> numbers(const char* key) const {
    const json& v = raw(key);
    if (!v.is_array()) throw InvalidArgument(std::string("config key '") + key + "' must be an array of numbers");
    std::vector<double> out;
    for (const auto& x : v) {
      if (!x.is_number()) throw InvalidArgument(std::string("config key '") + key + "' must be an array of numbers");
      out.push_back(x.get<double>());
    }
    return out;
  }

  double beta() const {
    const double b = number("beta");
    if (!(b >= 0.0)) throw InvalidArgument("config key 'beta' must be non-negative");
    return b;
  }

 private:
  json j_;
};

json num(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

json plot(std::vector<std::string> columns, json rows, std::string comment = {}) {
  json p{{"columns", std::move(columns)}, {"rows", std::move(rows)}};
  if (!comment.empty()) p["comment"] = std::move(comment);
  return p;
}

// AND over the pass flags given; null when none were given.
json all_of(const std::vector<bool>& flags) {
  if (flags.empty()) return nullptr;
  for (bool f : flags)
    if (!f) return false;
  return true;
}

// {"term": i}, a bare index, or a custom term {"support", "pauli" | "matrix_re", "coefficient"}.
DenseOperator parse_operator(const Hamiltonian& ham, const json& spec, const char* key) {
  if (spec.is_number_integer() || (spec.is_object() && spec.contains("term"))) {
    const int i = spec.is_number_integer() ? spec.get<int>() : spec["term"].get<int>();
    if (i < 0 || i >= ham.num_terms())
      throw InvalidArgument(std::string("config key '") + key + "': term index " + std::to_string(i) + " out of range");
    return ham.term(i).op;
  }
  if (!spec.is_object()) throw InvalidArgument(std::string("config key '") + key + "' must be a term index or object");
  json model{{"model", "custom"}, {"N", ham.num_vertices()}, {"d", ham.local_dim()}, {"terms", json::array({spec})}};
  return build_model(model).term(0).op;
}

QbpOptions qbp_options(const Params& p) {
  QbpOptions q;
  q.substeps = p.integer("substeps", q.substeps);
  q.max_substeps = p.integer("max_substeps", q.max_substeps);
  q.tolerance = p.number("tolerance", q.tolerance);
  return q;
}

json to_json(const std::vector<SweepPoint>& pts, std::vector<bool>& flags, json& rows) {
  json out = json::array();
  for (const auto& s : pts) {
    json row{{"l", s.param}, {"measured", num(s.measured)}, {"bound", num(s.bound)}};
    if (std::isfinite(s.bound)) {
      row["pass"] = s.measured <= s.bound + 1e-9;
      flags.push_back(row["pass"]);
    }
    out.push_back(row);
    rows.push_back({s.param, num(s.measured), num(s.bound)});
  }
  return out;
}

// ---------------------------------------------------------------------------

json op_exact(const Hamiltonian& ham, const Params& p) {
  const double beta = p.beta();
  const GibbsState s = gibbs(ham, beta, {p.has("regions")});
  double ent = 0.0;
  for (Eigen::Index i = 0; i < s.weights.size(); ++i)
    if (s.weights(i) > 0.0) ent -= s.weights(i) * std::log(s.weights(i));
  json out{{"beta", beta},
           {"log_z", s.log_z},
           {"energy", s.energy},
           {"entropy", ent},
           {"free_energy", beta > 0.0 ? num(-s.log_z / beta) : json(nullptr)},
           {"ground_energy", s.spectrum->values.minCoeff()},
           {"dimension", s.spectrum->dim()},
           {"all_pass", nullptr}};
  if (p.has("regions")) {
    json regs = json::array();
    for (const auto& r : p.raw("regions")) {
      const Region reg = make_region(ham, r.get<std::vector<int>>());
      regs.push_back({{"region", reg}, {"entropy", region_entropy(s, reg)}});
    }
    out["region_entropies"] = regs;
  }
  return out;
}

json op_logz(const Hamiltonian& ham, const Params& p) {
  const double beta = p.beta();
  const std::string method = p.string("method", "exact");
  const bool feasible = ipow(ham.local_dim(), static_cast<std::size_t>(ham.num_vertices())) <= dense_cap();
  if (method == "exact") return {{"method", method}, {"beta", beta}, {"log_z", exact_log_z(ham, beta)}, {"all_pass", nullptr}};

  if (method == "cluster") {
    json out{{"method", method}, {"beta", beta}};
    std::vector<bool> flags;
    const double oracle_value = feasible ? exact_log_z(ham, beta) : kNaN;
    const double* oracle = feasible ? &oracle_value : nullptr;
    if (p.has("order")) {
      SeriesOptions so;
      so.allow_beyond_radius = p.string("radius", "enforce") == "ignore";
      const SeriesResult s = log_partition_series(ham, beta, p.integer("order"), so);
      json rows = json::array(), table = json::array();
      for (std::size_t m = 0; m < s.partial_sums.size(); ++m) {
        json row{{"M", m}, {"log_z", s.partial_sums[m]}, {"bound", num(s.bounds[m])}};
        if (oracle) {
          const double err = std::abs(s.partial_sums[m] - *oracle);
          row["error"] = err;
          // past the radius the bound is infinite and certifies nothing
          if (std::isfinite(s.bounds[m])) {
            row["pass"] = err <= s.bounds[m] + 1e-12;
            flags.push_back(row["pass"]);
          }
        }
        table.push_back(row);
        rows.push_back({static_cast<int>(m), oracle ? num(std::abs(s.partial_sums[m] - *oracle)) : json(nullptr),
                        num(s.bounds[m])});
      }
      out.update({{"log_z", s.log_z}, {"bound", num(s.bound)}, {"M", s.M}, {"beta_star", s.beta_star},
                  {"K", s.K}, {"cluster_counts", s.cluster_counts}, {"orders", table}});
      out["plot"] = plot({"M", "error", "bound"}, rows);
    } else {
      const ClusterLogZ c = logz_cluster(ham, beta, p.number("epsilon", 1e-3));
      out.update({{"log_z", c.log_z}, {"bound", c.bound}, {"M", c.M}, {"beta_star", c.beta_star}});
      if (oracle) {
        out["oracle_log_z"] = *oracle;
        out["error"] = std::abs(c.log_z - *oracle);
        flags.push_back(std::abs(c.log_z - *oracle) <= c.bound + 1e-12);
      }
    }
    if (oracle) out["oracle_log_z"] = *oracle;
    out["all_pass"] = all_of(flags);
    return out;
  }

  if (method == "oned") {
    OneDRunConfig c;
    c.hamiltonian = ham;
    c.beta = beta;
    c.epsilon = p.number("epsilon", c.epsilon);
    c.l_star = p.integer("l_star", 0);
    c.qbp = qbp_options(p);
    c.compare_oracle = feasible && p.string("oracle", "auto") != "off";
    if (p.has("sweep")) {
      const OneDSweep s = logz_1d_sweep(c, p.ints("sweep"));
      json pts = json::array(), rows = json::array();
      for (const auto& x : s.points) {
        pts.push_back({{"l_star", x.l_star}, {"log_z", x.log_z_prime}, {"error", x.error}, {"certificate", x.certificate}});
        rows.push_back({x.l_star, x.error, x.certificate});
      }
      return {{"method", method}, {"beta", beta}, {"oracle_log_z", s.oracle_log_z}, {"points", pts},
              {"c1", num(s.c1)}, {"c2", num(s.c2)}, {"all_pass", nullptr},
              {"plot", plot({"l_star", "error", "certificate"}, rows,
                            "fit error = c1 exp(-c2 l): c1 = " + std::to_string(s.c1) + " c2 = " + std::to_string(s.c2))}};
    }
    const OneDResult r = logz_1d(c);
    json steps = json::array();
    for (const auto& s : r.steps)
      steps.push_back({{"term", s.term}, {"window", s.window}, {"region", s.region}, {"factor", s.factor},
                       {"o_norm", s.o_norm}, {"quadrature_error", s.quadrature_error}});
    json out{{"method", method}, {"beta", beta}, {"log_z", r.log_z_prime}, {"l_star", r.l_star},
             {"quadrature_certificate", r.quadrature_certificate}, {"steps", steps}, {"warnings", r.warnings},
             {"all_pass", nullptr}};
    if (c.compare_oracle) {
      out["oracle_log_z"] = r.oracle_log_z;
      out["error"] = r.error;
    }
    return out;
  }
  throw InvalidArgument("config key 'method' must be one of exact, cluster, oned; got '" + method + "'");
}

json op_locality(const Hamiltonian& ham, const Params& p) {
  const std::string kind = p.string("kind", "transfer");
  const DenseOperator a = parse_operator(ham, p.raw("operator"), "operator");
  std::vector<bool> flags;
  if (kind == "tower") {
    const CommutatorTower t = nested_commutators(ham, a, p.integer("M", 6));
    json rows = json::array();
    for (std::size_t m = 0; m < t.norms.size(); ++m) rows.push_back({static_cast<int>(m), t.norms[m], t.bounds[m]});
    return {{"kind", kind}, {"norms", t.norms}, {"bounds", t.bounds}, {"all_pass", t.bounds_hold},
            {"plot", plot({"m", "norm", "bound"}, rows)}};
  }
  if (kind == "lieb_robinson") {
    const LiebRobinsonReport r = lieb_robinson_check(ham, a, p.number("t_max", 1.0), p.integer("m_max", 3),
                                                     p.integer("t_points", 6), p.integer("dimension", 1));
    json rows = json::array();
    for (const auto& x : r.points) rows.push_back({x.t, x.m, x.error});
    return {{"kind", kind}, {"v", num(r.v)}, {"c_prime", num(r.c_prime)}, {"b", num(r.b)},
            {"rms_residual", num(r.rms_residual)}, {"all_pass", nullptr}, {"plot", plot({"t", "m", "error"}, rows)}};
  }
  if (kind != "transfer") throw InvalidArgument("config key 'kind' must be transfer, tower or lieb_robinson");
  const double beta = p.beta();
  const TransferOperator e = transfer_operator(ham, a, beta, TransferFlavor::Exact);
  json out{{"kind", kind}, {"beta", beta}, {"norm", e.norm}, {"norm_bound", num(e.bound)},
           {"reconstruction_error", num(e.reconstruction_error)}};
  if (std::isfinite(e.bound)) flags.push_back(e.norm <= e.bound + 1e-9);
  if (p.has("radii")) {
    const std::string flavor = p.string("flavor", "restricted");
    TransferFlavor f = TransferFlavor::Restricted;
    if (flavor == "localized") f = TransferFlavor::Localized;
    else if (flavor != "restricted") throw InvalidArgument("config key 'flavor' must be restricted or localized");
    json rows = json::array();
    out["flavor"] = flavor;
    out["sweep"] = to_json(transfer_sweep(ham, a, beta, f, p.ints("radii")), flags, rows);
    out["plot"] = plot({"l", "distance", "bound"}, rows);
  }
  out["all_pass"] = all_of(flags);
  return out;
}

json op_qbp(const Hamiltonian& ham, const Params& p) {
  const double beta = p.beta();
  const DenseOperator a = parse_operator(ham, p.raw("operator"), "operator");
  const QbpOptions q = qbp_options(p);
  std::vector<bool> flags;
  const BeliefPropagationOperator o = qbp_operator(ham, a, beta, p.integer("radius", -1), q);
  json out{{"beta", beta},
           {"radius", o.radius},
           {"support", o.O.support},
           {"norm", o.norm},
           {"norm_bound", o.norm_bound},
           {"substeps", o.substeps},
           {"quadrature_error", o.quadrature_error},
           {"reconstruction_error", num(o.reconstruction_error)},
           {"distance_to_exact", num(o.distance_to_exact)}};
  flags.push_back(o.norm <= o.norm_bound + 1e-9);
  if (p.has("radii")) {
    json rows = json::array();
    out["sweep"] = to_json(qbp_sweep(ham, a, beta, p.ints("radii"), q), flags, rows);
    out["plot"] = plot({"m", "distance", "bound"}, rows);
  }
  out["all_pass"] = all_of(flags);
  return out;
}

ModelFamily family_from(const json& spec) {
  if (!spec.is_object() || !spec.contains("model")) throw InvalidArgument("config key 'family' must be a model object");
  return [spec](int n) {
    json s = spec;
    s["N"] = n;
    return build_model(s);
  };
}

json op_stats(const Hamiltonian& ham, const Params& p) {
  const std::string kind = p.string("kind", "concentration");
  const std::string label = p.string("pauli", "Z");
  if (label.size() != 1) throw InvalidArgument("config key 'pauli' must be a single label");
  const double beta = p.beta();
  const int n = ham.num_vertices();
  std::vector<bool> flags;

  if (kind == "ensemble" || kind == "berry_esseen_sweep") {
    const ModelFamily models = family_from(p.raw("family"));
    const ObservableFamily obs = [c = label[0]](int m) { return magnetization(m, c); };
    const std::vector<int> sizes = p.ints("sizes");
    if (kind == "ensemble") {
      const EnsembleSweep s = ensemble_equivalence_sweep(models, obs, beta, p.number("Delta", 0.5), sizes);
      json rows = json::array(), table = json::array();
      for (const auto& r : s.rows) {
        table.push_back({{"N", r.N}, {"E0", r.E0}, {"microcanonical", r.microcanonical}, {"canonical", r.canonical},
                         {"ratio", r.ratio}, {"window_count", r.window_count}});
        rows.push_back({r.N, r.ratio});
      }
      return {{"kind", kind}, {"rows", table}, {"delta_star", s.delta_star},
              {"last_below_first", s.last_below_first}, {"all_pass", s.last_below_first},
              {"plot", plot({"N", "ratio"}, rows)}};
    }
    const BerryEsseenSweep s = berry_esseen_sweep(models, obs, beta, sizes);
    json rows = json::array(), table = json::array();
    for (const auto& r : s.rows) {
      table.push_back({{"N", r.N}, {"delta", r.delta}, {"sigma", r.sigma}, {"scaled", r.scaled}});
      rows.push_back({r.N, r.delta, r.scaled});
    }
    const bool trend = s.rows.size() >= 2 && s.rows.back().delta < s.rows.front().delta;
    return {{"kind", kind}, {"rows", table}, {"constant", s.constant}, {"last_below_first", trend},
            {"all_pass", trend}, {"plot", plot({"N", "delta", "delta_sqrt_N"}, rows, "constant = " + std::to_string(s.constant))}};
  }

  const ExtensiveObservable a = magnetization(n, label[0]);
  const GibbsState s = gibbs(ham, beta, {false});
  const MeasurementDistribution d = measurement_distribution(s, a.assemble(n, ham.local_dim()));
  if (kind == "berry_esseen") {
    const BerryEsseen b = berry_esseen(d);
    return {{"kind", kind}, {"delta", b.delta}, {"sigma", b.sigma}, {"mean", b.mean}, {"at", b.at},
            {"all_pass", nullptr}};
  }
  if (kind != "concentration") throw InvalidArgument("config key 'kind' must be concentration, berry_esseen, ensemble or berry_esseen_sweep");
  const CharacteristicFit fit =
      characteristic_constant(d, a.a_bar(), default_tau_grid(a.a_bar(), p.integer("grid_points", 20)));
  std::vector<double> deltas;
  if (p.has("deltas")) {
    deltas = p.numbers("deltas");
  } else {
    for (int i = 0; i <= 40; ++i) deltas.push_back(0.05 * i * a.a_bar());
  }
  const ConcentrationReport c = concentration_check(d, a.a_bar(), fit.c_fit, deltas);
  const MomentReport m = moment_bound_check(d, a.a_bar(), fit.c_fit, p.integer("m_max", 8));
  json tails = json::array(), rows = json::array(), moments = json::array();
  for (const auto& t : c.points) {
    tails.push_back({{"delta", t.delta}, {"tail", t.tail}, {"bound", t.bound}, {"pass", t.pass}});
    rows.push_back({t.delta, t.tail, t.bound});
  }
  for (const auto& r : m.rows)
    moments.push_back({{"m", r.m}, {"moment", r.moment}, {"bound", r.bound}, {"tail_integral", r.tail_integral},
                       {"relative_gap", r.relative_gap}, {"pass", r.pass}});
  return {{"kind", kind},        {"beta", beta},        {"c_fit", fit.c_fit}, {"tau_at_max", fit.tau_at_max},
          {"a_bar", a.a_bar()},  {"mean", d.mean},      {"variance", d.variance}, {"tails", tails},
          {"moments", moments},  {"all_pass", c.all_pass && m.all_pass},
          {"plot", plot({"delta", "tail", "bound"}, rows, "c_fit = " + std::to_string(fit.c_fit))}};
}

json op_checks(const Hamiltonian& ham, const Params& p) {
  const std::string check = p.string("check");
  const double beta = p.beta();
  auto region = [&](const char* key) { return make_region(ham, p.ints(key)); };
  auto region_or_empty = [&](const char* key) { return p.has(key) ? make_region(ham, p.ints(key)) : Region{}; };
  const int n = ham.num_vertices();

  if (check == "area_law") {
    const Region a = region("A");
    const Region b = p.has("B") ? region("B") : complement(ham, a);
    const AreaLawReport r = area_law_check(gibbs(ham, beta), ham, a, b);
    return {{"check", check}, {"A", r.report.A}, {"B", r.report.B}, {"mutual_information", r.report.measured},
            {"bound", r.report.bound}, {"pass", r.report.pass}, {"interaction_norm", r.interaction_norm},
            {"boundary_size", r.boundary_size}, {"boundary_bound", r.boundary_bound},
            {"boundary_pass", r.boundary_pass}, {"energy_gap", r.energy_gap}, {"energy_gap_pass", r.energy_gap_pass},
            {"all_pass", r.report.pass && r.boundary_pass && r.energy_gap_pass}};
  }
  if (check == "correlation_length") {
    const std::string label = p.string("pauli", "Z");
    if (label.size() != 1) throw InvalidArgument("config key 'pauli' must be a single label");
    const CorrelationLength c = correlation_length(gibbs(ham, beta), ham, chain_pair_family(p.integer("origin", 0), label[0]),
                                                   p.ints("distances"));
    json rows = json::array();
    for (const auto& x : c.points) rows.push_back({x.distance, x.value});
    return {{"check", check}, {"defined", c.defined}, {"xi", num(c.xi)}, {"K", num(c.K)}, {"slope", num(c.slope)},
            {"points_used", c.points_used}, {"warnings", c.warnings}, {"all_pass", nullptr},
            {"plot", plot({"distance", "correlator"}, rows, c.defined ? "xi = " + std::to_string(c.xi) : "xi undefined")}};
  }
  if (check == "cmi_decay") {
    std::vector<Tripartition> family;
    if (p.has("triples")) {
      for (const auto& t : p.raw("triples"))
        family.push_back({make_region(ham, t.at("A").get<std::vector<int>>()), make_region(ham, t.at("B").get<std::vector<int>>()),
                          make_region(ham, t.at("C").get<std::vector<int>>())});
    } else {
      family = chain_tripartitions(n, p.integer("a", 1), p.ints("b_sizes"));
    }
    const CmiDecayReport r = cmi_decay(gibbs(ham, beta), ham, family);
    json rows = json::array(), table = json::array();
    for (const auto& x : r.rows) {
      table.push_back({{"A", x.regions.A}, {"B", x.regions.B}, {"C", x.regions.C}, {"cmi", x.cmi}});
      rows.push_back({x.b_size, x.cmi});
    }
    return {{"check", check}, {"rows", table}, {"slope", num(r.slope)}, {"sqrt_slope", num(r.sqrt_slope)},
            {"strictly_decreasing", r.strictly_decreasing}, {"all_pass", r.strictly_decreasing},
            {"plot", plot({"B_size", "cmi"}, rows)}};
  }
  if (check == "local_indistinguishability") {
    auto row_json = [](const IndistinguishabilityReport& r) {
      return json{{"A", r.A}, {"B", r.B}, {"C", r.C}, {"distance", r.distance}, {"log_ratio", r.log_ratio},
                  {"log_bound", r.log_bound}, {"ratio_pass", r.ratio_pass}};
    };
    if (p.has("b_sizes")) {
      const auto s = local_indistinguishability_sweep(ham, beta, p.integer("a", 1), p.ints("b_sizes"));
      json rows = json::array(), table = json::array();
      bool ok = true;
      for (const auto& r : s.rows) {
        table.push_back(row_json(r));
        rows.push_back({static_cast<int>(r.B.size()), r.distance});
        ok = ok && r.ratio_pass;
      }
      return {{"check", check}, {"rows", table}, {"slope", num(s.slope)}, {"decreasing", s.decreasing},
              {"all_pass", ok}, {"plot", plot({"B_size", "distance"}, rows)}};
    }
    const auto r = local_indistinguishability(ham, beta, region("A"), region_or_empty("B"), region_or_empty("C"));
    json out = row_json(r);
    out["check"] = check;
    out["all_pass"] = r.ratio_pass;
    return out;
  }
  if (check == "mean_force") {
    const MeanForceDecomposition m = mean_force(ham, beta, region("A"), p.ints("l_list", {0, 1, 2}));
    json rows = json::array(), table = json::array();
    for (const auto& x : m.approximants) {
      table.push_back({{"l", x.l}, {"sites", x.sites}, {"residual", x.residual}});
      rows.push_back({x.l, x.residual});
    }
    return {{"check", check}, {"A", m.A}, {"boundary", m.boundary}, {"phi_norm", m.phi_norm},
            {"phi_centered_norm", m.phi_centered_norm}, {"reconstruction_error", m.reconstruction_error},
            {"approximants", table}, {"all_pass", m.reconstruction_error <= 1e-9},
            {"plot", plot({"l", "residual"}, rows)}};
  }
  if (check == "effective_partition") {
    const auto r = effective_partition_ratio(ham, beta, region("S"), p.ints("l_list", {1, 2}), qbp_options(p));
    json rows = json::array(), table = json::array();
    for (const auto& x : r.rows) {
      table.push_back({{"l", x.l}, {"bath", x.bath}, {"region", x.region}, {"estimate", x.estimate},
                       {"relative_error", x.relative_error}, {"quadrature_error", x.quadrature_error}});
      rows.push_back({x.l, x.estimate, x.relative_error});
    }
    return {{"check", check}, {"S", r.S}, {"exact", r.exact}, {"log_exact", r.log_exact}, {"rows", table},
            {"all_pass", nullptr}, {"plot", plot({"l", "estimate", "relative_error"}, rows)}};
  }
  if (check == "commuting") {
    const CommutingReport r = commuting_suite(ham, beta);
    return {{"check", check}, {"max_commutator", r.max_commutator}, {"exchange_residuals", r.exchange_residuals},
            {"max_exchange_residual", r.max_exchange_residual}, {"triples_checked", r.triples_checked},
            {"max_cmi", r.max_cmi}, {"mean_force_norms", r.mean_force_norms},
            {"mean_force_bounds", r.mean_force_bounds}, {"mean_force_pass", r.mean_force_pass},
            {"factorize_error", num(r.factorize_error)}, {"all_pass", r.all_pass}};
  }
  throw InvalidArgument("config key 'check' must be one of area_law, correlation_length, cmi_decay, "
                        "local_indistinguishability, mean_force, effective_partition, commuting; got '" + check + "'");
}

json dispatch(const gk_model& m, const std::string& op, const Params& p) {
  if (op == "summary") {
    json out = m.ham.summary();
    out["all_pass"] = nullptr;
    return out;
  }
  if (op == "exact") return op_exact(m.ham, p);
  if (op == "logz") return op_logz(m.ham, p);
  if (op == "locality") return op_locality(m.ham, p);
  if (op == "qbp") return op_qbp(m.ham, p);
  if (op == "stats") return op_stats(m.ham, p);
  if (op == "checks") return op_checks(m.ham, p);
  throw InvalidArgument("unknown operation '" + op + "'");
}

}  // namespace
}  // namespace gibbskit

using namespace gibbskit;

extern "C" {

const char* gk_version(void) { return version_string(); }

const char* gk_status_name(gk_status status) {
  switch (status) {
    case GK_OK: return "ok";
    case GK_INVALID_ARGUMENT: return "invalid_argument";
    case GK_OVER_CAP: return "over_cap";
    case GK_DOMAIN_ERROR: return "domain_error";
    case GK_NUMERICAL_ERROR: return "numerical_error";
    case GK_INTERNAL_ERROR: return "internal_error";
  }
  return "unknown";
}

const char* gk_last_error(void) { return last_error.c_str(); }

uint64_t gk_dense_cap(void) { return dense_cap(); }
void gk_set_dense_cap(uint64_t cap) { set_dense_cap(cap); }

gk_status gk_model_create(const char* text, gk_model** out) {
  return guarded([&] {
    require(text, "json");
    require(out, "out");
    *out = nullptr;
    json spec = json::parse(text);
    auto m = std::make_unique<gk_model>(gk_model{build_model(spec), spec});
    *out = m.release();
  });
}

void gk_model_free(gk_model* model) { delete model; }

gk_status gk_model_num_vertices(const gk_model* model, int* out) {
  return guarded([&] {
    require(model, "model");
    require(out, "out");
    *out = model->ham.num_vertices();
  });
}

gk_status gk_model_summary(const gk_model* model, char** json_out) {
  return guarded([&] {
    require(model, "model");
    require(json_out, "json_out");
    *json_out = copy_string(model->ham.summary().dump());
  });
}

gk_status gk_gibbs_create(const gk_model* model, double beta, int density_matrix, gk_state** out) {
  return guarded([&] {
    require(model, "model");
    require(out, "out");
    *out = nullptr;
    if (!(beta >= 0.0)) throw InvalidArgument("beta must be non-negative");
    auto s = std::make_unique<gk_state>(gk_state{gibbs(model->ham, beta, {density_matrix != 0})});
    *out = s.release();
  });
}

void gk_state_free(gk_state* state) { delete state; }

gk_status gk_state_log_z(const gk_state* state, double* out) {
  return guarded([&] {
    require(state, "state");
    require(out, "out");
    *out = state->state.log_z;
  });
}

gk_status gk_state_energy(const gk_state* state, double* out) {
  return guarded([&] {
    require(state, "state");
    require(out, "out");
    *out = state->state.energy;
  });
}

gk_status gk_state_entropy(const gk_state* state, double* out) {
  return guarded([&] {
    require(state, "state");
    require(out, "out");
    double s = 0.0;
    const RealVector& w = state->state.weights;
    for (Eigen::Index i = 0; i < w.size(); ++i)
      if (w(i) > 0.0) s -= w(i) * std::log(w(i));
    *out = s;
  });
}

gk_status gk_state_region_entropy(const gk_state* state, const int* region, size_t size, double* out) {
  return guarded([&] {
    require(state, "state");
    require(out, "out");
    if (size > 0) require(region, "region");
    Region r(region, region + size);
    std::sort(r.begin(), r.end());
    if (std::adjacent_find(r.begin(), r.end()) != r.end()) throw InvalidArgument("region has repeated vertices");
    for (int v : r)
      if (v < 0 || v >= state->state.num_vertices) throw InvalidArgument("region vertex out of range");
    if (r.empty()) {
      *out = 0.0;
      return;
    }
    *out = region_entropy(state->state, r);
  });
}

gk_status gk_log_z_exact(const gk_model* model, double beta, double* out) {
  return guarded([&] {
    require(model, "model");
    require(out, "out");
    if (!(beta >= 0.0)) throw InvalidArgument("beta must be non-negative");
    *out = exact_log_z(model->ham, beta);
  });
}

gk_status gk_log_z_cluster(const gk_model* model, double beta, double epsilon, double* log_z, double* bound,
                           int* order) {
  return guarded([&] {
    require(model, "model");
    require(log_z, "log_z");
    const ClusterLogZ c = logz_cluster(model->ham, beta, epsilon);
    *log_z = c.log_z;
    if (bound) *bound = c.bound;
    if (order) *order = c.M;
  });
}

gk_status gk_log_z_1d(const gk_model* model, double beta, int l_star, double* log_z, double* certificate) {
  return guarded([&] {
    require(model, "model");
    require(log_z, "log_z");
    OneDRunConfig c;
    c.hamiltonian = model->ham;
    c.beta = beta;
    c.l_star = std::max(0, l_star);
    c.compare_oracle = false;
    const OneDResult r = logz_1d(c);
    *log_z = r.log_z_prime;
    if (certificate) *certificate = r.quadrature_certificate;
  });
}

gk_status gk_run(const gk_model* model, const char* operation, const char* params_json, char** result_json) {
  return guarded([&] {
    require(model, "model");
    require(operation, "operation");
    require(result_json, "result_json");
    *result_json = nullptr;
    const json params = (params_json == nullptr || *params_json == '\0') ? json::object() : json::parse(params_json);
    *result_json = copy_string(dispatch(*model, operation, Params(params)).dump());
  });
}

void gk_string_free(char* s) { std::free(s); }

}  // extern "C"
