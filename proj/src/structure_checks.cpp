#include "gibbskit/structure_checks.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <map>
#include <numeric>
#include <set>

#include "gibbskit/partition_algorithms.hpp"

namespace gibbskit {

namespace {

constexpr double kFitFloor = 1e-13;

struct LineFit {
  double slope = kNaN;
  double intercept = kNaN;
};

LineFit least_squares(const std::vector<double>& xs, const std::vector<double>& ys) {
  LineFit f;
  if (xs.size() < 2) return f;
  const double n = static_cast<double>(xs.size());
  const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
  const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxy += (xs[i] - mx) * (ys[i] - my);
    sxx += (xs[i] - mx) * (xs[i] - mx);
  }
  if (sxx <= 0.0) return f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  return f;
}

// log Tr e^{-beta sum_terms} over `sites`; 0 on the empty region.
double local_log_z(const Hamiltonian& ham, const std::vector<int>& terms, const Region& sites, double beta) {
  if (sites.empty()) return 0.0;
  require_dense(ipow(ham.local_dim(), sites.size()), "local partition function");
  const RealVector e = eigvalsh(ham.sum_terms(terms, sites).matrix);
  return log_sum_exp(-beta * e);
}

Matrix local_gibbs(const Hamiltonian& ham, const std::vector<int>& terms, const Region& sites, double beta) {
  require_dense(ipow(ham.local_dim(), sites.size()), "local Gibbs state");
  const EigenSystem es = eigh(ham.sum_terms(terms, sites).matrix);
  const double lz = log_sum_exp(-beta * es.values);
  Eigen::VectorXcd w(es.dim());
  for (Eigen::Index i = 0; i < w.size(); ++i) w(i) = std::exp(-beta * es.values(i) - lz);
  return es.reconstruct(w);
}

void require_partition(const Hamiltonian& ham, const std::vector<const Region*>& parts, const char* what) {
  std::vector<int> seen(static_cast<std::size_t>(ham.num_vertices()), 0);
  for (const Region* r : parts)
    for (int v : *r) {
      if (v < 0 || v >= ham.num_vertices()) throw InvalidArgument(std::string(what) + ": vertex out of range");
      ++seen[static_cast<std::size_t>(v)];
    }
  for (int s : seen)
    if (s != 1) throw InvalidArgument(std::string(what) + ": regions must partition the vertex set");
}

Region sorted_region(Region r) {
  std::sort(r.begin(), r.end());
  r.erase(std::unique(r.begin(), r.end()), r.end());
  return r;
}

Region interval(int lo, int hi) {  // [lo, hi)
  Region r;
  for (int v = lo; v < hi; ++v) r.push_back(v);
  return r;
}

}  // namespace

BipartitionReport make_report(Region a, Region b, Region c, std::string quantity, double measured, double bound) {
  BipartitionReport r{std::move(a), std::move(b), std::move(c), std::move(quantity), measured, bound, false};
  r.pass = measured <= bound + 1e-9;
  return r;
}

AreaLawReport area_law_check(const GibbsState& state, const Hamiltonian& ham, const Region& a, const Region& b) {
  const Region ra = sorted_region(a), rb = sorted_region(b);
  require_partition(ham, {&ra, &rb}, "area_law_check");
  if (ra.empty() || rb.empty()) throw InvalidArgument("area_law_check: both regions must be non-empty");

  AreaLawReport out;
  const Interaction inter = interaction_between(ham, ra, rb);
  out.interaction_norm = inter.norm;
  const double mi = mutual_information(state, ra, rb);
  out.report = make_report(ra, rb, {}, "I(A:B)", mi, 2.0 * state.beta * inter.norm);

  out.boundary_size = static_cast<int>(boundary(ham, ra).size() + boundary(ham, rb).size());
  out.boundary_bound = 2.0 * state.beta * 2.0 * ham.k() * ham.h() * out.boundary_size;
  out.boundary_pass = mi <= out.boundary_bound + 1e-9;

  // only the crossing terms differ between rho and rho_A ⊗ rho_B
  double gap = 0.0;
  for (int idx : inter.term_indices) {
    const DenseOperator& h = ham.term(idx).op;
    const DenseOperator rs = marginal(state, h.support);
    const DenseOperator prod =
        multiply(partial_trace(rs, support_intersection(h.support, ra)),
                 partial_trace(rs, support_intersection(h.support, rb)));
    const Matrix hp = embed_matrix(h, prod.support);
    gap += (hp * prod.matrix).trace().real() - (hp * embed_matrix(rs, prod.support)).trace().real();
  }
  out.energy_gap = state.beta * gap;
  out.energy_gap_pass = out.energy_gap >= mi - 1e-9;
  return out;
}

PairFamily chain_pair_family(int origin, char pauli_label) {
  return [origin, pauli_label](int d) {
    const Matrix p = pauli(pauli_label);
    return std::make_pair(DenseOperator{p, {origin}, 2}, DenseOperator{p, {origin + d}, 2});
  };
}

CorrelationLength correlation_length(const GibbsState& state, const Hamiltonian& ham, const PairFamily& family,
                                     const std::vector<int>& distances) {
  if (distances.size() < 3) throw InvalidArgument("correlation_length needs at least 3 distances");
  CorrelationLength out;
  std::vector<double> xs, ys;
  double largest = 0.0;
  for (int d : distances) {
    const auto [c, e] = family(d);
    const int measured = distance(ham, c.support, e.support);
    if (measured != d)
      throw InvalidArgument("pair for distance " + std::to_string(d) + " sits at distance " + std::to_string(measured));
    const double v = connected_correlator(state, c, e);
    out.points.push_back({d, v});
    largest = std::max(largest, v);
    if (v > kFitFloor) {
      xs.push_back(d);
      ys.push_back(std::log(v));
    }
  }
  out.points_used = static_cast<int>(xs.size());
  if (largest < 1e-14) {
    out.warnings.push_back("all correlators below 1e-14: xi undefined");
    return out;
  }
  const LineFit f = least_squares(xs, ys);
  if (!std::isfinite(f.slope)) {
    out.warnings.push_back("fewer than two correlators above 1e-13: xi undefined");
    return out;
  }
  out.slope = f.slope;
  out.K = std::exp(f.intercept);
  if (f.slope >= 0.0) {
    out.warnings.push_back("correlators do not decay with distance");
    out.xi = std::numeric_limits<double>::infinity();
    return out;
  }
  out.defined = true;
  out.xi = -1.0 / f.slope;
  return out;
}

bool shields(const Hamiltonian& ham, const Tripartition& t) {
  const int n = ham.num_vertices();
  std::vector<char> role(static_cast<std::size_t>(n), 0);
  for (int v : t.B) role[static_cast<std::size_t>(v)] = 'B';
  for (int v : t.C) role[static_cast<std::size_t>(v)] = 'C';
  std::vector<char> seen(static_cast<std::size_t>(n), 0);
  std::deque<int> queue(t.A.begin(), t.A.end());
  for (int v : t.A) seen[static_cast<std::size_t>(v)] = 1;
  while (!queue.empty()) {
    const int v = queue.front();
    queue.pop_front();
    if (role[static_cast<std::size_t>(v)] == 'C') return false;
    for (int w : ham.neighbors()[static_cast<std::size_t>(v)]) {
      auto& s = seen[static_cast<std::size_t>(w)];
      if (s || role[static_cast<std::size_t>(w)] == 'B') continue;
      s = 1;
      queue.push_back(w);
    }
  }
  return true;
}

std::vector<Tripartition> chain_tripartitions(int n, int a, const std::vector<int>& b_sizes) {
  std::vector<Tripartition> out;
  for (int b : b_sizes) {
    if (a < 1 || b < 1 || a + b >= n) throw InvalidArgument("tripartition does not fit the chain");
    out.push_back({interval(0, a), interval(a, a + b), interval(a + b, n)});
  }
  return out;
}

CmiDecayReport cmi_decay(const GibbsState& state, const Hamiltonian& ham, const std::vector<Tripartition>& family) {
  CmiDecayReport out;
  std::vector<double> xs, sx, ys;
  for (const auto& t0 : family) {
    Tripartition t{sorted_region(t0.A), sorted_region(t0.B), sorted_region(t0.C)};
    if (t.A.empty() || t.B.empty() || t.C.empty()) throw InvalidArgument("cmi_decay: regions must be non-empty");
    if (!support_intersection(t.A, t.B).empty() || !support_intersection(t.A, t.C).empty() ||
        !support_intersection(t.B, t.C).empty())
      throw InvalidArgument("cmi_decay: regions overlap");
    if (!shields(ham, t)) throw InvalidArgument("cmi_decay: B does not shield A from C");
    CmiRow row{t, static_cast<int>(t.B.size()), cmi(state, t.A, t.B, t.C)};
    if (row.cmi > kFitFloor) {
      xs.push_back(row.b_size);
      sx.push_back(std::sqrt(static_cast<double>(row.b_size)));
      ys.push_back(std::log(row.cmi));
    }
    out.rows.push_back(std::move(row));
  }
  out.slope = least_squares(xs, ys).slope;
  out.sqrt_slope = least_squares(sx, ys).slope;
  out.strictly_decreasing = out.rows.size() >= 2;
  for (std::size_t i = 1; i < out.rows.size(); ++i)
    out.strictly_decreasing = out.strictly_decreasing && out.rows[i].cmi < out.rows[i - 1].cmi;
  return out;
}

namespace {

IndistinguishabilityReport indistinguishability(const GibbsState& state, const Hamiltonian& ham, const Region& a,
                                                const Region& b, const Region& c) {
  IndistinguishabilityReport out{sorted_region(a), sorted_region(b), sorted_region(c)};
  require_partition(ham, {&out.A, &out.B, &out.C}, "local_indistinguishability");
  if (out.A.empty()) throw InvalidArgument("local_indistinguishability: A is empty");
  const double beta = state.beta;
  const Region ab = support_union(out.A, out.B);
  const std::vector<int> terms_ab = ham.terms_inside(ab);

  const Matrix rho0 = local_gibbs(ham, terms_ab, ab, beta);
  const DenseOperator rho0_a = partial_trace({rho0, ab, ham.local_dim()}, out.A);
  out.distance = trace_norm(marginal(state, out.A).matrix - rho0_a.matrix);

  out.log_ratio = state.log_z - local_log_z(ham, terms_ab, ab, beta) -
                  local_log_z(ham, ham.terms_inside(out.C), out.C, beta);
  out.log_bound = out.C.empty() ? 0.0 : beta * interaction_between(ham, ab, out.C).norm;
  out.ratio_pass = std::abs(out.log_ratio) <= out.log_bound + 1e-9;
  return out;
}

}  // namespace

IndistinguishabilityReport local_indistinguishability(const Hamiltonian& ham, double beta, const Region& a,
                                                      const Region& b, const Region& c) {
  if (!(beta >= 0.0)) throw InvalidArgument("beta must be non-negative");
  return indistinguishability(gibbs(ham, beta), ham, a, b, c);
}

IndistinguishabilitySweep local_indistinguishability_sweep(const Hamiltonian& ham, double beta, int a,
                                                           const std::vector<int>& b_sizes) {
  if (!(beta >= 0.0)) throw InvalidArgument("beta must be non-negative");
  const int n = ham.num_vertices();
  const GibbsState state = gibbs(ham, beta);
  IndistinguishabilitySweep out;
  std::vector<double> xs, ys;
  for (int b : b_sizes) {
    if (a < 1 || b < 0 || a + b > n) throw InvalidArgument("partition does not fit the chain");
    auto r = indistinguishability(state, ham, interval(0, a), interval(a, a + b), interval(a + b, n));
    if (r.distance > kFitFloor) {
      xs.push_back(b);
      ys.push_back(std::log(r.distance));
    }
    out.rows.push_back(std::move(r));
  }
  out.slope = least_squares(xs, ys).slope;
  out.decreasing = out.rows.size() >= 2;
  for (std::size_t i = 1; i < out.rows.size(); ++i)
    out.decreasing = out.decreasing && out.rows[i].distance < out.rows[i - 1].distance;
  return out;
}

DenseOperator project_onto(const DenseOperator& x, const Region& keep) {
  const Region k = support_intersection(x.support, keep);
  const auto dropped = static_cast<double>(ipow(x.local_dim, x.support.size() - k.size()));
  if (k.empty()) {
    const auto dim = static_cast<Eigen::Index>(x.dim());
    return {Matrix::Identity(dim, dim) * (x.matrix.trace() / static_cast<double>(dim)), x.support, x.local_dim};
  }
  const DenseOperator reduced = partial_trace(x, k);
  return {embed_matrix({reduced.matrix / dropped, k, x.local_dim}, x.support), x.support, x.local_dim};
}

MeanForceDecomposition mean_force(const GibbsState& state, const Hamiltonian& ham, const Region& a,
                                  const std::vector<int>& l_list) {
  const double beta = state.beta;
  if (!(beta > 0.0)) throw DomainError("mean force needs beta > 0");
  MeanForceDecomposition out;
  out.A = sorted_region(a);
  if (out.A.empty()) throw InvalidArgument("mean_force: A is empty");
  const int d = ham.local_dim();

  const DenseOperator rho_a = marginal(state, out.A);
  const EigenSystem es = eigh(rho_a.matrix);
  const double top = es.values.maxCoeff(), low = es.values.minCoeff();
  if (!(low > 1e-13 * top))
    throw NumericalError("marginal on A is rank deficient (smallest eigenvalue " + std::to_string(low) +
                         "); log undefined");
  // unnormalized marginal Z rho_A = e^{-beta H~}
  Eigen::VectorXcd f(es.dim());
  for (Eigen::Index i = 0; i < f.size(); ++i) f(i) = -(std::log(es.values(i)) + state.log_z) / beta;
  out.h_tilde = {es.reconstruct(f), out.A, d};

  const Matrix h_a = ham.sum_terms(ham.terms_inside(out.A), out.A).matrix;
  Matrix phi = out.h_tilde.matrix - h_a;
  phi = 0.5 * (phi + phi.adjoint());
  out.phi = {phi, out.A, d};
  const RealVector pv = eigvalsh(phi);
  out.phi_norm = std::max(std::abs(pv.minCoeff()), std::abs(pv.maxCoeff()));
  out.phi_centered_norm = 0.5 * (pv.maxCoeff() - pv.minCoeff());

  const RealVector hv = eigvalsh(out.h_tilde.matrix);
  Matrix back = expm_hermitian(out.h_tilde.matrix, -beta, -beta * hv.minCoeff());
  back /= back.trace().real();
  out.reconstruction_error = trace_norm(back - rho_a.matrix);

  out.boundary = boundary(ham, out.A);
  const std::vector<int> dist = out.boundary.empty() ? std::vector<int>{} : vertex_distances(ham, out.boundary);
  for (int l : l_list) {
    if (l < 0) throw InvalidArgument("boundary radius must be non-negative");
    BoundaryApproximant ap;
    ap.l = l;
    for (int v : out.A)
      if (!dist.empty() && dist[static_cast<std::size_t>(v)] <= l) ap.sites.push_back(v);
    ap.residual = op_norm(phi - project_onto(out.phi, ap.sites).matrix);
    out.approximants.push_back(std::move(ap));
  }
  return out;
}

MeanForceDecomposition mean_force(const Hamiltonian& ham, double beta, const Region& a,
                                  const std::vector<int>& l_list) {
  return mean_force(gibbs(ham, beta), ham, a, l_list);
}

EffectivePartitionReport effective_partition_ratio(const Hamiltonian& ham, double beta, const Region& s,
                                                   const std::vector<int>& l_list, const QbpOptions& options) {
  if (!(beta >= 0.0)) throw InvalidArgument("beta must be non-negative");
  EffectivePartitionReport out;
  out.S = sorted_region(s);
  if (out.S.empty()) throw InvalidArgument("effective_partition_ratio: S is empty");
  out.bath = complement(ham, out.S);
  const std::vector<int> in_s = ham.terms_inside(out.S), in_bath = ham.terms_inside(out.bath);
  std::set<int> decoupled(in_s.begin(), in_s.end());
  decoupled.insert(in_bath.begin(), in_bath.end());

  out.log_exact = exact_log_z(ham, beta) - local_log_z(ham, in_s, out.S, beta) -
                  local_log_z(ham, in_bath, out.bath, beta);
  out.exact = std::exp(out.log_exact);

  const Interaction inter = interaction_between(ham, out.S, out.bath);
  const std::vector<int> dist = vertex_distances(ham, out.S);
  const Hamiltonian h0 = ham.subset({decoupled.begin(), decoupled.end()});
  const DenseOperator h_i = inter.term_indices.empty() ? DenseOperator{}
                                                       : ham.sum_terms(inter.term_indices, inter.support);
  QbpOptions qopt = options;
  qopt.measure_distance = false;

  for (int l : l_list) {
    if (l < 0) throw InvalidArgument("bath radius must be non-negative");
    EffectiveRow row;
    row.l = l;
    for (int v : out.bath)
      if (dist[static_cast<std::size_t>(v)] <= 2 * l) row.bath.push_back(v);
    if (inter.term_indices.empty()) {
      row.region = out.S;
      row.estimate = 1.0;
    } else {
      const BeliefPropagationOperator q = qbp_operator(h0, h_i, beta, l, qopt);
      row.quadrature_error = q.quadrature_error;
      row.region = support_union(support_union(out.S, row.bath), q.O.support);
      std::vector<int> terms;
      for (int t : ham.terms_inside(row.region))
        if (decoupled.count(t)) terms.push_back(t);
      const Matrix sigma = local_gibbs(ham, terms, row.region, beta);
      const DenseOperator marg = partial_trace({sigma, row.region, ham.local_dim()}, q.O.support);
      row.estimate = (q.O.matrix * marg.matrix * q.O.matrix.adjoint()).trace().real();
    }
    row.relative_error = std::abs(row.estimate - out.exact) / out.exact;
    out.rows.push_back(std::move(row));
  }
  return out;
}

CommutingReport commuting_suite(const Hamiltonian& ham, double beta) {
  if (!(beta >= 0.0)) throw InvalidArgument("beta must be non-negative");
  CommutingReport out;
  const int nt = ham.num_terms();
  for (int i = 0; i < nt; ++i)
    for (int j = i + 1; j < nt; ++j) {
      const DenseOperator& a = ham.term(i).op;
      const DenseOperator& b = ham.term(j).op;
      if (support_intersection(a.support, b.support).empty()) continue;
      const auto u = support_union(a.support, b.support);
      const Matrix ea = embed_matrix(a, u), eb = embed_matrix(b, u);
      out.max_commutator = std::max(out.max_commutator, op_norm(ea * eb - eb * ea));
    }
  if (out.max_commutator > 1e-12)
    throw InvalidArgument("terms do not commute: max ‖[h_i, h_j]‖ = " + std::to_string(out.max_commutator));

  const int n = ham.num_vertices();
  const int d = ham.local_dim();
  const Region all = ham.all_vertices();
  const Matrix full = ham.full().matrix;

  // e^{-beta (H - h_i)} = e^{-beta H} e^{beta h_i}, both sides scaled by e^{-c}
  for (int i = 0; i < nt; ++i) {
    const DenseOperator& hi = ham.term(i).op;
    const Matrix rest = full - embed_matrix(hi, all);
    const double c = -beta * eigvalsh(rest).minCoeff();
    const Matrix lhs = expm_hermitian(rest, -beta, c);
    const Matrix rhs = expm_hermitian(full, -beta, c) * embed_matrix({expm_hermitian(hi.matrix, beta), hi.support, d}, all);
    const double r = op_norm(lhs - rhs) / op_norm(lhs);
    out.exchange_residuals.push_back(r);
    out.max_exchange_residual = std::max(out.max_exchange_residual, r);
  }

  const GibbsState state = gibbs(ham, beta);
  const bool chain = is_chain(ham);
  if (chain) {
    std::map<std::pair<int, int>, double> s;  // entropy of [p, q)
    auto ent = [&](int p, int q) {
      auto it = s.find({p, q});
      if (it != s.end()) return it->second;
      return s[{p, q}] = region_entropy(state, interval(p, q));
    };
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j)
        for (int k = j + 1; k < n; ++k)
          for (int l = k + 1; l <= n; ++l) {
            const double v = ent(i, k) + ent(j, l) - ent(j, k) - ent(i, l);
            out.max_cmi = std::max(out.max_cmi, v);
            ++out.triples_checked;
          }
  }

  std::vector<Region> regions{interval(0, n / 2)};
  if (chain && n >= 4) regions.push_back(interval(n / 4, n / 4 + n / 2));
  out.mean_force_pass = beta > 0.0;
  for (const Region& r : regions) {
    if (!(beta > 0.0)) break;
    const auto mf = mean_force(state, ham, r, {0});
    const Region e = complement(ham, r);
    const double bound = 2.0 * ham.h() * static_cast<double>(support_union(boundary(ham, r), boundary(ham, e)).size());
    out.mean_force_norms.push_back(mf.phi_centered_norm);
    out.mean_force_bounds.push_back(bound);
    // Phi acts only on ∂A
    out.mean_force_pass = out.mean_force_pass && mf.phi_centered_norm <= bound + 1e-9 &&
                          mf.approximants.front().residual <= 1e-9 * std::max(1.0, mf.phi_norm) && mf.reconstruction_error <= 1e-9;
  }
  if (beta == 0.0) out.mean_force_pass = true;  // Phi is a constant

  if (chain) out.factorize_error = factorize_1d_thermal(ham, beta, ham.k()).error;

  out.all_pass = out.max_exchange_residual <= 1e-10 && out.max_cmi <= 1e-10 && out.mean_force_pass &&
                 (!chain || out.factorize_error <= 1e-9);
  return out;
}

}  // namespace gibbskit
