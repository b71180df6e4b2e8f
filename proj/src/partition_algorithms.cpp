#include "gibbskit/partition_algorithms.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "gibbskit/cluster_expansion.hpp"
#include "gibbskit/exact_oracle.hpp"

namespace gibbskit {

bool is_chain(const Hamiltonian& ham) {
  for (const auto& e : ham.lattice().hyperedges) {
    if (e.size() == 1) continue;
    if (e.size() != 2 || e[1] != e[0] + 1) return false;
  }
  return true;
}

std::vector<int> chain_term_order(const Hamiltonian& ham) {
  std::vector<int> order(static_cast<std::size_t>(ham.num_terms()));
  std::iota(order.begin(), order.end(), 0);
  const auto& edges = ham.lattice().hyperedges;
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    const auto& ea = edges[static_cast<std::size_t>(a)];
    const auto& eb = edges[static_cast<std::size_t>(b)];
    if (ea.back() != eb.back()) return ea.back() < eb.back();
    return ea.front() < eb.front();
  });
  return order;
}

int l_star_schedule(const OneDRunConfig& c) {
  if (c.l_star > 0) return c.l_star;
  if (!(c.epsilon > 0.0)) throw InvalidArgument("epsilon must be positive");
  const double n = c.hamiltonian.num_vertices();
  return std::max(1, static_cast<int>(std::ceil(c.schedule_a + c.schedule_b * std::log(n / c.epsilon))));
}

namespace {

void require_chain(const Hamiltonian& ham) {
  if (!is_chain(ham)) throw InvalidArgument("input is not a chain: every hyperedge must be a site or a pair {j, j+1}");
}

Region interval(int lo, int hi) {
  Region r;
  for (int v = lo; v <= hi; ++v) r.push_back(v);
  return r;
}

// Normalized Gibbs state of the selected terms on `sites`.
Matrix window_state(const Hamiltonian& ham, const std::vector<int>& terms, const Region& sites, double beta) {
  const EigenSystem es = eigh(ham.sum_terms(terms, sites).matrix);
  const double e0 = es.values.minCoeff();
  Eigen::VectorXcd w(es.dim());
  double z = 0.0;
  for (Eigen::Index i = 0; i < w.size(); ++i) {
    const double x = std::exp(-beta * (es.values(i) - e0));
    w(i) = x;
    z += x;
  }
  return es.reconstruct(w / z);
}

}  // namespace

OneDResult logz_1d(const OneDRunConfig& config) {
  const Hamiltonian& ham = config.hamiltonian;
  require_chain(ham);
  if (!(config.beta >= 0.0)) throw InvalidArgument("beta must be non-negative");
  OneDResult out;
  out.l_star = l_star_schedule(config);
  if (out.l_star < 1) throw InvalidArgument("l_star must be at least 1");
  if (ham.J() > 0.0 && config.beta > 4.0 / ham.J())
    out.warnings.push_back("beta above 4/J: the window radius needed for a fixed error grows quickly");

  const int n = ham.num_vertices();
  const int l = std::min(out.l_star, n);
  QbpOptions qopt = config.qbp;
  qopt.measure_distance = false;

  out.log_z_prime = n * std::log(static_cast<double>(ham.local_dim()));
  const std::vector<int> order = chain_term_order(ham);
  std::vector<int> left;
  for (int idx : order) {
    const LocalTerm& t = ham.term(idx);
    const Hamiltonian partial = ham.subset(left);
    OneDStep step;
    step.term = idx;
    const BeliefPropagationOperator q = qbp_operator(partial, t.op, config.beta, l, qopt);
    step.region = q.O.support;
    step.o_norm = q.norm;
    step.quadrature_error = q.quadrature_error;

    const int right = t.op.support.back();
    const int lo = std::min(std::max(0, right - 2 * l + 1), step.region.front());
    step.window = interval(lo, std::max(right, step.region.back()));
    require_dense(ipow(ham.local_dim(), step.window.size()), "1D window");
    const Matrix rho = window_state(partial, partial.terms_inside(step.window), step.window, config.beta);
    const DenseOperator marg = partial_trace({rho, step.window, ham.local_dim()}, step.region);
    const Matrix& o = q.O.matrix;
    step.factor = (o * marg.matrix * o.adjoint()).trace().real();
    if (!(step.factor > 0.0)) throw NumericalError("non-positive step factor " + std::to_string(step.factor));

    out.log_z_prime += std::log(step.factor);
    out.quadrature_certificate += (2.0 * q.norm + q.quadrature_error) * q.quadrature_error / step.factor;
    out.steps.push_back(std::move(step));
    left.push_back(idx);
  }

  if (config.compare_oracle && ipow(ham.local_dim(), static_cast<std::size_t>(n)) <= dense_cap()) {
    out.oracle_log_z = exact_log_z(ham, config.beta);
    out.error = std::abs(out.log_z_prime - out.oracle_log_z);
  }
  return out;
}

OneDSweep logz_1d_sweep(const OneDRunConfig& config, const std::vector<int>& l_values) {
  if (l_values.empty()) throw InvalidArgument("empty l* list");
  OneDSweep out;
  out.oracle_log_z = exact_log_z(config.hamiltonian, config.beta);
  OneDRunConfig c = config;
  c.compare_oracle = false;
  std::vector<double> xs, ys;
  for (int l : l_values) {
    c.l_star = l;
    const OneDResult r = logz_1d(c);
    const double err = std::abs(r.log_z_prime - out.oracle_log_z);
    out.points.push_back({l, r.log_z_prime, err, r.quadrature_certificate});
    if (err > 1e-13) {
      xs.push_back(l);
      ys.push_back(std::log(err));
    }
  }
  if (xs.size() >= 2) {
    const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / xs.size();
    const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / ys.size();
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      sxy += (xs[i] - mx) * (ys[i] - my);
      sxx += (xs[i] - mx) * (xs[i] - mx);
    }
    if (sxx > 0.0) {
      out.c2 = -sxy / sxx;
      out.c1 = std::exp(my + out.c2 * mx);
    }
  }
  return out;
}

ClusterLogZ logz_cluster(const Hamiltonian& ham, double beta, double epsilon) {
  if (!(beta >= 0.0)) throw InvalidArgument("beta must be non-negative");
  if (!(epsilon > 0.0)) throw InvalidArgument("epsilon must be positive");
  ClusterLogZ out;
  out.beta_star = beta_star(ham);
  if (beta >= out.beta_star)
    throw DomainError("beta = " + std::to_string(beta) + " is not below beta* = " + std::to_string(out.beta_star));
  const double ratio = beta / out.beta_star;
  constexpr int kMaxOrder = 24;
  int M = 0;
  while (series_tail_bound(ham.num_vertices(), ratio, M) > epsilon) {
    if (++M > kMaxOrder)
      throw OverCap("epsilon needs a series order above " + std::to_string(kMaxOrder) + " at beta/beta* = " +
                    std::to_string(ratio));
  }
  const SeriesResult s = log_partition_series(ham, beta, M);
  out.log_z = s.log_z;
  out.M = M;
  out.bound = s.bound;
  return out;
}

FactorizedThermal factorize_1d_thermal(const Hamiltonian& ham, double beta, int l) {
  require_chain(ham);
  if (l < 1) throw InvalidArgument("window radius must be at least 1");
  if (!(beta >= 0.0)) throw InvalidArgument("beta must be non-negative");
  FactorizedThermal out;
  out.l = l;
  const int d = ham.local_dim();
  std::vector<int> left;
  for (int idx : chain_term_order(ham)) {
    const LocalTerm& t = ham.term(idx);
    const Hamiltonian partial = ham.subset(left);
    const Region region = support_union(ball(partial, t.op.support, l), t.op.support);
    require_dense(ipow(d, region.size()), "Psi window");
    const Matrix hl = partial.sum_terms(partial.terms_inside(region), region).matrix;
    const Matrix hn = hl + embed_matrix(t.op, region);
    // the common shift cancels between the two exponentials
    const double c = beta * eigvalsh(hn).minCoeff();
    const Matrix psi = expm_hermitian(hl, beta, c) * expm_hermitian(hn, -beta, -c);
    out.order.push_back(idx);
    out.factors.push_back({psi, region, d});
    left.push_back(idx);
  }

  if (ipow(d, static_cast<std::size_t>(ham.num_vertices())) <= dense_cap()) {
    const Region all = ham.all_vertices();
    const auto dim = static_cast<Eigen::Index>(ipow(d, all.size()));
    Matrix prod = Matrix::Identity(dim, dim);
    for (const auto& f : out.factors) multiply_right_local(prod, all, f);
    const EigenSystem es = eigh(ham.full().matrix);
    const double log_z = exact_log_z(ham, beta);
    if (beta * -es.values.minCoeff() - log_z > 700.0) throw DomainError("product too large to normalize");
    const double scale = std::exp(-log_z);
    Eigen::VectorXcd w(es.dim());
    for (Eigen::Index i = 0; i < w.size(); ++i) w(i) = std::exp(-beta * es.values(i) - log_z);
    out.error = trace_norm(es.reconstruct(w) - prod * scale);
  }
  return out;
}

}  // namespace gibbskit
