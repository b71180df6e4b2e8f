#include "gibbskit/cluster_expansion.hpp"

#include <algorithm>
#include <climits>
#include <cmath>
#include <limits>
#include <memory>
#include <numbers>
#include <set>
#include <unordered_map>

namespace gibbskit {

int Cluster::size() const {
  int s = 0;
  for (const auto& [e, m] : items) s += m;
  return s;
}

int Cluster::multiplicity(int edge) const {
  auto it = std::lower_bound(items.begin(), items.end(), std::make_pair(edge, INT_MIN));
  return it != items.end() && it->first == edge ? it->second : 0;
}

bool Cluster::operator<(const Cluster& o) const {
  const int a = size(), b = o.size();
  if (a != b) return a < b;
  return items < o.items;
}

Cluster make_cluster(std::vector<int> edges) {
  std::sort(edges.begin(), edges.end());
  Cluster c;
  for (int e : edges) {
    if (!c.items.empty() && c.items.back().first == e)
      ++c.items.back().second;
    else
      c.items.emplace_back(e, 1);
  }
  return c;
}

namespace {

struct ClusterHash {
  std::size_t operator()(const Cluster& c) const {
    std::uint64_t h = 1469598103934665603ULL;
    for (const auto& [e, m] : c.items) {
      h ^= (static_cast<std::uint64_t>(e) << 8) ^ static_cast<std::uint64_t>(m);
      h *= 1099511628211ULL;
    }
    return static_cast<std::size_t>(h);
  }
};

void validate(const Hamiltonian& ham, const Cluster& c) {
  if (c.items.empty()) throw InvalidArgument("cluster is empty");
  for (std::size_t i = 0; i < c.items.size(); ++i) {
    const auto [e, m] = c.items[i];
    if (e < 0 || e >= ham.num_terms())
      throw InvalidArgument("cluster edge " + std::to_string(e) + " out of range");
    if (m < 1) throw InvalidArgument("cluster multiplicities must be positive");
    if (i > 0 && c.items[i - 1].first >= e) throw InvalidArgument("cluster edges must be sorted and distinct");
  }
}

bool edges_overlap(const Hamiltonian& ham, int a, int b) {
  const auto& ea = ham.lattice().hyperedges[static_cast<std::size_t>(a)];
  const auto& eb = ham.lattice().hyperedges[static_cast<std::size_t>(b)];
  return !support_intersection(ea, eb).empty();
}

// Other edges sharing a vertex with each edge.
std::vector<std::vector<int>> edge_adjacency(const Hamiltonian& ham) {
  const auto& edges = ham.lattice().hyperedges;
  std::vector<std::vector<int>> incident(static_cast<std::size_t>(ham.num_vertices()));
  for (std::size_t i = 0; i < edges.size(); ++i)
    for (int v : edges[i]) incident[static_cast<std::size_t>(v)].push_back(static_cast<int>(i));
  std::vector<std::vector<int>> adj(edges.size());
  for (std::size_t i = 0; i < edges.size(); ++i) {
    for (int v : edges[i])
      for (int j : incident[static_cast<std::size_t>(v)])
        if (j != static_cast<int>(i)) adj[i].push_back(j);
    std::sort(adj[i].begin(), adj[i].end());
    adj[i].erase(std::unique(adj[i].begin(), adj[i].end()), adj[i].end());
  }
  return adj;
}

double normalized_trace(const Matrix& m) { return m.trace().real() / static_cast<double>(m.rows()); }

// Tensor product of operators with disjoint supports, on the sorted union.
DenseOperator tensor_product(const std::vector<const DenseOperator*>& ops, int d) {
  Matrix m = Matrix::Ones(1, 1);
  std::vector<int> order;
  for (const auto* op : ops) {
    m = kron(m, op->matrix);
    order.insert(order.end(), op->support.begin(), op->support.end());
  }
  if (std::is_sorted(order.begin(), order.end())) return {std::move(m), std::move(order), d};
  Matrix sorted_m = permute_to_sorted(m, order, d);
  std::sort(order.begin(), order.end());
  return {std::move(sorted_m), std::move(order), d};
}

// Mixed-radix walk over sub-multisets kappa <= mu (as digit vectors).
template <class F>
void for_each_sub(const std::vector<int>& mu, F&& fn) {
  std::vector<int> k(mu.size(), 0);
  while (true) {
    fn(k);
    std::size_t i = 0;
    while (i < mu.size() && k[i] == mu[i]) k[i++] = 0;
    if (i == mu.size()) return;
    ++k[i];
  }
}

Cluster from_digits(const Cluster& base, const std::vector<int>& digits) {
  Cluster c;
  for (std::size_t i = 0; i < digits.size(); ++i)
    if (digits[i] > 0) c.items.emplace_back(base.items[i].first, digits[i]);
  return c;
}

double factorial(int n) { return std::tgamma(n + 1.0); }

}  // namespace

bool is_connected(const Hamiltonian& ham, const Cluster& c) {
  if (c.items.empty()) return false;
  return connected_components(ham, c).size() == 1;
}

std::vector<Cluster> connected_components(const Hamiltonian& ham, const Cluster& c) {
  const std::size_t n = c.items.size();
  std::vector<int> label(n, -1);
  int next = 0;
  for (std::size_t s = 0; s < n; ++s) {
    if (label[s] >= 0) continue;
    label[s] = next;
    std::vector<std::size_t> stack{s};
    while (!stack.empty()) {
      const std::size_t a = stack.back();
      stack.pop_back();
      for (std::size_t b = 0; b < n; ++b)
        if (label[b] < 0 && edges_overlap(ham, c.items[a].first, c.items[b].first)) {
          label[b] = next;
          stack.push_back(b);
        }
    }
    ++next;
  }
  std::vector<Cluster> out(static_cast<std::size_t>(next));
  for (std::size_t i = 0; i < n; ++i) out[static_cast<std::size_t>(label[i])].items.push_back(c.items[i]);
  return out;
}

Region cluster_support(const Hamiltonian& ham, const Cluster& c) {
  Region s;
  for (const auto& [e, m] : c.items) s = support_union(s, ham.lattice().hyperedges[static_cast<std::size_t>(e)]);
  return s;
}

std::vector<Cluster> enumerate_connected_clusters(const Hamiltonian& ham, int m_max,
                                                  const EnumerationOptions& options) {
  if (m_max < 0) throw InvalidArgument("cluster size bound must be non-negative");
  const int E = ham.num_terms();
  if (!options.multiplicity_cap.empty() && static_cast<int>(options.multiplicity_cap.size()) != E)
    throw InvalidArgument("multiplicity caps must list every edge");
  auto cap = [&](int e) {
    return options.multiplicity_cap.empty() ? INT_MAX : options.multiplicity_cap[static_cast<std::size_t>(e)];
  };
  const auto adj = edge_adjacency(ham);

  std::vector<Cluster> out;
  if (m_max == 0) return out;
  std::set<Cluster> level;
  for (int e = 0; e < E; ++e)
    if (cap(e) >= 1) level.insert(Cluster{{{e, 1}}});
  for (int m = 1;; ++m) {
    if (out.size() + level.size() > options.max_clusters)
      throw OverCap("cluster enumeration exceeds " + std::to_string(options.max_clusters) + " clusters at size " +
                    std::to_string(m));
    out.insert(out.end(), level.begin(), level.end());
    if (m == m_max) break;
    std::set<Cluster> next;
    for (const auto& c : level) {
      for (std::size_t i = 0; i < c.items.size(); ++i) {
        if (c.items[i].second >= cap(c.items[i].first)) continue;
        Cluster g = c;
        ++g.items[i].second;
        next.insert(std::move(g));
      }
      std::vector<int> fresh;
      for (const auto& [e, mult] : c.items)
        for (int f : adj[static_cast<std::size_t>(e)])
          if (!c.contains(f) && cap(f) >= 1) fresh.push_back(f);
      std::sort(fresh.begin(), fresh.end());
      fresh.erase(std::unique(fresh.begin(), fresh.end()), fresh.end());
      for (int f : fresh) {
        Cluster g = c;
        g.items.insert(std::lower_bound(g.items.begin(), g.items.end(), std::make_pair(f, 0)), {f, 1});
        next.insert(std::move(g));
      }
    }
    level = std::move(next);
  }
  return out;
}

std::vector<std::uint64_t> cluster_counts(const std::vector<Cluster>& clusters, int m_max) {
  std::vector<std::uint64_t> counts(static_cast<std::size_t>(std::max(m_max, 0) + 1), 0);
  for (const auto& c : clusters) {
    const int s = c.size();
    if (s <= m_max) ++counts[static_cast<std::size_t>(s)];
  }
  return counts;
}

double cluster_derivative(const Hamiltonian& ham, double beta, const Cluster& w, int order_cap) {
  validate(ham, w);
  const int m = w.size();
  if (m > order_cap)
    throw OverCap("cluster size " + std::to_string(m) + " exceeds the order cap " + std::to_string(order_cap));
  const int d = ham.local_dim();
  std::vector<int> mu, stride;
  int total = 1;
  for (const auto& [e, mult] : w.items) {
    mu.push_back(mult);
    stride.push_back(total);
    total *= mult + 1;
  }
  auto index_of = [&](const std::vector<int>& digits) {
    int idx = 0;
    for (std::size_t i = 0; i < digits.size(); ++i) idx += digits[i] * stride[i];
    return idx;
  };

  std::vector<std::vector<std::vector<int>>> by_level(static_cast<std::size_t>(m) + 1);
  for_each_sub(mu, [&](const std::vector<int>& k) {
    int s = 0;
    for (int x : k) s += x;
    by_level[static_cast<std::size_t>(s)].push_back(k);
  });

  // p[nu] = coefficient of lambda^nu in the normalized trace of exp(-beta sum lambda_i h_i),
  // obtained from Qt[nu] = (1/|nu|) sum_i Qt[nu - e_i] h_i (the ordered products divided by |nu|!).
  std::vector<double> p(static_cast<std::size_t>(total), 0.0);
  p[0] = 1.0;
  std::unordered_map<int, DenseOperator> prev, cur;
  for (int n = 1; n <= m; ++n) {
    cur.clear();
    for (const auto& nu : by_level[static_cast<std::size_t>(n)]) {
      Region s;
      for (std::size_t i = 0; i < nu.size(); ++i)
        if (nu[i] > 0) s = support_union(s, ham.term(w.items[i].first).op.support);
      require_dense(ipow(d, s.size()), "cluster support");
      const auto dim = static_cast<Eigen::Index>(ipow(d, s.size()));
      Matrix q = Matrix::Zero(dim, dim);
      for (std::size_t i = 0; i < nu.size(); ++i) {
        if (nu[i] == 0) continue;
        auto lower = nu;
        --lower[i];
        Matrix x = n == 1 ? Matrix::Identity(dim, dim) : embed_matrix(prev.at(index_of(lower)), s);
        multiply_right_local(x, s, ham.term(w.items[i].first).op);
        q += x;
      }
      q /= static_cast<double>(n);
      p[static_cast<std::size_t>(index_of(nu))] = std::pow(-beta, n) * normalized_trace(q);
      cur.emplace(index_of(nu), DenseOperator{std::move(q), std::move(s), d});
    }
    std::swap(prev, cur);
  }

  // log series: nu_j l_nu = nu_j p_nu - sum_{0 < kappa < nu} kappa_j l_kappa p_{nu - kappa}
  std::vector<double> l(static_cast<std::size_t>(total), 0.0);
  for (int n = 1; n <= m; ++n) {
    for (const auto& nu : by_level[static_cast<std::size_t>(n)]) {
      std::size_t j = 0;
      while (nu[j] == 0) ++j;
      const int inu = index_of(nu);
      double acc = p[static_cast<std::size_t>(inu)];
      for_each_sub(nu, [&](const std::vector<int>& k) {
        const int ik = index_of(k);
        if (ik == 0 || ik == inu || k[j] == 0) return;
        acc -= static_cast<double>(k[j]) / nu[j] * l[static_cast<std::size_t>(ik)] *
               p[static_cast<std::size_t>(inu - ik)];
      });
      l[static_cast<std::size_t>(inu)] = acc;
    }
  }
  return l[static_cast<std::size_t>(total - 1)];
}

double beta_star(const Hamiltonian& ham) {
  const double h = ham.h();
  if (h <= 0.0) return std::numeric_limits<double>::infinity();
  const double deg = std::max(1, ham.degree());
  return 1.0 / (2.0 * std::numbers::e * std::numbers::e * h * deg * (deg + 1.0));
}

namespace {

// Contributions of all connected clusters up to size M at beta = 1. Normalized
// ordered products Qt[W] of every connected cluster below size M are cached;
// a disconnected remainder is the tensor product of its components' Qt.
class Engine {
 public:
  Engine(const Hamiltonian& ham, int M, std::uint64_t memory_budget, const EnumerationOptions& enumeration)
      : ham_(ham), M_(M), budget_(memory_budget) {
    clusters_ = enumerate_connected_clusters(ham, M, enumeration);
    contributions_.reserve(clusters_.size());
    for (const auto& w : clusters_) contributions_.push_back(process(w));
  }

  const std::vector<Cluster>& clusters() const { return clusters_; }
  const std::vector<double>& contributions() const { return contributions_; }

 private:
  struct Entry {
    double ntr = 0.0;  // normalized trace of Qt[W]
    double c = 0.0;    // contribution at beta = 1
    std::shared_ptr<const DenseOperator> q;
  };

  const Entry& lookup(const Cluster& c) const {
    auto it = cache_.find(c);
    if (it == cache_.end()) throw Error("internal: connected sub-cluster missing from the cache");
    return it->second;
  }

  // p at beta = 1 of an arbitrary nonzero sub-multiset (product over components).
  double p_of(const Cluster& c) const {
    double v = 1.0;
    for (const auto& comp : connected_components(ham_, c)) {
      const double t = lookup(comp).ntr;
      v *= comp.size() % 2 == 0 ? t : -t;
    }
    return v;
  }

  double process(const Cluster& w) {
    const int n = w.size();
    const int d = ham_.local_dim();
    const Region s = cluster_support(ham_, w);
    const bool store = n < M_;
    Entry entry;

    Matrix qsum;
    if (store) {
      const auto dim = static_cast<Eigen::Index>(ipow(d, s.size()));
      require_dense(static_cast<std::uint64_t>(dim), "cluster support");
      used_ += static_cast<std::uint64_t>(dim) * static_cast<std::uint64_t>(dim) * sizeof(cplx);
      if (used_ > budget_)
        throw OverCap("cluster expansion cache exceeds the memory budget of " + std::to_string(budget_) +
                      " bytes at cluster size " + std::to_string(n));
      qsum = Matrix::Zero(dim, dim);
    }
    double tr_sum = 0.0;
    for (std::size_t i = 0; i < w.items.size(); ++i) {
      const auto& h = ham_.term(w.items[i].first).op;
      Cluster rest = w;
      if (--rest.items[i].second == 0) rest.items.erase(rest.items.begin() + static_cast<std::ptrdiff_t>(i));
      if (rest.items.empty()) {
        if (store) accumulate_embedded(qsum, h, s);
        tr_sum += normalized_trace(h.matrix);
        continue;
      }
      const auto comps = connected_components(ham_, rest);
      std::vector<const DenseOperator*> parts;
      for (const auto& c : comps) parts.push_back(lookup(c).q.get());
      if (store) {
        Matrix x = embed_matrix(tensor_product(parts, d), s);
        multiply_right_local(x, s, h);
        qsum += x;
      } else {
        tr_sum += trace_against(parts, h);
      }
    }
    if (store) {
      qsum /= static_cast<double>(n);
      entry.ntr = normalized_trace(qsum);
      entry.q = std::make_shared<const DenseOperator>(DenseOperator{std::move(qsum), s, d});
    } else {
      entry.ntr = tr_sum / n;
    }

    const double pw = n % 2 == 0 ? entry.ntr : -entry.ntr;
    std::vector<int> mu;
    for (const auto& [e, mult] : w.items) mu.push_back(mult);
    double acc = pw;
    const double mj = mu[0];
    for_each_sub(mu, [&](const std::vector<int>& k) {
      if (k[0] == 0 || k == mu) return;
      const Cluster kappa = from_digits(w, k);
      if (!is_connected(ham_, kappa)) return;
      std::vector<int> rest(mu.size());
      for (std::size_t i = 0; i < mu.size(); ++i) rest[i] = mu[i] - k[i];
      acc -= k[0] / mj * lookup(kappa).c * p_of(from_digits(w, rest));
    });
    entry.c = acc;
    const double c = entry.c;
    cache_.emplace(w, std::move(entry));
    return c;
  }

  // ntr[(Q_1 ⊗ ... ⊗ Q_r ⊗ I) (h ⊗ I)] reduced to the support of h.
  double trace_against(const std::vector<const DenseOperator*>& parts, const DenseOperator& h) const {
    const int d = ham_.local_dim();
    double factor = 1.0;
    std::vector<DenseOperator> pieces;
    for (const auto* q : parts) {
      const Region keep = support_intersection(q->support, h.support);
      if (keep.empty()) {
        factor *= normalized_trace(q->matrix);
        continue;
      }
      DenseOperator r = partial_trace(*q, keep);
      r.matrix /= static_cast<double>(ipow(d, q->support.size() - keep.size()));
      pieces.push_back(std::move(r));
    }
    if (pieces.empty()) return factor * normalized_trace(h.matrix);
    std::vector<const DenseOperator*> ptrs;
    for (const auto& p : pieces) ptrs.push_back(&p);
    const Matrix y = embed_matrix(tensor_product(ptrs, d), h.support);
    return factor * (y.cwiseProduct(h.matrix.transpose())).sum().real() / static_cast<double>(h.matrix.rows());
  }

  const Hamiltonian& ham_;
  int M_;
  std::uint64_t budget_;
  std::uint64_t used_ = 0;
  std::vector<Cluster> clusters_;
  std::vector<double> contributions_;
  std::unordered_map<Cluster, Entry, ClusterHash> cache_;
};

void check_order(int M) {
  if (M < 0) throw InvalidArgument("series order must be non-negative");
  if (M > 24) throw OverCap("series order " + std::to_string(M) + " exceeds the cap of 24");
}

void check_beta(double beta, double bs, bool allow) {
  if (!(beta >= 0.0) || !std::isfinite(beta)) throw InvalidArgument("beta must be finite and non-negative");
  if (beta >= bs && !allow)
    throw DomainError("beta = " + std::to_string(beta) + " is not below the convergence radius beta* = " +
                      std::to_string(bs));
}

}  // namespace

std::vector<std::pair<Cluster, double>> cluster_contributions(const Hamiltonian& ham, int M,
                                                              const SeriesOptions& options,
                                                              const EnumerationOptions& enumeration) {
  check_order(M);
  EnumerationOptions en = enumeration;
  en.max_clusters = std::min(en.max_clusters, options.max_clusters);
  Engine engine(ham, M, options.memory_budget_bytes, en);
  std::vector<std::pair<Cluster, double>> out;
  out.reserve(engine.clusters().size());
  for (std::size_t i = 0; i < engine.clusters().size(); ++i)
    out.emplace_back(engine.clusters()[i], engine.contributions()[i]);
  return out;
}

double series_tail_bound(double num_vertices, double ratio, int M) {
  if (!(ratio < 1.0)) return std::numeric_limits<double>::infinity();
  return num_vertices * std::pow(ratio, M + 1) / (1.0 - ratio);
}

SeriesResult log_partition_series(const Hamiltonian& ham, double beta, int M, const SeriesOptions& options) {
  check_order(M);
  SeriesResult r;
  r.beta = beta;
  r.M = M;
  r.beta_star = beta_star(ham);
  check_beta(beta, r.beta_star, options.allow_beyond_radius);

  const auto contributions = cluster_contributions(ham, M, options);
  std::vector<double> s(static_cast<std::size_t>(M) + 1, 0.0);
  r.cluster_counts.assign(static_cast<std::size_t>(M) + 1, 0);
  for (const auto& [w, c] : contributions) {
    s[static_cast<std::size_t>(w.size())] += c;
    ++r.cluster_counts[static_cast<std::size_t>(w.size())];
  }
  const double N = ham.num_vertices();
  s[0] = N * std::log(static_cast<double>(ham.local_dim()));

  const double ratio = beta / r.beta_star;
  double sum = 0.0;
  for (int m = 0; m <= M; ++m) {
    const auto um = static_cast<std::size_t>(m);
    r.K.push_back(m == 0 ? s[0] : factorial(m) * s[um]);
    sum += (m == 0 ? 1.0 : std::pow(beta, m)) * s[um];
    r.partial_sums.push_back(sum);
    r.bounds.push_back(series_tail_bound(N, ratio, m));
    if (m == 0) {
      r.kmsmall_ratio.push_back(0.0);
    } else if (std::isinf(r.beta_star)) {
      r.kmsmall_ratio.push_back(s[um] == 0.0 ? 0.0 : std::numeric_limits<double>::infinity());
    } else {
      r.kmsmall_ratio.push_back(std::abs(s[um]) * std::pow(r.beta_star, m) / N);
    }
  }
  r.log_z = r.partial_sums.back();
  r.bound = r.bounds.back();
  return r;
}

namespace {

// (1/beta) sum_{m > M} m r^m with r = beta / beta*.
double local_bound(double beta, double bs, int M) {
  if (std::isinf(bs)) return 0.0;
  const double r = beta / bs;
  if (r >= 1.0) return std::numeric_limits<double>::infinity();
  return std::pow(r, M) * (M + 1.0 - M * r) / ((1.0 - r) * (1.0 - r) * bs);
}

}  // namespace

LocalSeriesResult local_expectation_series(const Hamiltonian& ham, double beta, int term_index, int M,
                                           const SeriesOptions& options) {
  if (term_index < 0 || term_index >= ham.num_terms()) throw InvalidArgument("term index out of range");
  check_order(M);
  LocalSeriesResult r;
  r.M = M;
  r.beta_star = beta_star(ham);
  check_beta(beta, r.beta_star, options.allow_beyond_radius);
  for (const auto& [w, c] : cluster_contributions(ham, M, options)) {
    const int mu = w.multiplicity(term_index);
    if (mu > 0) r.value -= mu * std::pow(beta, w.size() - 1) * c;
  }
  r.bound = local_bound(beta, r.beta_star, M);
  return r;
}

LocalSeriesResult local_expectation_series(const Hamiltonian& ham, double beta, const DenseOperator& observable,
                                           int M, const SeriesOptions& options) {
  check_order(M);
  std::vector<TermSpec> specs;
  for (const auto& t : ham.terms()) specs.push_back({t.op.support, t.op.matrix});
  specs.push_back({observable.support, observable.matrix});
  const Hamiltonian augmented(ham.num_vertices(), ham.local_dim(), specs);
  const int aux = ham.num_terms();

  LocalSeriesResult r;
  r.M = M;
  r.beta_star = beta_star(augmented);
  check_beta(beta, r.beta_star, options.allow_beyond_radius);
  EnumerationOptions en;
  en.multiplicity_cap.assign(static_cast<std::size_t>(augmented.num_terms()), INT_MAX);
  en.multiplicity_cap[static_cast<std::size_t>(aux)] = 1;
  for (const auto& [w, c] : cluster_contributions(augmented, M, options, en))
    if (w.contains(aux)) r.value -= std::pow(beta, w.size() - 1) * c;
  r.bound = local_bound(beta, r.beta_star, M);
  return r;
}

CorrelatorOrder correlator_order_bound(const Hamiltonian& ham, int i, int j) {
  CorrelatorOrder out;
  out.order = edge_chain_length(ham, i, j);
  if (out.order == kUnreachable) return out;
  EnumerationOptions en;
  en.max_clusters = 2'000'000;
  std::vector<Cluster> clusters;
  try {
    clusters = enumerate_connected_clusters(ham, out.order, en);
  } catch (const OverCap&) {
    return out;
  }
  bool below = false, at = false;
  for (const auto& c : clusters) {
    if (!c.contains(i) || !c.contains(j)) continue;
    (c.size() < out.order ? below : at) = true;
  }
  out.verified = !below && at;
  return out;
}

}  // namespace gibbskit
