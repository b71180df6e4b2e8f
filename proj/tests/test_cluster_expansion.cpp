#include <doctest.h>

#include <cmath>
#include <functional>
#include <numeric>

#include "gibbskit/cluster_expansion.hpp"
#include "gibbskit/exact_oracle.hpp"
#include "oracles/free_fermion.hpp"
#include "oracles/transfer_matrix.hpp"

using namespace gibbskit;
using nlohmann::json;

namespace {

Hamiltonian tfim(int n, double j, double delta) {
  return build_model({{"model", "tfim_chain"}, {"N", n}, {"J", j}, {"Delta", delta}});
}

Hamiltonian random_chain(int n, int seed) {
  return build_model({{"model", "random_chain"}, {"N", n}, {"seed", seed}});
}

// Brute force: every multiset of size m (non-decreasing edge sequences),
// connectivity by union-find over shared vertices.
std::uint64_t brute_force_count(const Hamiltonian& h, int m) {
  const int E = h.num_terms();
  const auto& edges = h.lattice().hyperedges;
  std::uint64_t count = 0;
  std::vector<int> seq(static_cast<std::size_t>(m), 0);
  std::function<void(int, int)> rec = [&](int pos, int lo) {
    if (pos == m) {
      std::vector<int> distinct(seq.begin(), seq.end());
      distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
      std::vector<int> parent(distinct.size());
      std::iota(parent.begin(), parent.end(), 0);
      std::function<int(int)> find = [&](int x) { return parent[x] == x ? x : parent[x] = find(parent[x]); };
      for (std::size_t a = 0; a < distinct.size(); ++a)
        for (std::size_t b = a + 1; b < distinct.size(); ++b) {
          bool share = false;
          for (int u : edges[distinct[a]])
            for (int v : edges[distinct[b]]) share |= u == v;
          if (share) parent[find(static_cast<int>(a))] = find(static_cast<int>(b));
        }
      int roots = 0;
      for (std::size_t a = 0; a < distinct.size(); ++a) roots += find(static_cast<int>(a)) == static_cast<int>(a);
      count += roots == 1;
      return;
    }
    for (int e = lo; e < E; ++e) {
      seq[static_cast<std::size_t>(pos)] = e;
      rec(pos + 1, e);
    }
  };
  rec(0, 0);
  return count;
}

// Cumulants of H under the normalized trace: K_m = (-1)^m kappa_m.
std::vector<double> cumulant_oracle(const Hamiltonian& h) {
  const Matrix H = h.full().matrix;
  const double dim = static_cast<double>(H.rows());
  std::vector<double> mom(5, 1.0);
  Matrix p = Matrix::Identity(H.rows(), H.cols());
  for (int k = 1; k <= 4; ++k) {
    p = p * H;
    mom[k] = p.trace().real() / dim;
  }
  const double m1 = mom[1], m2 = mom[2], m3 = mom[3], m4 = mom[4];
  const double k1 = m1;
  const double k2 = m2 - m1 * m1;
  const double k3 = m3 - 3 * m2 * m1 + 2 * m1 * m1 * m1;
  const double k4 = m4 - 4 * m3 * m1 - 3 * m2 * m2 + 12 * m2 * m1 * m1 - 6 * std::pow(m1, 4);
  return {0.0, -k1, k2, -k3, k4};
}

}  // namespace

TEST_CASE("cluster enumeration on a three-site chain") {
  auto h = tfim(3, 1.0, 0.0);
  auto c1 = enumerate_connected_clusters(h, 1);
  CHECK(c1.size() == 2);
  auto c2 = enumerate_connected_clusters(h, 2);
  REQUIRE(c2.size() == 5);
  CHECK(c2[2] == make_cluster({0, 1}));  // (0,1),(1,1) precedes (0,2)
  CHECK(c2[3] == make_cluster({0, 0}));
  CHECK(c2[4] == make_cluster({1, 1}));
}

TEST_CASE("cluster counts agree with brute-force multiset enumeration") {
  const std::vector<std::pair<Hamiltonian, int>> cases = {
      {random_chain(6, 2), 6},
      {tfim(4, 1.0, 1.0), 5},
      {build_model({{"model", "tfim_grid"}, {"Lx", 2}, {"Ly", 2}}), 4},
      {tfim(5, 1.0, 0.0), 4},
  };
  for (const auto& [h, m] : cases) {
    const auto counts = cluster_counts(enumerate_connected_clusters(h, m), m);
    for (int s = 1; s <= m; ++s) CHECK(counts[s] == brute_force_count(h, s));
  }
}

TEST_CASE("enumeration respects multiplicity caps and is canonical") {
  auto h = random_chain(5, 4);
  EnumerationOptions opt;
  opt.multiplicity_cap = {1, 1, 1, 1};
  auto cs = enumerate_connected_clusters(h, 4, opt);
  for (const auto& c : cs)
    for (const auto& [e, m] : c.items) CHECK(m == 1);
  CHECK(cs.size() == 10);  // intervals of a 4-edge path
  CHECK(std::is_sorted(cs.begin(), cs.end()));
}

TEST_CASE("single-bond cluster derivatives") {
  const double beta = 0.3, j = 1.3;
  auto h = tfim(2, j, 0.0);
  CHECK(cluster_derivative(h, beta, make_cluster({0, 0})) == doctest::Approx(beta * beta * j * j / 2).epsilon(1e-12));
  CHECK(std::abs(cluster_derivative(h, beta, make_cluster({0}))) < 1e-15);
  // log cosh(x) = x^2/2 - x^4/12 + ...
  CHECK(cluster_derivative(h, beta, make_cluster({0, 0, 0, 0})) ==
        doctest::Approx(-std::pow(beta * j, 4) / 12).epsilon(1e-10));

  auto r = random_chain(3, 5);
  const auto& t = r.term(0).op.matrix;
  CHECK(cluster_derivative(r, beta, make_cluster({0})) ==
        doctest::Approx(-beta * t.trace().real() / 4.0).epsilon(1e-12));
}

TEST_CASE("disconnected clusters contribute nothing") {
  auto h = random_chain(7, 11);
  const std::vector<Cluster> disconnected = {make_cluster({0, 2}), make_cluster({0, 0, 3}), make_cluster({1, 3, 5}),
                                             make_cluster({0, 1, 3, 3}), make_cluster({0, 4, 4, 5})};
  for (const auto& w : disconnected) {
    REQUIRE_FALSE(is_connected(h, w));
    CHECK(std::abs(cluster_derivative(h, 0.7, w)) < 1e-12);
  }
  CHECK(std::abs(cluster_derivative(h, 0.7, make_cluster({0, 1}))) > 1e-6);
}

TEST_CASE("cached contributions match the direct derivative") {
  for (const auto& h : {random_chain(6, 3), tfim(4, 0.8, 1.1)}) {
    const auto all = cluster_contributions(h, 5);
    REQUIRE(!all.empty());
    for (const auto& [w, c] : all)
      CHECK(c == doctest::Approx(cluster_derivative(h, 1.0, w)).epsilon(1e-9).scale(1.0));
  }
}

TEST_CASE("K_m matches cumulants of H") {
  for (const auto& h : {random_chain(5, 8), tfim(5, 1.0, 0.7)}) {
    const double bs = beta_star(h);
    auto s = log_partition_series(h, bs / 4, 4);
    const auto oracle = cumulant_oracle(h);
    CHECK(s.K[0] == doctest::Approx(5 * std::log(2.0)));
    for (int m = 1; m <= 4; ++m) CHECK(s.K[m] == doctest::Approx(oracle[m]).epsilon(1e-9).scale(1.0));
  }
}

TEST_CASE("series on random chains stays within its bound") {
  for (int seed = 1; seed <= 3; ++seed) {
    auto h = random_chain(8, seed);
    const double beta = beta_star(h) / 8;
    const double exact = exact_log_z(h, beta);
    auto s = log_partition_series(h, beta, 8);
    for (int m = 0; m <= 8; ++m) CHECK(std::abs(s.partial_sums[m] - exact) <= s.bounds[m]);
    CHECK(std::abs(s.log_z - exact) <= 1e-5);
    for (int m = 1; m <= 8; ++m) CHECK(s.kmsmall_ratio[m] <= 1.0);
  }
}

TEST_CASE("series past the radius needs an explicit opt-in") {
  auto h = tfim(8, 1.0, 1.0);
  CHECK(beta_star(h) == doctest::Approx(1.0 / (40 * std::exp(2.0))));
  CHECK_THROWS_AS(log_partition_series(h, 0.05, 6), DomainError);
  SeriesOptions opt;
  opt.allow_beyond_radius = true;
  auto s = log_partition_series(h, 0.05, 6, opt);
  CHECK(std::isinf(s.bound));
  CHECK(std::abs(s.log_z - oracle::tfim_free_fermion_log_z(8, 1.0, 1.0, 0.05)) <= 1e-6);
  CHECK(std::abs(s.log_z - exact_log_z(h, 0.05)) <= 1e-6);
}

TEST_CASE("classical Ising series against the transfer matrix") {
  auto h = build_model({{"model", "classical_ising"}, {"N", 10}, {"J", 1.0}});
  SeriesOptions opt;
  opt.allow_beyond_radius = true;
  auto s = log_partition_series(h, 0.1, 8, opt);
  oracle::IsingChain chain{10, 1.0, 0.0, 0.1};
  CHECK(std::abs(s.log_z - chain.log_z()) <= 1e-6);
}

TEST_CASE("correlator order on a chain") {
  auto h = build_model({{"model", "classical_ising"}, {"N", 6}, {"J", 1.0}});
  auto o = correlator_order_bound(h, 0, 4);
  CHECK(o.order == 5);
  CHECK(o.verified);
}

TEST_CASE("local expectations from the series") {
  auto h = random_chain(6, 9);
  const double beta = beta_star(h) / 6;
  auto state = gibbs(h, beta);
  for (int i : {0, 2, 4}) {
    auto r = local_expectation_series(h, beta, i, 7);
    const double exact = expectation(state, h.term(i).op);
    CHECK(std::abs(r.value - exact) <= r.bound);
    CHECK(std::abs(r.value - exact) <= 1e-8);
  }
  DenseOperator z{pauli('Z'), {3}, 2};
  SeriesOptions opt;
  auto r = local_expectation_series(h, beta / 2, z, 7, opt);
  auto state2 = gibbs(h, beta / 2);
  CHECK(std::abs(r.value - expectation(state2, z)) <= std::max(r.bound, 1e-9));
}

TEST_CASE("cluster errors") {
  auto h = random_chain(4, 1);
  CHECK_THROWS_AS(cluster_derivative(h, 1.0, make_cluster({0, 7})), InvalidArgument);
  CHECK_THROWS_AS(cluster_derivative(h, 1.0, make_cluster(std::vector<int>(13, 0))), OverCap);
  EnumerationOptions small;
  small.max_clusters = 10;
  CHECK_THROWS_AS(enumerate_connected_clusters(h, 6, small), OverCap);
  CHECK_THROWS_AS(log_partition_series(h, -1.0, 2), InvalidArgument);
}
