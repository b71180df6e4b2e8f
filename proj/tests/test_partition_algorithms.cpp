#include <doctest.h>

#include <cmath>

#include "gibbskit/cluster_expansion.hpp"
#include "gibbskit/exact_oracle.hpp"
#include "gibbskit/partition_algorithms.hpp"

using namespace gibbskit;

namespace {

Hamiltonian tfim(int n, double j = 1.0, double delta = 1.0) {
  return build_model({{"model", "tfim_chain"}, {"N", n}, {"J", j}, {"Delta", delta}});
}

OneDRunConfig config(const Hamiltonian& h, double beta, int l) {
  OneDRunConfig c;
  c.hamiltonian = h;
  c.beta = beta;
  c.l_star = l;
  c.qbp.substeps = 16;
  c.qbp.tolerance = 1e-4;
  return c;
}

}  // namespace

TEST_CASE("chain detection and term order") {
  auto h = tfim(4);
  CHECK(is_chain(h));
  const auto order = chain_term_order(h);
  REQUIRE(order.size() == 7);
  int last = -1;
  for (int i : order) {
    CHECK(h.term(i).op.support.back() >= last);
    last = h.term(i).op.support.back();
  }
  CHECK_FALSE(is_chain(build_model({{"model", "tfim_grid"}, {"Lx", 2}, {"Ly", 2}})));
  OneDRunConfig c;
  c.hamiltonian = build_model({{"model", "tfim_grid"}, {"Lx", 2}, {"Ly", 2}});
  CHECK_THROWS_AS(logz_1d(c), InvalidArgument);
}

TEST_CASE("non-interacting chain is reproduced exactly") {
  const double beta = 0.7, delta = 0.9;
  auto h = tfim(6, 0.0, delta);
  auto r = logz_1d(config(h, beta, 2));
  CHECK(r.log_z_prime == doctest::Approx(6 * std::log(2 * std::cosh(beta * delta))).epsilon(1e-12));
  for (const auto& s : r.steps) CHECK(s.factor == doctest::Approx(std::cosh(beta * delta)).epsilon(1e-12));
}

TEST_CASE("untruncated windows reproduce the oracle") {
  auto h = tfim(6);
  auto c = config(h, 1.0, 6);
  c.qbp.substeps = 32;
  c.qbp.tolerance = 1e-5;
  auto r = logz_1d(c);
  CHECK(r.error <= 1e-8);
  auto rnd = build_model({{"model", "random_chain"}, {"N", 5}, {"seed", 3}});
  auto r2 = logz_1d([&] {
    auto cc = config(rnd, 0.8, 5);
    cc.qbp.substeps = 32;
    cc.qbp.tolerance = 1e-5;
    return cc;
  }());
  CHECK(r2.error <= 1e-8);
}

TEST_CASE("1D error falls with the window radius") {
  auto sweep = logz_1d_sweep(config(tfim(8), 1.0, 0), {2, 3, 4});
  REQUIRE(sweep.points.size() == 3);
  CHECK(sweep.points[1].error < sweep.points[0].error);
  CHECK(sweep.points[2].error < sweep.points[1].error);
  CHECK(sweep.c2 > 0.0);
  CHECK(sweep.points[2].error <= 1e-2);
}

TEST_CASE("step factors stay near one and decoupled chains add") {
  auto h = tfim(6);
  auto r = logz_1d(config(h, 0.5, 2));
  for (const auto& s : r.steps) {
    CHECK(s.factor > std::exp(-0.5 * 1.0 * 2));
    CHECK(s.factor < std::exp(0.5 * 1.0 * 2));
  }
  // a chain of 7 sites with the bond (2,3) removed
  nlohmann::json terms = nlohmann::json::array();
  for (int j = 0; j < 7; ++j) terms.push_back({{"support", {j}}, {"pauli", "Z"}, {"coefficient", 1.0}});
  for (int j = 0; j < 6; ++j)
    if (j != 2) terms.push_back({{"support", {j, j + 1}}, {"pauli", "XX"}, {"coefficient", 1.0}});
  auto joint = build_model({{"model", "custom"}, {"N", 7}, {"terms", terms}});
  auto a = logz_1d(config(joint, 0.5, 2));
  auto p1 = logz_1d(config(tfim(3), 0.5, 2));
  auto p2 = logz_1d(config(tfim(4), 0.5, 2));
  CHECK(a.log_z_prime == doctest::Approx(p1.log_z_prime + p2.log_z_prime).epsilon(1e-12));
}

TEST_CASE("l* schedule") {
  OneDRunConfig c;
  c.hamiltonian = tfim(10);
  c.epsilon = 1e-3;
  CHECK(l_star_schedule(c) == static_cast<int>(std::ceil(2 + std::log(1e4))));
  c.l_star = 3;
  CHECK(l_star_schedule(c) == 3);
}

TEST_CASE("cluster log Z picks the order from the bound") {
  auto h0 = tfim(6);
  auto z0 = logz_cluster(h0, 0.0, 1e-6);
  CHECK(z0.M == 0);
  CHECK(z0.log_z == doctest::Approx(6 * std::log(2.0)));

  auto h = tfim(10);
  const double bs = beta_star(h);
  auto r = logz_cluster(h, bs / 8, 1e-4);
  CHECK(r.bound <= 1e-4);
  CHECK(std::abs(r.log_z - exact_log_z(h, bs / 8)) <= 1e-4);
  CHECK(series_tail_bound(10, 1.0 / 8, r.M - 1) > 1e-4);
  CHECK_THROWS_AS(logz_cluster(h, 1.5 * bs, 1e-4), DomainError);
}

TEST_CASE("factorized thermal operator") {
  auto h = tfim(6);
  CHECK(factorize_1d_thermal(h, 1.0, 6).error <= 1e-9);
  auto ising = build_model({{"model", "classical_ising"}, {"N", 6}, {"J", 1.0}, {"h", 0.4}});
  CHECK(factorize_1d_thermal(ising, 1.0, 2).error <= 1e-9);
  double last = 1e300;
  for (int l = 1; l <= 4; ++l) {
    const double e = factorize_1d_thermal(h, 1.0, l).error;
    CHECK(e <= last);
    last = e;
  }
  CHECK(last < 1e-2);
}
