#include <doctest.h>

#include <cmath>
#include <random>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <unsupported/Eigen/MatrixFunctions>

#include "gibbskit/imaginary_time_locality.hpp"

using namespace gibbskit;

namespace {

Hamiltonian tfim(int n, double j = 1.0, double delta = 1.0) {
  return build_model({{"model", "tfim_chain"}, {"N", n}, {"J", j}, {"Delta", delta}});
}

// Independent matrix exponential (Pade with scaling and squaring).
Matrix expm(const Matrix& m) { return m.exp(); }

DenseOperator single(char p, int site) { return {pauli(p), {site}, 2}; }
DenseOperator bond(const char* p, int site) { return {pauli_string(p), {site, site + 1}, 2}; }

double onorm(const Matrix& m) { return Eigen::JacobiSVD<Matrix>(m).singularValues()(0); }

}  // namespace

TEST_CASE("commuting perturbation leaves the tower trivial") {
  auto h = build_model({{"model", "classical_ising"}, {"N", 6}, {"J", 1.0}, {"h", 0.3}});
  auto a = single('Z', 3);
  auto tower = nested_commutators(h, a, 4);
  for (int m = 1; m <= 4; ++m) CHECK(max_abs(tower.C[m].matrix) == 0.0);
  auto ev = euclidean_evolve(h, a, 0.7);
  CHECK(max_abs(ev.matrix - embed_matrix(a, h.all_vertices())) < 1e-12);
  auto e = transfer_operator(h, a, 0.7, TransferFlavor::Exact);
  CHECK(max_abs(e.E.matrix - expm(-0.7 * embed_matrix(a, h.all_vertices()))) < 1e-12);
}

TEST_CASE("tower partial sums approach the exact Euclidean evolution") {
  auto h = tfim(8);
  auto a = single('Z', 3);
  const double beta = 0.1 / (2.0 * h.J() * h.k());
  auto tower = nested_commutators(h, a, 8);
  CHECK(tower.bounds_hold);
  const Matrix H = h.full().matrix;
  const Matrix af = embed_matrix(a, h.all_vertices());
  const Matrix exact = expm(-beta * H) * af * expm(beta * H);
  CHECK(max_abs(euclidean_evolve(h, a, beta).matrix - exact) < 1e-12);
  const Matrix partial = embed_matrix(tower.partial_sum(beta, 8), h.all_vertices());
  const double err = onorm(exact - partial);
  CHECK(err <= tower_tail_bound(h, 1.0, beta, 8));
  CHECK(err <= 1e-6);
  // each C_m stays within distance m of site 3
  for (int m = 0; m <= 8; ++m) CHECK(is_subset(tower.C[m].support, ball(h, {3}, m)));
  CHECK(tower.C[2].support == Region({1, 2, 3, 4, 5}));
}

TEST_CASE("embedded coefficients act as the identity off their support") {
  auto h = tfim(6);
  auto tower = nested_commutators(h, single('Z', 0), 2);
  const auto& c2 = tower.C[2];
  REQUIRE(c2.support == Region({0, 1, 2}));
  // reference: C_2 built from full commutators
  const Matrix H = h.full().matrix;
  const Matrix a = embed_matrix(single('Z', 0), h.all_vertices());
  const Matrix c1 = -(H * a - a * H);
  const Matrix ref = -(H * c1 - c1 * H) / 2.0;
  CHECK(max_abs(embed_matrix(c2, h.all_vertices()) - ref) <= 1e-12);
}

TEST_CASE("Euclidean evolution trivial cases") {
  auto h = build_model({{"model", "random_chain"}, {"N", 6}, {"seed", 4}});
  auto a = single('X', 2);
  CHECK(max_abs(euclidean_evolve(h, a, 0.0).matrix - embed_matrix(a, h.all_vertices())) == 0.0);
  DenseOperator full = h.full();
  CHECK(max_abs(euclidean_evolve(h, full, 0.4).matrix - full.matrix) < 1e-11);
}

TEST_CASE("exact transfer operator identity and norm bound") {
  std::mt19937_64 rng(5);
  for (int seed = 1; seed <= 4; ++seed) {
    auto h = build_model({{"model", "random_chain"}, {"N", 6}, {"seed", seed}});
    auto a = DenseOperator{h.term(2).op.matrix, h.term(2).op.support, 2};
    const double beta = 0.5 / (2.0 * h.J() * h.k());
    auto e = transfer_operator(h, a, beta, TransferFlavor::Exact);
    CHECK(e.reconstruction_error <= 1e-12);
    const Matrix H = h.full().matrix;
    const Matrix af = embed_matrix(a, h.all_vertices());
    CHECK(max_abs(expm(-beta * (H + af)) - e.E.matrix * expm(-beta * H)) <= 1e-12);
    CHECK(e.norm <= e.bound);
  }
}

TEST_CASE("localized E_A(l) converges within its bound") {
  auto h = tfim(7);
  auto a = bond("XX", 3);
  const double beta = 0.4 / (2.0 * h.J() * h.k());
  double last = 1e300;
  for (int l = 1; l <= 4; ++l) {
    auto t = transfer_operator(h, a, beta, TransferFlavor::Localized, l);
    CHECK(t.ode_delta < 1e-9);
    CHECK(t.distance_to_exact <= t.bound);
    CHECK(t.distance_to_exact < last);
    last = t.distance_to_exact;
  }
  CHECK_THROWS_AS(transfer_operator(h, a, 1.0, TransferFlavor::Localized, 2), DomainError);
}

TEST_CASE("restricted transfer operator decays with the radius") {
  auto h = tfim(8);
  auto sweep = transfer_sweep(h, bond("XX", 0), 0.2, TransferFlavor::Restricted, {1, 2, 3});
  REQUIRE(sweep.size() == 3);
  CHECK(sweep[1].measured < sweep[0].measured);
  CHECK(sweep[2].measured < sweep[1].measured);
  // log-differences grow in magnitude: faster than geometric
  const double d1 = std::log(sweep[1].measured / sweep[0].measured);
  const double d2 = std::log(sweep[2].measured / sweep[1].measured);
  CHECK(d2 < d1);
  auto whole = transfer_operator(h, bond("XX", 0), 0.2, TransferFlavor::Restricted, 8);
  CHECK(whole.distance_to_exact < 1e-11);
}

TEST_CASE("trotter transfer reduces to identity when H and A commute") {
  auto h = build_model({{"model", "classical_ising"}, {"N", 4}, {"J", 1.0}});
  auto t = trotter_transfer(h, single('Z', 1), 0.5);
  CHECK(max_abs(t.matrix - Matrix::Identity(16, 16)) < 1e-12);
}

TEST_CASE("QBP filter basics") {
  auto h = build_model({{"model", "classical_ising"}, {"N", 4}, {"J", 1.0}});
  const Matrix H = h.full().matrix;
  const Matrix z = embed_matrix(single('Z', 2), h.all_vertices());
  CHECK(max_abs(qbp_filter(H, z, 1.3) - z) < 1e-12);

  std::mt19937_64 rng(3);
  std::normal_distribution<double> g;
  for (int trial = 0; trial < 5; ++trial) {
    Matrix r(16, 16), s(16, 16);
    for (int j = 0; j < 16; ++j)
      for (int i = 0; i < 16; ++i) {
        r(i, j) = cplx(g(rng), g(rng));
        s(i, j) = cplx(g(rng), g(rng));
      }
    const Matrix hr = (r + r.adjoint()) / 2.0, ar = (s + s.adjoint()) / 2.0;
    const Matrix phi = qbp_filter(hr, ar, 0.8);
    CHECK(onorm(phi) <= onorm(ar) + 1e-12);
    CHECK(is_hermitian(phi, 1e-12));
  }
}

TEST_CASE("QBP filter reproduces the derivative of the Gibbs operator") {
  auto h = build_model({{"model", "random_chain"}, {"N", 4}, {"seed", 12}});
  const Matrix H = h.full().matrix;
  const Matrix a = embed_matrix(single('X', 1), h.all_vertices());
  const double beta = 1.1, eps = 1e-5;
  const Matrix fd = (expm(-beta * (H + eps * a)) - expm(-beta * (H - eps * a))) / (2 * eps);
  const Matrix g = expm(-beta * H);
  const Matrix phi = qbp_filter(H, a, beta);
  const Matrix rhs = -(beta / 2) * (g * phi + phi * g);
  CHECK(max_abs(fd - rhs) < 1e-6);
}

TEST_CASE("QBP weight function") {
  for (double beta : {0.1, 1.0, 10.0}) {
    CHECK(std::abs(qbp_weight_integral(beta) - 1.0) < 1e-8);
    CHECK(qbp_weight_function(beta, 0.37) == qbp_weight_function(beta, -0.37));
    const double a = 2 * beta;
    auto f = [beta](double t) { return qbp_weight_function(beta, t); };
    const double tail = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
        f, a, std::numeric_limits<double>::infinity(), 15, 1e-12);
    CHECK(tail <= qbp_weight_tail(beta, a));
    CHECK(qbp_weight_tail(beta, a) == doctest::Approx(4.0 / (M_PI * M_PI * (std::exp(2 * M_PI) - 1))));
  }
  CHECK_THROWS_AS(qbp_weight_tail(1.0, 0.1), InvalidArgument);
  CHECK(qbp_kernel(2.0, 0.0) == 1.0);
}

TEST_CASE("QBP operator of a zero perturbation is the identity") {
  auto h = tfim(4);
  DenseOperator zero{Matrix::Zero(2, 2), {1}, 2};
  QbpOptions opt;
  opt.substeps = 4;
  auto q = qbp_operator(h, zero, 1.0, -1, opt);
  CHECK(max_abs(q.O.matrix - Matrix::Identity(16, 16)) < 1e-14);
}

TEST_CASE("QBP reconstruction and norm certificate") {
  auto h = tfim(6);
  auto a = bond("XX", 2);
  QbpOptions opt;
  opt.substeps = 32;
  auto q = qbp_operator(h, a, 1.0, -1, opt);
  CHECK(q.quadrature_error <= opt.tolerance);
  CHECK(q.reconstruction_error <= 1e-7);
  CHECK(q.norm <= q.norm_bound + 1e-9);
  // independent check of the identity with Pade exponentials
  const Matrix H = h.full().matrix;
  const Matrix af = embed_matrix(a, h.all_vertices());
  const Matrix lhs = expm(-(H + af));
  const Matrix rhs = q.O.matrix * expm(-H) * q.O.matrix.adjoint();
  CHECK(onorm(lhs - rhs) / onorm(lhs) <= 1e-7);
}

TEST_CASE("localized QBP operators approach the exact one") {
  auto h = tfim(7);
  QbpOptions opt;
  opt.substeps = 16;
  opt.tolerance = 1e-4;
  auto sweep = qbp_sweep(h, bond("XX", 3), 1.0, {0, 1, 2}, opt);
  REQUIRE(sweep.size() == 3);
  CHECK(sweep[1].measured < sweep[0].measured);
  CHECK(sweep[2].measured < sweep[1].measured);
  auto loc = qbp_operator(h, bond("XX", 3), 1.0, 1, opt);
  CHECK(loc.O.support == Region({2, 3, 4, 5}));
  CHECK(loc.distance_to_exact == doctest::Approx(sweep[1].measured).epsilon(1e-3));
}

TEST_CASE("Lieb-Robinson check") {
  auto h = tfim(8);
  auto rep = lieb_robinson_check(h, single('Z', 0), 1.0, 8, 4);
  for (const auto& p : rep.points) {
    if (p.t == 0.0) CHECK(p.error == 0.0);
    if (p.m >= 8) CHECK(p.error == 0.0);
  }
  // at fixed t the error falls with m
  for (int m = 1; m < 7; ++m) {
    double a = 0, b = 0;
    for (const auto& p : rep.points) {
      if (p.t != 1.0) continue;
      if (p.m == m - 1) a = p.error;
      if (p.m == m) b = p.error;
    }
    CHECK(b <= a);
  }
  CHECK(rep.c_prime > 0.0);
}

TEST_CASE("chain certificates") {
  CHECK(chain_norm_bound(0.1, 1.0, 1.0) > 1.0);
  CHECK(std::isinf(chain_tail_bound(1.0, 1.0, 1.0, 10)));
  CHECK(chain_tail_bound(1e-4, 1.0, 1.0, 1) == doctest::Approx(15 * std::exp(-2.0)));
}
