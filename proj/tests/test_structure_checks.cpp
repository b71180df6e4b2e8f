#include <doctest.h>

#include <Eigen/Eigenvalues>
#include <cmath>

#include "gibbskit/structure_checks.hpp"

using namespace gibbskit;

namespace {

Hamiltonian tfim(int n, double j = 1.0, double delta = 1.0) {
  return build_model({{"model", "tfim_chain"}, {"N", n}, {"J", j}, {"Delta", delta}});
}

Hamiltonian ising(int n, double j, double h) {
  return build_model({{"model", "classical_ising"}, {"N", n}, {"J", j}, {"h", h}});
}

// TFIM chain with the bond (cut - 1, cut) removed
Hamiltonian cut_tfim(int n, int cut) {
  nlohmann::json terms = nlohmann::json::array();
  for (int j = 0; j < n; ++j) terms.push_back({{"support", {j}}, {"pauli", "Z"}, {"coefficient", 1.0}});
  for (int j = 0; j + 1 < n; ++j)
    if (j + 1 != cut) terms.push_back({{"support", {j, j + 1}}, {"pauli", "XX"}, {"coefficient", 1.0}});
  return build_model({{"model", "custom"}, {"N", n}, {"terms", terms}});
}

Region range(int lo, int hi) {
  Region r;
  for (int v = lo; v < hi; ++v) r.push_back(v);
  return r;
}

double log_trace_exp(const Matrix& h, double beta) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(h, Eigen::EigenvaluesOnly);
  const Eigen::VectorXd x = -beta * es.eigenvalues();
  const double m = x.maxCoeff();
  return m + std::log((x.array() - m).exp().sum());
}

}  // namespace

TEST_CASE("area law") {
  auto h = tfim(8);
  const auto s0 = gibbs(h, 0.0);
  const auto r0 = area_law_check(s0, h, range(0, 4), range(4, 8));
  CHECK(r0.report.measured == doctest::Approx(0.0).scale(1.0).epsilon(1e-12));
  CHECK(r0.report.pass);

  const auto s = gibbs(h, 1.0);
  const auto r = area_law_check(s, h, range(0, 4), range(4, 8));
  CHECK(r.interaction_norm == doctest::Approx(1.0));
  CHECK(r.report.bound == doctest::Approx(2.0));
  CHECK(r.report.pass);
  CHECK(r.boundary_pass);
  CHECK(r.boundary_size == 2);
  CHECK(r.energy_gap_pass);
  CHECK(r.report.measured > 0.0);

  // energy gap from full-space product states
  const Matrix rho = *s.rho;
  const Matrix ra = marginal(s, range(0, 4)).matrix, rb = marginal(s, range(4, 8)).matrix;
  const Matrix hf = h.full().matrix;
  const double direct = (hf * kron(ra, rb)).trace().real() - (hf * rho).trace().real();
  CHECK(r.energy_gap == doctest::Approx(direct).epsilon(1e-10));

  auto split = cut_tfim(8, 4);
  const auto rd = area_law_check(gibbs(split, 1.0), split, range(0, 4), range(4, 8));
  CHECK(std::abs(rd.report.measured) <= 1e-10);
  CHECK(rd.report.bound == 0.0);
  CHECK(rd.report.pass);

  CHECK_THROWS_AS(area_law_check(s, h, range(0, 4), range(5, 8)), InvalidArgument);
}

TEST_CASE("correlation length") {
  auto h = ising(12, 1.0, 0.0);
  const double beta = 0.5;
  const auto c = correlation_length(gibbs(h, beta), h, chain_pair_family(2), {1, 2, 3, 4, 5});
  REQUIRE(c.defined);
  const double closed = -1.0 / std::log(std::tanh(beta));
  CHECK(std::abs(c.xi - closed) / closed <= 0.05);
  for (const auto& p : c.points) CHECK(p.value == doctest::Approx(std::pow(std::tanh(beta), p.distance)).epsilon(1e-9));

  const auto flat = correlation_length(gibbs(h, 0.0), h, chain_pair_family(2), {1, 2, 3});
  CHECK_FALSE(flat.defined);
  CHECK_FALSE(flat.warnings.empty());

  auto t = tfim(10);
  const auto q = correlation_length(gibbs(t, 0.3), t, chain_pair_family(2, 'X'), {1, 2, 3, 4, 5});
  for (std::size_t i = 1; i < q.points.size(); ++i) CHECK(q.points[i].value < q.points[i - 1].value);
  CHECK(q.defined);

  CHECK_THROWS_AS(correlation_length(gibbs(t, 0.3), t, chain_pair_family(2), {1, 2}), InvalidArgument);
  auto wrong = [](int d) {
    return std::make_pair(DenseOperator{pauli('Z'), {0}, 2}, DenseOperator{pauli('Z'), {d + 1}, 2});
  };
  CHECK_THROWS_AS(correlation_length(gibbs(t, 0.3), t, wrong, {1, 2, 3}), InvalidArgument);
}

TEST_CASE("CMI decay") {
  auto c = ising(8, 1.0, 0.3);
  const auto rc = cmi_decay(gibbs(c, 1.0), c, chain_tripartitions(8, 2, {1, 2, 3, 4}));
  for (const auto& row : rc.rows) CHECK(std::abs(row.cmi) <= 1e-10);

  auto t = tfim(10);
  const auto r0 = cmi_decay(gibbs(t, 0.0), t, chain_tripartitions(10, 2, {1, 2}));
  for (const auto& row : r0.rows) CHECK(std::abs(row.cmi) <= 1e-12);

  const auto r = cmi_decay(gibbs(t, 0.5), t, chain_tripartitions(10, 2, {1, 2, 3, 4}));
  CHECK(r.strictly_decreasing);
  CHECK(r.slope < 0.0);

  CHECK(shields(t, {{0}, {1}, range(2, 10)}));
  CHECK_FALSE(shields(t, {{0}, {2}, {1}}));
  CHECK_THROWS_AS(cmi_decay(gibbs(t, 0.5), t, {{{0}, {2}, {1}}}), InvalidArgument);
  // vertices outside A B C can route around B
  auto grid = build_model({{"model", "tfim_grid"}, {"Lx", 2}, {"Ly", 2}});
  CHECK_FALSE(shields(grid, {{0}, {1}, {3}}));
  CHECK(shields(grid, {{0}, {1, 2}, {3}}));
}

TEST_CASE("local indistinguishability") {
  auto t = tfim(10);
  const auto whole = local_indistinguishability(t, 0.8, range(0, 2), range(2, 10), {});
  CHECK(whole.distance <= 1e-12);
  CHECK(whole.log_ratio == doctest::Approx(0.0).scale(1.0).epsilon(1e-10));

  auto split = cut_tfim(10, 6);
  const auto dec = local_indistinguishability(split, 0.8, range(0, 2), range(2, 6), range(6, 10));
  CHECK(dec.distance <= 1e-12);
  CHECK(std::abs(dec.log_ratio) <= 1e-10);
  CHECK(dec.ratio_pass);

  const auto sw = local_indistinguishability_sweep(t, 0.8, 2, {2, 4, 6});
  CHECK(sw.decreasing);
  CHECK(sw.slope < 0.0);
  for (const auto& row : sw.rows) {
    CHECK(row.ratio_pass);
    CHECK(row.log_bound == doctest::Approx(0.8));
  }
  // log Z_AB + log Z_C from full-space sums
  const auto& row = sw.rows[0];
  Matrix h0 = t.sum_terms(t.terms_inside(range(0, 4)), t.all_vertices()).matrix +
              t.sum_terms(t.terms_inside(range(4, 10)), t.all_vertices()).matrix;
  const double direct = log_trace_exp(t.full().matrix, 0.8) - log_trace_exp(h0, 0.8);
  CHECK(row.log_ratio == doctest::Approx(direct).epsilon(1e-10));
}

TEST_CASE("boundary projection") {
  const Matrix x = pauli('X'), z = pauli('Z');
  const DenseOperator op{kron(x, z) + kron(z, Matrix::Identity(2, 2)), {0, 1}, 2};
  const auto p = project_onto(op, {0});
  CHECK((p.matrix - kron(z, Matrix::Identity(2, 2))).norm() <= 1e-14);
  const auto q = project_onto(op, {});
  CHECK(q.matrix.norm() <= 1e-14);
}

TEST_CASE("Hamiltonian of mean force") {
  auto free = tfim(6, 0.0, 1.0);
  const auto m0 = mean_force(free, 0.7, range(0, 3), {0, 1});
  CHECK(m0.phi_centered_norm <= 1e-10);
  CHECK(m0.reconstruction_error <= 1e-9);

  auto c = ising(8, 1.0, 0.4);
  const auto mc = mean_force(c, 1.0, range(0, 4), {0});
  CHECK(mc.boundary == Region{3});
  CHECK(mc.approximants[0].residual <= 1e-10);
  CHECK(mc.phi_centered_norm <= 2 * c.h() * 2 + 1e-9);

  auto t = tfim(10);
  const auto mt = mean_force(t, 0.3, range(0, 4), {0, 1, 2, 3});
  CHECK(mt.reconstruction_error <= 1e-9);
  for (std::size_t i = 1; i < mt.approximants.size(); ++i)
    CHECK(mt.approximants[i].residual < mt.approximants[i - 1].residual);
  CHECK(mt.approximants.back().residual <= 1e-10);

  // Tr e^{-beta H~} = Z
  const auto s = gibbs(t, 0.3);
  const auto mm = mean_force(s, t, range(3, 7), {});
  const RealVector ev = eigvalsh(mm.h_tilde.matrix);
  CHECK(log_sum_exp(-0.3 * ev) == doctest::Approx(s.log_z).epsilon(1e-12));

  CHECK_THROWS_AS(mean_force(c, 0.0, range(0, 4), {}), DomainError);
  CHECK_THROWS_AS(mean_force(ising(6, 1.0, 0.0), 40.0, range(0, 3), {}), NumericalError);
}

TEST_CASE("effective partition ratio") {
  auto split = cut_tfim(6, 2);
  const auto one = effective_partition_ratio(split, 0.5, range(0, 2), {0, 1});
  CHECK(one.exact == doctest::Approx(1.0).epsilon(1e-12));
  for (const auto& r : one.rows) CHECK(r.estimate == 1.0);

  QbpOptions q;
  q.substeps = 16;
  q.tolerance = 1e-4;
  auto t = tfim(10);
  const auto r = effective_partition_ratio(t, 0.5, {4, 5}, {1, 2}, q);
  const Matrix h0 = t.sum_terms(t.terms_inside({4, 5}), t.all_vertices()).matrix +
                    t.sum_terms(t.terms_inside(complement(t, {4, 5})), t.all_vertices()).matrix;
  CHECK(r.log_exact == doctest::Approx(log_trace_exp(t.full().matrix, 0.5) - log_trace_exp(h0, 0.5)).epsilon(1e-10));
  REQUIRE(r.rows.size() == 2);
  CHECK(r.rows[1].relative_error < r.rows[0].relative_error);
  CHECK(r.rows[1].relative_error < 1e-2);
  CHECK(r.rows[0].bath == Region{2, 3, 6, 7});

  // commuting, zero field: the boundary terms alone fix the ratio
  auto c = ising(8, 1.0, 0.0);
  const auto rc = effective_partition_ratio(c, 0.7, {3, 4}, {c.k()}, q);
  CHECK(rc.rows[0].relative_error <= 1e-9);
  CHECK(rc.exact == doctest::Approx(std::pow(std::cosh(0.7), 2)).epsilon(1e-12));
}

TEST_CASE("commuting suite") {
  auto c = ising(8, 1.0, 0.4);
  const auto r = commuting_suite(c, 1.0);
  CHECK(r.all_pass);
  CHECK(r.max_exchange_residual <= 1e-10);
  CHECK(r.max_cmi <= 1e-10);
  CHECK(r.triples_checked == 126);  // C(9, 4)
  CHECK(r.factorize_error <= 1e-9);
  CHECK(r.mean_force_pass);

  nlohmann::json one = nlohmann::json::array();
  one.push_back({{"support", {0, 1}}, {"pauli", "ZZ"}, {"coefficient", 0.8}});
  auto single = build_model({{"model", "custom"}, {"N", 3}, {"terms", one}});
  CHECK(commuting_suite(single, 0.9).max_exchange_residual <= 1e-14);

  CHECK_THROWS_AS(commuting_suite(tfim(4), 1.0), InvalidArgument);
}
