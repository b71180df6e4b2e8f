#include <doctest.h>

#include <cmath>

#include "gibbskit/statistics.hpp"

using namespace gibbskit;

namespace {

Hamiltonian tfim(int n, double j = 1.0, double delta = 1.0) {
  return build_model({{"model", "tfim_chain"}, {"N", n}, {"J", j}, {"Delta", delta}});
}

MeasurementDistribution coin() {
  MeasurementDistribution d;
  d.outcomes = {-1.0, 1.0};
  d.probabilities = {0.5, 0.5};
  d.mean = 0.0;
  d.variance = 1.0;
  return d;
}

MeasurementDistribution magnetization_distribution(const Hamiltonian& h, double beta) {
  const auto state = gibbs(h, beta, {false});
  return measurement_distribution(state, magnetization(h.num_vertices()).assemble(h.num_vertices()));
}

}  // namespace

TEST_CASE("tau grid") {
  const auto g = default_tau_grid(4.0);
  REQUIRE(g.size() == 40);
  CHECK(g.front() == doctest::Approx(-0.5));
  CHECK(g.back() == doctest::Approx(0.5));
  CHECK(g[20] == doctest::Approx(0.005));
  CHECK_THROWS_AS(characteristic_constant(coin(), 1.0, {0.0, 0.1, -0.1}), InvalidArgument);
  CHECK_THROWS_AS(characteristic_constant(coin(), 1.0, {0.1, 0.2, -0.1}), InvalidArgument);
  CHECK_THROWS_AS(characteristic_constant(coin(), 1.0, {800.0, -800.0}), DomainError);
}

TEST_CASE("single spin at infinite temperature") {
  const auto fit = characteristic_constant(coin(), 1.0, default_tau_grid(1.0));
  for (std::size_t i = 0; i < fit.tau.size(); ++i)
    CHECK(fit.log_mgf[i] == doctest::Approx(std::log(std::cosh(fit.tau[i]))).epsilon(1e-12));
  CHECK(fit.c_fit <= 0.5);
  CHECK(fit.c_fit > 0.45);
}

TEST_CASE("independent spins have c_fit at most one half") {
  const int n = 6;
  const double beta = 0.5;
  const auto d = magnetization_distribution(tfim(n, 0.0, 1.0), beta);
  const auto fit = characteristic_constant(d, n, default_tau_grid(n));
  const double p = std::exp(-beta) / (2 * std::cosh(beta));  // P(Z = +1)
  const double m = 2 * p - 1;
  for (std::size_t i = 0; i < fit.tau.size(); ++i) {
    const double t = fit.tau[i];
    const double closed = n * std::log(p * std::exp(t * (1 - m)) + (1 - p) * std::exp(t * (-1 - m)));
    CHECK(fit.log_mgf[i] == doctest::Approx(closed).epsilon(1e-10).scale(1e-12));
  }
  CHECK(fit.c_fit <= 0.5);
}

TEST_CASE("c_fit is stable under grid refinement") {
  const auto d = magnetization_distribution(tfim(8), 0.2);
  const double c20 = characteristic_constant(d, 8, default_tau_grid(8, 20)).c_fit;
  const double c40 = characteristic_constant(d, 8, default_tau_grid(8, 40)).c_fit;
  CHECK(std::isfinite(c20));
  CHECK(std::abs(c20 - c40) / c40 < 0.05);
}

TEST_CASE("concentration tails") {
  const int n = 8;
  const auto d = magnetization_distribution(tfim(n), 0.3);
  const double c = characteristic_constant(d, n, default_tau_grid(n)).c_fit;
  std::vector<double> deltas;
  for (int i = 0; i <= 20; ++i) deltas.push_back(0.1 * i * n);
  deltas.push_back(n + std::abs(d.mean) + 0.1);
  const auto r = concentration_check(d, n, c, deltas);
  CHECK(r.all_pass);
  CHECK(r.points.front().bound == 2.0);
  CHECK(r.points.back().tail == 0.0);
}

TEST_CASE("moment bounds and the tail-integration identity") {
  const int n = 8;
  const auto d = magnetization_distribution(tfim(n), 0.3);
  const double c = characteristic_constant(d, n, default_tau_grid(n)).c_fit;
  const auto r = moment_bound_check(d, n, c, 8);
  REQUIRE(r.rows.size() == 5);
  CHECK(r.rows[0].moment == doctest::Approx(1.0));
  CHECK(r.rows[0].bound == 1.0);
  CHECK(r.rows[1].moment == doctest::Approx(d.variance).epsilon(1e-10));
  CHECK(r.rows[1].moment <= 4 * c * n);
  for (int i = 1; i <= 3; ++i) CHECK(r.rows[static_cast<std::size_t>(i)].relative_gap <= 1e-6);
  CHECK(r.all_pass);
  CHECK_THROWS_AS(moment_bound_check(d, n, c, 7), InvalidArgument);
  CHECK_THROWS_AS(moment_bound_check(d, n, c, 14), InvalidArgument);
}

TEST_CASE("Berry-Esseen distance") {
  const auto be = berry_esseen(coin());
  CHECK(be.delta == doctest::Approx(0.5 * std::erfc(-1 / std::sqrt(2.0)) - 0.5).epsilon(1e-10));

  double last = 1.0;
  for (int n : {4, 6, 8, 10}) {
    const auto b = berry_esseen(magnetization_distribution(tfim(n, 0.0, 1.0), 0.4));
    CHECK(b.delta > 0.0);
    CHECK(b.delta <= 1.0);
    CHECK(b.delta < last);
    last = b.delta;
  }
  MeasurementDistribution constant;
  constant.outcomes = {2.0};
  constant.probabilities = {1.0};
  constant.mean = 2.0;
  CHECK_THROWS_AS(berry_esseen(constant), InvalidArgument);
}

TEST_CASE("microcanonical windows") {
  auto h = tfim(6);
  const auto es = eigh(h.full().matrix);
  const Matrix a = magnetization(6).assemble(6).matrix;
  const double width = es.values.maxCoeff() - es.values.minCoeff();
  const auto all = microcanonical_average(es, a, es.values.maxCoeff(), width + 1.0);
  CHECK(all.window.count() == 64);
  CHECK(all.value == doctest::Approx(a.trace().real() / 64).scale(1.0));
  CHECK_THROWS_AS(microcanonical_average(es, a, es.values.minCoeff() - 1.0, 0.5), InvalidArgument);

  // the window is half-open at the bottom
  const double e3 = es.values(3);
  const auto w = microcanonical_window(es, e3, e3 - es.values(0));
  CHECK(std::find(w.members.begin(), w.members.end(), 0) == w.members.end());

  // shift invariance
  EigenSystem shifted = es;
  shifted.values.array() += 3.7;
  const double e = es.values(20);
  CHECK(microcanonical_average(shifted, a, e + 3.7, 0.8).value ==
        doctest::Approx(microcanonical_average(es, a, e, 0.8).value).epsilon(1e-12));
  CHECK(select_E0(shifted, 0.6, 0.5) == doctest::Approx(select_E0(es, 0.6, 0.5) + 3.7).epsilon(1e-12));
}

TEST_CASE("E0 selection") {
  auto h = tfim(6);
  const auto es = eigh(h.full().matrix);
  // beta = 0: most populated window
  const double delta = 1.0;
  const double e0 = select_E0(es, 0.0, delta);
  std::size_t best = 0;
  for (Eigen::Index j = 0; j < es.dim(); ++j) best = std::max(best, microcanonical_window(es, es.values(j), delta).count());
  CHECK(microcanonical_window(es, e0, delta).count() == best);

  // the eigenvalue-anchored scan is the argmax over a continuum of window positions
  auto h10 = tfim(10);
  const auto state = gibbs(h10, 0.5, {false});
  const double e1 = select_E0(*state.spectrum, 0.5, 0.5);
  auto score = [&](double e) {
    const auto n = microcanonical_window(*state.spectrum, e, 0.5).count();
    return n == 0 ? -1e300 : std::log(static_cast<double>(n)) - 0.5 * e;
  };
  const double top = score(e1);
  bool dominated = true;
  for (double e = -14.0; e <= 14.0; e += 0.001) dominated = dominated && score(e) <= top + 1e-12;
  CHECK(dominated);
}

TEST_CASE("ensemble equivalence trend") {
  auto models = [](int n) {
    return build_model({{"model", "classical_ising"}, {"N", n}, {"J", 1.0}, {"h", 0.5}});
  };
  auto obs = [](int n) { return magnetization(n); };
  const auto s = ensemble_equivalence_sweep(models, obs, 0.3, 0.5, {6, 8, 10});
  REQUIRE(s.rows.size() == 3);
  CHECK(s.delta_star == doctest::Approx(0.5));
  CHECK(s.last_below_first == (s.rows.back().ratio < s.rows.front().ratio));
  for (const auto& r : s.rows) {
    CHECK(r.window_count > 0);
    CHECK(std::isfinite(r.ratio));
  }

  auto free = [](int n) { return tfim(n, 0.0, 1.0); };
  const auto f = ensemble_equivalence_sweep(free, obs, 0.3, 0.5, {4, 8, 12});
  CHECK(f.rows.back().ratio < f.rows.front().ratio);

  const auto be = berry_esseen_sweep(models, obs, 0.3, {6, 8, 10});
  CHECK(be.rows.back().delta < be.rows.front().delta);
  CHECK(be.constant >= be.rows.front().scaled);
}
