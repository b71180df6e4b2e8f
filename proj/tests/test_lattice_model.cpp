#include <doctest.h>

#include "gibbskit/lattice_model.hpp"

using namespace gibbskit;
using nlohmann::json;

namespace {

Hamiltonian tfim(int n, double j, double delta) {
  return build_model({{"model", "tfim_chain"}, {"N", n}, {"J", j}, {"Delta", delta}});
}

}  // namespace

TEST_CASE("tfim chain with zero field keeps only the bonds") {
  auto h = tfim(3, 1.0, 0.0);
  REQUIRE(h.num_terms() == 2);
  for (const auto& t : h.terms()) {
    CHECK(t.op.support.size() == 2);
    CHECK(max_abs(t.op.matrix - pauli_string("XX")) == 0.0);
  }
}

TEST_CASE("non-interacting tfim has spectrum -2, 0, 0, 2") {
  auto h = tfim(2, 0.0, 1.0);
  const RealVector e = eigvalsh(h.full().matrix);
  REQUIRE(e.size() == 4);
  CHECK(e(0) == doctest::Approx(-2.0));
  CHECK(e(1) == doctest::Approx(0.0));
  CHECK(e(2) == doctest::Approx(0.0));
  CHECK(e(3) == doctest::Approx(2.0));
}

TEST_CASE("tfim derived parameters") {
  auto h = tfim(6, 1.0, 1.0);
  CHECK(h.k() == 2);
  CHECK(h.degree() == 4);
  CHECK(h.h() == doctest::Approx(1.0));
  CHECK(h.J() == doctest::Approx(3.0));
  CHECK(h.num_terms() == 11);
}

TEST_CASE("random chain norms agree with an independent SVD") {
  auto h = build_model({{"model", "random_chain"}, {"N", 8}, {"seed", 7}});
  CHECK(h.k() == 2);
  CHECK(h.h() <= 1.0 + 1e-12);
  double hmax = 0.0;
  for (const auto& t : h.terms()) {
    Eigen::JacobiSVD<Matrix> svd(t.op.matrix);
    const double s = svd.singularValues()(0);
    CHECK(t.norm == doctest::Approx(s).epsilon(1e-12));
    hmax = std::max(hmax, s);
  }
  CHECK(h.h() == doctest::Approx(hmax).epsilon(1e-12));
}

TEST_CASE("derived parameters are idempotent") {
  auto h = build_model({{"model", "random_chain"}, {"N", 6}, {"seed", 3}});
  const double h0 = h.h(), j0 = h.J();
  const int k0 = h.k(), d0 = h.degree();
  h.recompute_derived();
  h.recompute_derived();
  CHECK(h.h() == h0);
  CHECK(h.J() == j0);
  CHECK(h.k() == k0);
  CHECK(h.degree() == d0);
}

TEST_CASE("chain distances") {
  auto h = tfim(6, 1.0, 1.0);
  CHECK(distance(h, {0}, {1}) == 1);
  CHECK(distance(h, {0}, {5}) == 5);
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < 6; ++j)
      if (i != j) CHECK(distance(h, {i}, {j}) == std::abs(i - j));
  CHECK_THROWS_AS(distance(h, {0, 1}, {1, 2}), InvalidArgument);
}

TEST_CASE("grid distance corner to corner") {
  auto h = build_model({{"model", "tfim_grid"}, {"Lx", 3}, {"Ly", 3}});
  CHECK(distance(h, {0}, {8}) == 4);
}

TEST_CASE("disconnected regions are unreachable") {
  auto h = build_model({{"model", "custom"},
                        {"N", 4},
                        {"terms", {{{"support", {0, 1}}, {"pauli", "ZZ"}}, {{"support", {2, 3}}, {"pauli", "ZZ"}}}}});
  CHECK(distance(h, {0}, {3}) == kUnreachable);
}

TEST_CASE("boundaries") {
  auto chain = tfim(5, 1.0, 1.0);
  CHECK(boundary(chain, {0, 1, 2}) == Region{2});
  CHECK(boundary(chain, chain.all_vertices()).empty());
  auto grid = build_model({{"model", "tfim_grid"}, {"Lx", 3}, {"Ly", 3}});
  CHECK(boundary(grid, {0, 3, 6}) == Region{0, 3, 6});
}

TEST_CASE("interaction between halves") {
  auto h = tfim(4, 1.0, 1.0);
  auto cut = interaction_between(h, {0, 1}, {2, 3});
  CHECK(cut.term_indices.size() == 1);
  CHECK(cut.norm == doctest::Approx(1.0));

  auto free = tfim(4, 0.0, 1.0);
  auto none = interaction_between(free, {0, 1}, {2, 3});
  CHECK(none.term_indices.empty());
  CHECK(none.norm == 0.0);

  auto grid = build_model({{"model", "tfim_grid"}, {"Lx", 3}, {"Ly", 3}});
  auto vcut = interaction_between(grid, {0, 3, 6}, complement(grid, {0, 3, 6}));
  CHECK(vcut.term_indices.size() == 3);
}

TEST_CASE("single-bond cut norm equals |J| for every cut") {
  auto h = tfim(6, -1.7, 0.4);
  for (int c = 1; c < 6; ++c) {
    Region left, right;
    for (int v = 0; v < 6; ++v) (v < c ? left : right).push_back(v);
    CHECK(interaction_between(h, left, right).norm == doctest::Approx(1.7));
  }
}

TEST_CASE("edge chain length") {
  auto h = build_model({{"model", "classical_ising"}, {"N", 6}, {"J", 1.0}});
  CHECK(edge_chain_length(h, 0, 1) == 2);
  CHECK(edge_chain_length(h, 0, 4) == 5);
  CHECK_THROWS_AS(edge_chain_length(h, 2, 2), InvalidArgument);
}

TEST_CASE("unsorted custom support is reordered") {
  // Z on site 1 and X on site 0, written with legs (1, 0)
  json spec = {{"model", "custom"}, {"N", 2}, {"terms", {{{"support", {1, 0}}, {"pauli", "ZX"}}}}};
  auto h = build_model(spec);
  CHECK(max_abs(h.term(0).op.matrix - pauli_string("XZ")) < 1e-15);
}

TEST_CASE("model errors") {
  CHECK_THROWS_AS(build_model({{"model", "nope"}}), InvalidArgument);
  CHECK_THROWS_AS(build_model({{"model", "tfim_chain"}, {"N", 3}, {"Jx", 1}}), InvalidArgument);
  json bad = {{"model", "custom"},
              {"terms", {{{"support", {0}}, {"matrix_re", {{0, 1}, {0, 0}}}}}}};
  CHECK_THROWS_AS(build_model(bad), InvalidArgument);
  json range = {{"model", "custom"}, {"N", 2}, {"terms", {{{"support", {0, 2}}, {"pauli", "ZZ"}}}}};
  CHECK_THROWS_AS(build_model(range), InvalidArgument);
}
