#pragma once

#include <limits>
#include <string>
#include <vector>

#include <json.hpp>

#include "gibbskit/dense.hpp"

namespace gibbskit {

using Region = std::vector<int>;

/// Distance reported between regions that no chain of hyperedges connects.
inline constexpr int kUnreachable = std::numeric_limits<int>::max();

/// Interaction hypergraph: N sites of dimension d and an ordered list of
/// hyperedges (each stored sorted).
struct Lattice {
  int num_vertices = 0;
  int local_dim = 2;
  std::vector<std::vector<int>> hyperedges;
  int k = 0;       // largest hyperedge size
  int degree = 0;  // largest number of other hyperedges sharing a vertex with one hyperedge
};

struct LocalTerm {
  int edge_index = 0;
  DenseOperator op;  // op.support equals the hyperedge
  double norm = 0.0;
};

/// Input form of a term before validation: matrix legs follow `support` as
/// given, which need not be sorted.
struct TermSpec {
  std::vector<int> support;
  Matrix matrix;
};

class Hamiltonian {
 public:
  Hamiltonian() = default;
  Hamiltonian(int num_vertices, int local_dim, const std::vector<TermSpec>& terms);

  const Lattice& lattice() const { return lattice_; }
  const std::vector<LocalTerm>& terms() const { return terms_; }
  const LocalTerm& term(int i) const { return terms_.at(static_cast<std::size_t>(i)); }
  int num_terms() const { return static_cast<int>(terms_.size()); }
  int num_vertices() const { return lattice_.num_vertices; }
  int local_dim() const { return lattice_.local_dim; }

  double h() const { return h_; }
  double J() const { return J_; }
  int k() const { return lattice_.k; }
  int degree() const { return lattice_.degree; }

  /// Recomputes k, degree, term norms, h and J from the terms.
  void recompute_derived();

  /// Sum of the selected terms as a matrix on `support`, which must contain
  /// every selected term's support.
  DenseOperator sum_terms(const std::vector<int>& indices, const Region& support) const;
  /// Full Hamiltonian on all N sites (dimension d^N, subject to the dense cap).
  DenseOperator full() const;

  /// Indices of terms whose support lies inside / intersects `region`.
  std::vector<int> terms_inside(const Region& region) const;
  std::vector<int> terms_touching(const Region& region) const;

  /// Same lattice size, only the selected terms kept.
  Hamiltonian subset(const std::vector<int>& indices) const;

  Region all_vertices() const;

  /// Sites adjacent through at least one hyperedge.
  const std::vector<std::vector<int>>& neighbors() const { return neighbors_; }

  nlohmann::json summary() const;

 private:
  Lattice lattice_;
  std::vector<LocalTerm> terms_;
  std::vector<std::vector<int>> neighbors_;
  double h_ = 0.0;
  double J_ = 0.0;
};

/// Builds a Hamiltonian from a JSON model description (see README for keys).
Hamiltonian build_model(const nlohmann::json& spec);
Hamiltonian build_model_from_text(const std::string& json_text);

/// Validates and sorts a region; throws InvalidArgument on bad indices.
Region make_region(const Hamiltonian& hamiltonian, std::vector<int> vertices);
Region complement(const Hamiltonian& hamiltonian, const Region& region);

/// Per-vertex hop distance to `region` (0 inside it, kUnreachable if cut off).
std::vector<int> vertex_distances(const Hamiltonian& hamiltonian, const Region& region);

/// Minimal number of overlapping hyperedges connecting A and B.
int distance(const Hamiltonian& hamiltonian, const Region& a, const Region& b);

/// Vertices within hop distance `radius` of `region`.
Region ball(const Hamiltonian& hamiltonian, const Region& region, int radius);

/// Vertices of A touched by a hyperedge that also touches the complement of A.
Region boundary(const Hamiltonian& hamiltonian, const Region& a);

/// Smallest number of hyperedges in an overlapping chain that contains both
/// edges i and j (2 for adjacent edges).
int edge_chain_length(const Hamiltonian& hamiltonian, int i, int j);

struct Interaction {
  std::vector<int> term_indices;
  Region support;
  double norm = 0.0;  // ‖H_I‖ on the joint support
};

/// Terms whose support meets both A and B.
Interaction interaction_between(const Hamiltonian& hamiltonian, const Region& a, const Region& b);

}  // namespace gibbskit
