#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "gibbskit/lattice_model.hpp"

namespace gibbskit {

/// Multiset of hyperedges: (edge index, multiplicity) pairs sorted by edge.
struct Cluster {
  std::vector<std::pair<int, int>> items;

  int size() const;
  int distinct() const { return static_cast<int>(items.size()); }
  int multiplicity(int edge) const;
  bool contains(int edge) const { return multiplicity(edge) > 0; }
  bool operator<(const Cluster& o) const;
  bool operator==(const Cluster& o) const { return items == o.items; }
};

/// Builds a cluster from a list of edge indices with repetitions.
Cluster make_cluster(std::vector<int> edges);

bool is_connected(const Hamiltonian& hamiltonian, const Cluster& cluster);

/// Splits a cluster into its connected parts.
std::vector<Cluster> connected_components(const Hamiltonian& hamiltonian, const Cluster& cluster);

/// Union of the supports of the cluster's edges.
Region cluster_support(const Hamiltonian& hamiltonian, const Cluster& cluster);

struct EnumerationOptions {
  std::uint64_t max_clusters = 20'000'000;
  /// Optional per-edge multiplicity caps (empty = unlimited).
  std::vector<int> multiplicity_cap;
};

/// All connected clusters of size 1..m_max, sorted by size and then by the
/// lexicographic order of their (edge, multiplicity) lists.
std::vector<Cluster> enumerate_connected_clusters(const Hamiltonian& hamiltonian, int m_max,
                                                  const EnumerationOptions& options = {});

/// Cluster counts per size (index 0 unused) from an enumeration.
std::vector<std::uint64_t> cluster_counts(const std::vector<Cluster>& clusters, int m_max);

/// Coefficient of prod lambda_i^{mu_i} in log Tr exp(-beta sum_i lambda_i h_i),
/// i.e. the cluster derivative divided by prod mu_i!. Computed on the
/// cluster's support from every ordered product of its terms, without using
/// connectivity, so disconnected clusters are evaluated like any other.
double cluster_derivative(const Hamiltonian& hamiltonian, double beta, const Cluster& cluster, int order_cap = 12);

/// Radius (2 e^2 h d (d + 1))^{-1}; d is clamped below at 1.
double beta_star(const Hamiltonian& hamiltonian);

struct SeriesOptions {
  /// Evaluate past beta* (the reported bound is then +infinity).
  bool allow_beyond_radius = false;
  std::uint64_t memory_budget_bytes = 1'500'000'000;
  std::uint64_t max_clusters = 20'000'000;
};

struct SeriesResult {
  double beta = 0.0;
  double beta_star = 0.0;
  int M = 0;
  std::vector<double> K;              // K_0..K_M, with K_0 = N log d
  std::vector<double> partial_sums;   // sum_{m <= M'} beta^m K_m / m! for M' = 0..M
  std::vector<double> bounds;         // C1 N r^{M'+1} / (1 - r) for M' = 0..M
  std::vector<double> kmsmall_ratio;  // |K_m| / (N m! beta*^{-m})
  std::vector<std::uint64_t> cluster_counts;  // connected clusters of each size
  double log_z = 0.0;
  double bound = 0.0;
};

/// Truncated high-temperature series for log Z with C1 = 1.
/// N r^{M+1} / (1 - r) with r = beta / beta*; +inf once r >= 1.
double series_tail_bound(double num_vertices, double ratio, int M);

SeriesResult log_partition_series(const Hamiltonian& hamiltonian, double beta, int M, const SeriesOptions& options = {});

/// Every connected cluster up to size M with its contribution at beta = 1
/// (contributions scale as beta^{|W|}). Uses the cached fast path.
std::vector<std::pair<Cluster, double>> cluster_contributions(const Hamiltonian& hamiltonian, int M,
                                                              const SeriesOptions& options = {},
                                                              const EnumerationOptions& enumeration = {});

struct LocalSeriesResult {
  double value = 0.0;
  double bound = 0.0;
  double beta_star = 0.0;
  int M = 0;
};

/// <h_i>_beta from clusters containing edge i: -(1/beta) sum_W mu_i c_W(beta).
LocalSeriesResult local_expectation_series(const Hamiltonian& hamiltonian, double beta, int term_index, int M,
                                           const SeriesOptions& options = {});
/// <O>_beta for an auxiliary operator attached as an extra edge with weight 0.
LocalSeriesResult local_expectation_series(const Hamiltonian& hamiltonian, double beta, const DenseOperator& observable,
                                           int M, const SeriesOptions& options = {});

struct CorrelatorOrder {
  int order = 0;  // smallest connected cluster containing both edges
  bool verified = false;  // no connected cluster below `order` holds both, one at `order` does
};

CorrelatorOrder correlator_order_bound(const Hamiltonian& hamiltonian, int i, int j);

}  // namespace gibbskit
