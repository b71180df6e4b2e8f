#pragma once

#include <string>
#include <vector>

#include "gibbskit/imaginary_time_locality.hpp"

namespace gibbskit {

/// Chain test: every hyperedge is a single site or a pair {j, j+1}.
bool is_chain(const Hamiltonian& hamiltonian);

/// Term indices ordered from the left: by right endpoint, then left endpoint.
std::vector<int> chain_term_order(const Hamiltonian& hamiltonian);

struct OneDRunConfig {
  Hamiltonian hamiltonian;
  double beta = 1.0;
  double epsilon = 1e-3;
  int l_star = 0;  // 0: ceil(schedule_a + schedule_b log(N / epsilon))
  double schedule_a = 2.0;
  double schedule_b = 1.0;
  QbpOptions qbp;
  bool compare_oracle = true;
};

int l_star_schedule(const OneDRunConfig& config);

struct OneDStep {
  int term = 0;
  Region window;  // sites of the local Gibbs state
  Region region;  // support of A_i = O† O
  double factor = 0.0;  // Tr[rho_window A_i]
  double o_norm = 0.0;
  double quadrature_error = 0.0;
};

struct OneDResult {
  double log_z_prime = 0.0;
  int l_star = 0;
  std::vector<OneDStep> steps;
  /// sum_i (2‖O_i‖ + delta_i) delta_i / factor_i: first-order log error from the QBP quadrature.
  double quadrature_certificate = 0.0;
  double oracle_log_z = kNaN;
  double error = kNaN;  // |log Z' - log Z| when the oracle ran
  std::vector<std::string> warnings;
};

/// log Z' = N log d + sum_i log Tr[rho_i^(2l*) A_i^l*] with A_i from the QBP
/// operator of h_i against the terms left of it, restricted to radius l*.
OneDResult logz_1d(const OneDRunConfig& config);

struct OneDSweepPoint {
  int l_star = 0;
  double log_z_prime = 0.0;
  double error = 0.0;
  double certificate = 0.0;
};

struct OneDSweep {
  std::vector<OneDSweepPoint> points;
  double oracle_log_z = 0.0;
  /// error ~ c1 e^{-c2 l*} by least squares on log error (points above 1e-13).
  double c1 = kNaN;
  double c2 = kNaN;
};

OneDSweep logz_1d_sweep(const OneDRunConfig& config, const std::vector<int>& l_values);

struct ClusterLogZ {
  double log_z = 0.0;
  int M = 0;
  double bound = 0.0;
  double beta_star = 0.0;
};

/// Smallest M whose series bound is at most epsilon, then the series at that order.
ClusterLogZ logz_cluster(const Hamiltonian& hamiltonian, double beta, double epsilon);

struct FactorizedThermal {
  std::vector<int> order;  // term added by each factor
  std::vector<DenseOperator> factors;
  int l = 0;
  /// ‖e^{-beta H} - Psi_1 ... Psi_n‖_1 / Z on the full space.
  double error = kNaN;
};

/// Psi_j^l = e^{beta H_j^l} e^{-beta (H_j^l + h_j)} with H_j^l the terms left
/// of h_j inside the ball of radius l around supp h_j.
FactorizedThermal factorize_1d_thermal(const Hamiltonian& hamiltonian, double beta, int l);

}  // namespace gibbskit
