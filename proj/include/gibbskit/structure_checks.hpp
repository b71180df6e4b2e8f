#pragma once

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "gibbskit/exact_oracle.hpp"
#include "gibbskit/imaginary_time_locality.hpp"

namespace gibbskit {

struct BipartitionReport {
  Region A, B, C;
  std::string quantity;
  double measured = 0.0;
  double bound = 0.0;
  bool pass = false;  // measured <= bound + 1e-9
};

BipartitionReport make_report(Region a, Region b, Region c, std::string quantity, double measured, double bound);

struct AreaLawReport {
  BipartitionReport report;   // I(A:B) against 2 beta ‖H_I‖
  double interaction_norm = 0.0;
  int boundary_size = 0;      // |∂A| + |∂B|
  double boundary_bound = 0.0;  // 2 beta 2 k h |∂_AB|
  bool boundary_pass = false;
  /// beta (Tr[H rho_A ⊗ rho_B] - Tr[H rho_AB]); upper-bounds I(A:B).
  double energy_gap = 0.0;
  bool energy_gap_pass = false;
};

/// A and B must partition the vertex set.
AreaLawReport area_law_check(const GibbsState& state, const Hamiltonian& hamiltonian, const Region& a,
                             const Region& b);

using PairFamily = std::function<std::pair<DenseOperator, DenseOperator>(int distance)>;

/// Z_origin and Z_{origin + d} (or another single-site Pauli).
PairFamily chain_pair_family(int origin, char pauli_label = 'Z');

struct CorrelationPoint {
  int distance = 0;
  double value = 0.0;  // |connected correlator|
};

struct CorrelationLength {
  bool defined = false;
  double xi = kNaN;
  double K = kNaN;      // prefactor of e^{-d / xi}
  double slope = kNaN;  // of log |C(d)| against d
  int points_used = 0;
  std::vector<CorrelationPoint> points;
  std::vector<std::string> warnings;
};

CorrelationLength correlation_length(const GibbsState& state, const Hamiltonian& hamiltonian,
                                     const PairFamily& family, const std::vector<int>& distances);

struct Tripartition {
  Region A, B, C;
};

/// True when every path from A to C passes through B.
bool shields(const Hamiltonian& hamiltonian, const Tripartition& t);

/// A = [0, a), B = [a, a + b), C = [a + b, N) for each b.
std::vector<Tripartition> chain_tripartitions(int num_vertices, int a, const std::vector<int>& b_sizes);

struct CmiRow {
  Tripartition regions;
  int b_size = 0;
  double cmi = 0.0;
};

struct CmiDecayReport {
  std::vector<CmiRow> rows;
  double slope = kNaN;       // log CMI against |B|
  double sqrt_slope = kNaN;  // log CMI against sqrt |B|
  bool strictly_decreasing = false;
};

CmiDecayReport cmi_decay(const GibbsState& state, const Hamiltonian& hamiltonian,
                         const std::vector<Tripartition>& family);

struct IndistinguishabilityReport {
  Region A, B, C;
  double distance = 0.0;    // ‖Tr_BC rho - Tr_B rho0_AB‖_1
  double log_ratio = 0.0;   // log Z - log Z_AB - log Z_C
  double log_bound = 0.0;   // beta ‖H_BC‖
  bool ratio_pass = false;  // |log_ratio| <= log_bound + 1e-9
};

/// A, B, C must partition the vertex set; C may be empty.
IndistinguishabilityReport local_indistinguishability(const Hamiltonian& hamiltonian, double beta, const Region& a,
                                                      const Region& b, const Region& c);

struct IndistinguishabilitySweep {
  std::vector<IndistinguishabilityReport> rows;
  double slope = kNaN;  // of log distance against |B|
  bool decreasing = false;
};

IndistinguishabilitySweep local_indistinguishability_sweep(const Hamiltonian& hamiltonian, double beta, int a,
                                                           const std::vector<int>& b_sizes);

struct BoundaryApproximant {
  int l = 0;
  Region sites;  // sites of A within distance l of ∂A
  double residual = 0.0;  // ‖Phi_A - Phi_A^l‖
};

struct MeanForceDecomposition {
  Region A;
  Region boundary;         // ∂A
  DenseOperator h_tilde;   // Tr e^{-beta H~} = Z
  DenseOperator phi;       // H~_A - H_A
  double phi_norm = 0.0;
  double phi_centered_norm = 0.0;  // min_c ‖Phi - c‖
  double reconstruction_error = 0.0;  // ‖e^{-beta H~}/Tr - rho_A‖_1
  std::vector<BoundaryApproximant> approximants;
};

MeanForceDecomposition mean_force(const GibbsState& state, const Hamiltonian& hamiltonian, const Region& a,
                                  const std::vector<int>& l_list);
MeanForceDecomposition mean_force(const Hamiltonian& hamiltonian, double beta, const Region& a,
                                  const std::vector<int>& l_list);

/// Tr_A[X] / d^{|A \ keep|} ⊗ 1 restricted to `keep`.
DenseOperator project_onto(const DenseOperator& x, const Region& keep);

struct EffectiveRow {
  int l = 0;
  Region bath;    // B_l
  Region region;  // S ∪ B_l ∪ supp O
  double estimate = 0.0;
  double relative_error = 0.0;
  double quadrature_error = 0.0;
};

struct EffectivePartitionReport {
  Region S;
  Region bath;
  double log_exact = 0.0;  // log Z - log Z_S - log Z_B
  double exact = 0.0;
  std::vector<EffectiveRow> rows;
};

EffectivePartitionReport effective_partition_ratio(const Hamiltonian& hamiltonian, double beta, const Region& s,
                                                   const std::vector<int>& l_list, const QbpOptions& options = {});

struct CommutingReport {
  double max_commutator = 0.0;
  std::vector<double> exchange_residuals;  // per term, relative
  double max_exchange_residual = 0.0;
  int triples_checked = 0;
  double max_cmi = 0.0;
  std::vector<double> mean_force_norms;
  std::vector<double> mean_force_bounds;
  bool mean_force_pass = false;
  double factorize_error = kNaN;  // chains only
  bool all_pass = false;
};

CommutingReport commuting_suite(const Hamiltonian& hamiltonian, double beta);

}  // namespace gibbskit
