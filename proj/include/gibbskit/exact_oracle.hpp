#pragma once

#include <memory>
#include <string>
#include <vector>

#include "gibbskit/lattice_model.hpp"

namespace gibbskit {

using SpectralData = EigenSystem;

/// Eigendecomposition of the full Hamiltonian.
std::shared_ptr<const SpectralData> spectrum(const Hamiltonian& hamiltonian);

/// log Tr e^{-beta H} from eigenvalues only.
double exact_log_z(const Hamiltonian& hamiltonian, double beta);
double log_sum_exp(const RealVector& exponents);

struct GibbsState {
  double beta = 0.0;
  int num_vertices = 0;
  int local_dim = 2;
  std::shared_ptr<const SpectralData> spectrum;
  RealVector weights;  // e^{-beta E_l} / Z in eigenvalue order
  double log_z = 0.0;
  double energy = 0.0;           // Tr[rho H]
  std::shared_ptr<const Matrix> rho;  // empty when not requested

  Region all_vertices() const;
  /// Diagonal of rho in the computational basis.
  RealVector diagonal() const;
};

struct GibbsOptions {
  bool density_matrix = true;
};

GibbsState gibbs(const Hamiltonian& hamiltonian, double beta, GibbsOptions options = {});
GibbsState gibbs_from_spectrum(std::shared_ptr<const SpectralData> spectrum, int num_vertices, int local_dim,
                               double beta, GibbsOptions options = {});

/// Full density matrix as an operator on all sites.
DenseOperator density_operator(const GibbsState& state);

DenseOperator marginal(const GibbsState& state, const Region& a);

/// Von Neumann entropy in nats; eigenvalues below 1e-14 contribute nothing.
double entropy(const Matrix& rho);
double entropy(const DenseOperator& rho);
/// D(rho || sigma); +infinity when supp rho is not inside supp sigma.
double relative_entropy(const Matrix& rho, const Matrix& sigma);
double region_entropy(const GibbsState& state, const Region& a);
double mutual_information(const GibbsState& state, const Region& a, const Region& b);
/// I(A:C|B) = S(AB) + S(BC) - S(ABC) - S(B).
double cmi(const GibbsState& state, const Region& a, const Region& b, const Region& c);

double trace_norm_distance(const Matrix& a, const Matrix& b);

/// Tr[rho O] for a (local) operator.
double expectation(const GibbsState& state, const DenseOperator& op);
/// Free energy Tr[rho H] - S(rho)/beta of an arbitrary state on the full space.
double free_energy(const Hamiltonian& hamiltonian, double beta, const Matrix& rho);

/// |Tr[rho C D] - Tr[rho C] Tr[rho D]| for disjointly supported C, D.
double connected_correlator(const GibbsState& state, const DenseOperator& c, const DenseOperator& d);

struct MeasurementDistribution {
  std::vector<double> outcomes;       // ascending distinct eigenvalues of A
  std::vector<double> probabilities;  // matching probabilities
  double mean = 0.0;
  double variance = 0.0;

  double sigma() const;
};

/// Outcome statistics of measuring A on the Gibbs state. Eigenvalues closer
/// than 1e-9 are merged.
MeasurementDistribution measurement_distribution(const GibbsState& state, const DenseOperator& a);

/// Sum of single-site operators (e.g. the magnetization), as a full-space operator.
DenseOperator site_sum(int num_vertices, const Matrix& single_site);

struct MaxEntropyTrial {
  double energy_gap = 0.0;     // |Tr[sigma H] - Tr[rho_beta H]|
  double entropy_drop = 0.0;   // S(rho_beta) - S(sigma)
  double relative_entropy = 0.0;  // D(sigma || rho_beta)
  double mix_weight = 0.0;
  bool identity_holds = false;  // |drop - D| <= 1e-8
  bool strictly_positive = false;
};

struct MaxEntropyReport {
  std::vector<MaxEntropyTrial> trials;
  bool all_pass = false;
};

/// Builds same-energy states sigma != rho_beta and checks that the entropy
/// deficit equals D(sigma || rho_beta) > 0.
MaxEntropyReport max_entropy_check(const Hamiltonian& hamiltonian, const GibbsState& state, int trials,
                                   std::uint64_t seed);

/// Binary spectral dump: little-endian doubles N, d, dim, then the dim
/// eigenvalues, then the eigenvectors column-major as (re, im) pairs.
void write_spectrum(const std::string& path, int num_vertices, int local_dim, const SpectralData& data);
struct SpectrumFile {
  int num_vertices = 0;
  int local_dim = 0;
  SpectralData data;
};
SpectrumFile read_spectrum(const std::string& path);

struct TraceInequality {
  double lhs = 0.0;
  double rhs = 0.0;
  bool holds = false;
};

/// |log Tr e^{H1+H2} - log Tr e^{H1}| <= ‖H2‖.
TraceInequality partition_stability(const Matrix& h1, const Matrix& h2);
/// |log Tr[C e^{H1+H2}] - log Tr[C e^{H1}]| against the double integral over
/// t in [0,1], s in [-1/2,1/2] of ‖e^{-s(H1+tH2)} H2 e^{s(H1+tH2)}‖.
TraceInequality positive_observable_stability(const Matrix& h1, const Matrix& h2, const Matrix& c);

}  // namespace gibbskit
