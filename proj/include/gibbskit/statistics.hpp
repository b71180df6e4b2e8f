#pragma once

#include <functional>
#include <vector>

#include "gibbskit/exact_oracle.hpp"

namespace gibbskit {

/// A = sum_j A_j with local terms A_j.
struct ExtensiveObservable {
  std::vector<DenseOperator> terms;

  /// Sum of the term norms.
  double a_bar() const;
  /// The whole sum on sites 0..n-1.
  DenseOperator assemble(int num_vertices, int local_dim = 2) const;
};

/// sum_j P_j for a single-qubit Pauli label.
ExtensiveObservable magnetization(int num_vertices, char pauli_label = 'Z');

/// +-{0.01..1} / sqrt(Abar): `points` magnitudes, log-spaced, each with both signs.
std::vector<double> default_tau_grid(double a_bar, int points = 20);

struct CharacteristicFit {
  double c_fit = 0.0;
  double tau_at_max = 0.0;
  std::vector<double> tau;
  std::vector<double> log_mgf;  // log <e^{tau(A - <A>)}>
  double a_bar = 0.0;
};

CharacteristicFit characteristic_constant(const MeasurementDistribution& dist, double a_bar,
                                          const std::vector<double>& tau_grid);
CharacteristicFit characteristic_constant(const GibbsState& state, const ExtensiveObservable& a,
                                          const std::vector<double>& tau_grid = {});

struct TailPoint {
  double delta = 0.0;
  double tail = 0.0;   // P(|x - <A>| > delta)
  double bound = 0.0;  // 2 exp(-delta^2 / (4 c Abar))
  bool pass = false;
};

struct ConcentrationReport {
  double c = 0.0;
  double a_bar = 0.0;
  std::vector<TailPoint> points;
  bool all_pass = false;
};

ConcentrationReport concentration_check(const MeasurementDistribution& dist, double a_bar, double c,
                                        const std::vector<double>& delta_grid);

struct MomentRow {
  int m = 0;
  double moment = 0.0;         // <(A - <A>)^m>
  double bound = 0.0;          // (4 c Abar)^{m/2} (m/2)!
  double tail_integral = 0.0;  // m int_0^inf x^{m-1} P(|x - <A>| >= x) dx
  double relative_gap = 0.0;   // |moment - tail_integral| / moment
  bool pass = false;
};

struct MomentReport {
  std::vector<MomentRow> rows;
  bool all_pass = false;
};

/// Even m from 0 to m_max (even, at most 12).
MomentReport moment_bound_check(const MeasurementDistribution& dist, double a_bar, double c, int m_max);

struct BerryEsseen {
  double delta = 0.0;  // max_x |F(x) - G(x)|
  double sigma = 0.0;
  double mean = 0.0;
  double at = 0.0;     // x where the maximum occurs
};

BerryEsseen berry_esseen(const MeasurementDistribution& dist);

struct MicrocanonicalWindow {
  double E = 0.0;
  double Delta = 0.0;
  std::vector<Eigen::Index> members;  // eigenvalue indices in (E - Delta, E]
  std::size_t count() const { return members.size(); }
};

MicrocanonicalWindow microcanonical_window(const SpectralData& spectrum, double E, double Delta);

struct MicrocanonicalAverage {
  MicrocanonicalWindow window;
  double value = 0.0;
  /// Largest spread of <E_j|A|E_j> inside one degenerate block of the window.
  double degeneracy_spread = 0.0;
};

/// Average of <E_j|A|E_j> over the window; A given on all sites.
MicrocanonicalAverage microcanonical_average(const SpectralData& spectrum, const Matrix& a_full, double E,
                                             double Delta);

/// argmax_E D(E, Delta) e^{-beta E} over windows whose upper edge is an eigenvalue.
double select_E0(const SpectralData& spectrum, double beta, double Delta);

using ModelFamily = std::function<Hamiltonian(int)>;
using ObservableFamily = std::function<ExtensiveObservable(int)>;

struct EnsembleRow {
  int N = 0;
  double E0 = 0.0;
  double microcanonical = 0.0;
  double canonical = 0.0;
  double ratio = 0.0;  // |micro - canonical| / N
  std::size_t window_count = 0;
};

struct EnsembleSweep {
  std::vector<EnsembleRow> rows;
  double delta_star = 0.0;  // min(Delta, 1/beta)
  bool last_below_first = false;
};

EnsembleSweep ensemble_equivalence_sweep(const ModelFamily& models, const ObservableFamily& observables, double beta,
                                         double Delta, const std::vector<int>& sizes);

struct BerryEsseenRow {
  int N = 0;
  double delta = 0.0;
  double sigma = 0.0;
  double scaled = 0.0;  // delta sqrt(N)
};

struct BerryEsseenSweep {
  std::vector<BerryEsseenRow> rows;
  double constant = 0.0;  // max delta sqrt(N)
};

BerryEsseenSweep berry_esseen_sweep(const ModelFamily& models, const ObservableFamily& observables, double beta,
                                    const std::vector<int>& sizes);

}  // namespace gibbskit
