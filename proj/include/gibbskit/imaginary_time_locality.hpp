#pragma once

#include <limits>
#include <vector>

#include "gibbskit/lattice_model.hpp"

namespace gibbskit {

inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

/// Coefficients of A(i beta) = sum_m beta^m C_m with C_0 = A and
/// C_m = -[H, C_{m-1}] / m. Each C_m lives on its own support, which grows by
/// the terms touching the previous one.
struct CommutatorTower {
  DenseOperator base;
  std::vector<DenseOperator> C;
  std::vector<double> norms;   // ‖C_m‖
  std::vector<double> bounds;  // k ‖A‖ (2 J k)^m
  bool bounds_hold = true;

  int order() const { return static_cast<int>(C.size()) - 1; }
  /// sum_{m <= M} beta^m C_m on the support of C_M.
  DenseOperator partial_sum(double beta, int M) const;
};

CommutatorTower nested_commutators(const Hamiltonian& hamiltonian, const DenseOperator& a, int M);

/// k ‖A‖ (2 beta J k)^{M+1} / (1 - 2 beta J k); +inf when 2 beta J k >= 1.
double tower_tail_bound(const Hamiltonian& hamiltonian, double norm_a, double beta, int M);

/// 1D sharpened certificates for k = 2: f = 16 beta J e^{1 + 8 beta J},
/// ‖A(i beta)‖ <= ‖A‖ f e^f, and the tail 15 ‖A‖ e^{-(M+1)} once M > e^{240 e^2 beta J} - 1.
double chain_norm_bound(double beta, double J, double norm_a);
double chain_tail_bound(double beta, double J, double norm_a, int M);

/// e^{-beta H} A e^{beta H} on all sites.
DenseOperator euclidean_evolve(const Hamiltonian& hamiltonian, const DenseOperator& a, double beta);

enum class TransferFlavor { Exact, Localized, Restricted };

struct TransferOperator {
  DenseOperator E;
  TransferFlavor flavor = TransferFlavor::Exact;
  int radius = -1;
  double norm = 0.0;
  /// Exact: ‖e^{-beta(H+A)} - E e^{-beta H}‖ / ‖e^{-beta(H+A)}‖.
  double reconstruction_error = kNaN;
  /// Approximations: ‖E_A - E‖ when the full space is dense feasible.
  double distance_to_exact = kNaN;
  /// Exact: the closed-form norm bound; Localized: the E_A(l) error bound.
  double bound = kNaN;
  int ode_steps = 0;       // Localized only
  double ode_delta = 0.0;  // last step-halving difference
};

/// Exact E_A = e^{-beta(H+A)} e^{beta H}; Localized E_A(l) from the ODE
/// dE/dx = -E A^l(ix) with the truncated tower; Restricted
/// E_A^l = e^{-beta(H_l+A)} e^{beta H_l} with H_l the terms inside the ball
/// of radius l around supp A.
TransferOperator transfer_operator(const Hamiltonian& hamiltonian, const DenseOperator& a, double beta,
                                   TransferFlavor flavor, int l = 0);

/// e^{-beta(H+A)} e^{beta H} e^{beta A}.
DenseOperator trotter_transfer(const Hamiltonian& hamiltonian, const DenseOperator& a, double beta);

struct SweepPoint {
  double param = 0.0;
  double measured = 0.0;
  double bound = kNaN;
};

/// ‖E_A - approximation‖ for each l, computing E_A once.
std::vector<SweepPoint> transfer_sweep(const Hamiltonian& hamiltonian, const DenseOperator& a, double beta,
                                       TransferFlavor flavor, const std::vector<int>& radii);

/// tanh(beta w / 2) / (beta w / 2), equal to 1 at w = 0.
double qbp_kernel(double beta, double omega);
/// Phi(A)_{ij} = A_{ij} kernel(E_i - E_j) in the eigenbasis of H.
Matrix qbp_filter(const EigenSystem& es, const Matrix& a, double beta);
Matrix qbp_filter(const Matrix& h, const Matrix& a, double beta);

/// f(t) = (2 / (beta pi)) log((e^{pi|t|/beta} + 1) / (e^{pi|t|/beta} - 1)).
double qbp_weight_function(double beta, double t);
/// 4 / (pi^2 (e^{pi a/beta} - 1)), valid for a > beta / pi.
double qbp_weight_tail(double beta, double a);
/// Numerical integral of f over the real line.
double qbp_weight_integral(double beta);

struct QbpOptions {
  int substeps = 128;       // coarse midpoint grid; the fine grid doubles it
  int max_substeps = 2048;
  double tolerance = 1e-6;  // on ‖O_R - O_fine‖
  bool measure_distance = true;  // localized runs: also build O_A on the full space
};

struct BeliefPropagationOperator {
  DenseOperator O;
  int radius = -1;  // -1 for the exact operator
  double beta = 0.0;
  int substeps = 0;
  double quadrature_error = 0.0;  // Richardson delta
  double norm = 0.0;
  double norm_bound = 0.0;        // e^{beta ‖A‖ / 2}
  /// Exact: ‖e^{-beta(H+A)} - O e^{-beta H} O†‖ / ‖e^{-beta(H+A)}‖.
  double reconstruction_error = kNaN;
  /// Localized: ‖O_A - O_A^m‖ on the full space.
  double distance_to_exact = kNaN;
};

/// s-ordered product of exp(-(beta/2) Phi^{H(s)}(A) ds) over s in [0, 1] with
/// H(s) = H + sA (radius < 0) or its restriction to the ball of radius m.
BeliefPropagationOperator qbp_operator(const Hamiltonian& hamiltonian, const DenseOperator& a, double beta,
                                       int radius = -1, const QbpOptions& options = {});

/// ‖O_A - O_A^m‖ for each radius, computing O_A once.
std::vector<SweepPoint> qbp_sweep(const Hamiltonian& hamiltonian, const DenseOperator& a, double beta,
                                  const std::vector<int>& radii, const QbpOptions& options = {});

struct LiebRobinsonPoint {
  double t = 0.0;
  int m = 0;
  double error = 0.0;
};

struct LiebRobinsonReport {
  std::vector<LiebRobinsonPoint> points;
  /// Fit of log error = log b + (D - 1) log m + c'(v t - m) over points above 1e-12.
  double v = kNaN;
  double c_prime = kNaN;
  double b = kNaN;
  double rms_residual = kNaN;
};

/// ‖e^{-itH} A e^{itH} - e^{-itH_m} A e^{itH_m}‖ on t = t_max j / (t_points - 1), m = 0..m_max.
LiebRobinsonReport lieb_robinson_check(const Hamiltonian& hamiltonian, const DenseOperator& a, double t_max,
                                       int m_max, int t_points = 6, int lattice_dimension = 1);

}  // namespace gibbskit
