#include "gibbskit/statistics.hpp"

#include <algorithm>
#include <cmath>

#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace gibbskit {

double ExtensiveObservable::a_bar() const {
  double s = 0.0;
  for (const auto& t : terms) s += op_norm(t.matrix);
  return s;
}

DenseOperator ExtensiveObservable::assemble(int num_vertices, int local_dim) const {
  Region all;
  for (int v = 0; v < num_vertices; ++v) all.push_back(v);
  const auto dim = static_cast<Eigen::Index>(ipow(local_dim, all.size()));
  require_dense(static_cast<std::uint64_t>(dim), "extensive observable");
  Matrix m = Matrix::Zero(dim, dim);
  for (const auto& t : terms) {
    if (t.local_dim != local_dim) throw InvalidArgument("observable term has a different local dimension");
    if (!is_subset(t.support, all)) throw InvalidArgument("observable term outside the lattice");
    accumulate_embedded(m, t, all, 1.0);
  }
  return {std::move(m), std::move(all), local_dim};
}

ExtensiveObservable magnetization(int num_vertices, char pauli_label) {
  if (num_vertices < 1) throw InvalidArgument("magnetization needs at least one site");
  ExtensiveObservable a;
  for (int v = 0; v < num_vertices; ++v) a.terms.push_back({pauli(pauli_label), {v}, 2});
  return a;
}

std::vector<double> default_tau_grid(double a_bar, int points) {
  if (!(a_bar > 0.0)) throw InvalidArgument("Abar must be positive");
  if (points < 2) throw InvalidArgument("tau grid needs at least two magnitudes");
  std::vector<double> grid;
  const double scale = 1.0 / std::sqrt(a_bar);
  for (int i = 0; i < points; ++i) {
    const double t = scale * std::pow(10.0, -2.0 + 2.0 * i / (points - 1));
    grid.push_back(-t);
    grid.push_back(t);
  }
  std::sort(grid.begin(), grid.end());
  return grid;
}

namespace {

double log_mgf(const MeasurementDistribution& d, double tau) {
  double top = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < d.outcomes.size(); ++k)
    if (d.probabilities[k] > 0.0) top = std::max(top, tau * (d.outcomes[k] - d.mean));
  double s = 0.0;
  for (std::size_t k = 0; k < d.outcomes.size(); ++k)
    if (d.probabilities[k] > 0.0) s += d.probabilities[k] * std::exp(tau * (d.outcomes[k] - d.mean) - top);
  return top + std::log(s);
}

void check_distribution(const MeasurementDistribution& d) {
  if (d.outcomes.empty() || d.outcomes.size() != d.probabilities.size())
    throw InvalidArgument("measurement distribution is empty or inconsistent");
}

}  // namespace

CharacteristicFit characteristic_constant(const MeasurementDistribution& dist, double a_bar,
                                          const std::vector<double>& tau_grid) {
  check_distribution(dist);
  if (!(a_bar > 0.0)) throw InvalidArgument("Abar must be positive");
  const std::vector<double> grid = tau_grid.empty() ? default_tau_grid(a_bar) : tau_grid;
  for (double t : grid) {
    if (t == 0.0) throw InvalidArgument("tau grid must exclude 0");
    const bool mirrored = std::any_of(grid.begin(), grid.end(), [t](double u) {
      return std::abs(u + t) <= 1e-12 * std::abs(t);
    });
    if (!mirrored) throw InvalidArgument("tau grid must be symmetric around 0");
    if (std::abs(t) * a_bar > 700.0) throw DomainError("tau Abar overflows the moment generating function");
  }
  CharacteristicFit fit;
  fit.a_bar = a_bar;
  fit.tau = grid;
  fit.c_fit = -std::numeric_limits<double>::infinity();
  for (double t : grid) {
    const double l = log_mgf(dist, t);
    fit.log_mgf.push_back(l);
    const double ratio = l / (t * t * a_bar);
    if (ratio > fit.c_fit) {
      fit.c_fit = ratio;
      fit.tau_at_max = t;
    }
  }
  return fit;
}

CharacteristicFit characteristic_constant(const GibbsState& state, const ExtensiveObservable& a,
                                          const std::vector<double>& tau_grid) {
  const auto dist = measurement_distribution(state, a.assemble(state.num_vertices, state.local_dim));
  return characteristic_constant(dist, a.a_bar(), tau_grid);
}

ConcentrationReport concentration_check(const MeasurementDistribution& dist, double a_bar, double c,
                                        const std::vector<double>& delta_grid) {
  check_distribution(dist);
  if (!(a_bar > 0.0) || !(c >= 0.0)) throw InvalidArgument("Abar must be positive and c non-negative");
  ConcentrationReport r;
  r.c = c;
  r.a_bar = a_bar;
  r.all_pass = true;
  for (double delta : delta_grid) {
    if (!(delta >= 0.0)) throw InvalidArgument("delta must be non-negative");
    TailPoint p;
    p.delta = delta;
    for (std::size_t k = 0; k < dist.outcomes.size(); ++k)
      if (std::abs(dist.outcomes[k] - dist.mean) > delta) p.tail += dist.probabilities[k];
    if (delta == 0.0)
      p.bound = 2.0;
    else
      p.bound = c > 0.0 ? 2.0 * std::exp(-delta * delta / (4.0 * c * a_bar)) : 0.0;
    p.pass = p.tail <= p.bound + 1e-12;
    r.all_pass = r.all_pass && p.pass;
    r.points.push_back(p);
  }
  return r;
}

MomentReport moment_bound_check(const MeasurementDistribution& dist, double a_bar, double c, int m_max) {
  check_distribution(dist);
  if (m_max < 0 || m_max % 2 != 0 || m_max > 12) throw InvalidArgument("m_max must be even and at most 12");
  // distinct distances from the mean with the probability at each
  std::vector<std::pair<double, double>> dist_abs;
  for (std::size_t k = 0; k < dist.outcomes.size(); ++k)
    dist_abs.emplace_back(std::abs(dist.outcomes[k] - dist.mean), dist.probabilities[k]);
  std::sort(dist_abs.begin(), dist_abs.end());

  MomentReport r;
  r.all_pass = true;
  for (int m = 0; m <= m_max; m += 2) {
    MomentRow row;
    row.m = m;
    for (std::size_t k = 0; k < dist.outcomes.size(); ++k)
      row.moment += dist.probabilities[k] * std::pow(dist.outcomes[k] - dist.mean, m);
    row.bound = std::pow(4.0 * c * a_bar, m / 2.0) * std::tgamma(m / 2.0 + 1.0);
    if (m == 0) {
      row.tail_integral = 1.0;
    } else {
      // P(|x - a| >= x) is constant between consecutive distances
      double lo = 0.0, remaining = 1.0;
      std::size_t k = 0;
      while (k < dist_abs.size()) {
        const double hi = dist_abs[k].first;
        if (hi > lo) {
          auto f = [m](double x) { return m * std::pow(x, m - 1); };
          row.tail_integral +=
              remaining * boost::math::quadrature::gauss_kronrod<double, 15>::integrate(f, lo, hi, 0, 0.0);
          lo = hi;
        }
        while (k < dist_abs.size() && dist_abs[k].first == hi) remaining -= dist_abs[k++].second;
      }
    }
    row.relative_gap = row.moment > 0.0 ? std::abs(row.moment - row.tail_integral) / row.moment : 0.0;
    row.pass = row.moment <= row.bound * (1.0 + 1e-12);
    r.all_pass = r.all_pass && row.pass;
    r.rows.push_back(row);
  }
  return r;
}

BerryEsseen berry_esseen(const MeasurementDistribution& dist) {
  check_distribution(dist);
  BerryEsseen be;
  be.mean = dist.mean;
  be.sigma = dist.sigma();
  if (!(be.sigma > 0.0)) throw InvalidArgument("sigma_A = 0: the observable is constant on this state");
  auto gauss = [&](double x) { return 0.5 * std::erfc(-(x - be.mean) / (be.sigma * std::sqrt(2.0))); };
  auto consider = [&](double gap, double x) {
    if (gap > be.delta) {
      be.delta = gap;
      be.at = x;
    }
  };
  // breakpoints: F jumps at each outcome, G is monotone in between
  double cdf = 0.0;
  for (std::size_t k = 0; k < dist.outcomes.size(); ++k) {
    const double x = dist.outcomes[k];
    const double g = gauss(x);
    consider(std::abs(cdf - g), x);
    cdf += dist.probabilities[k];
    consider(std::abs(cdf - g), x);
  }
  // grid scan as a cross-check
  const double lo = dist.outcomes.front() - 4.0 * be.sigma, hi = dist.outcomes.back() + 4.0 * be.sigma;
  std::size_t k = 0;
  cdf = 0.0;
  constexpr int kGrid = 2000;
  for (int i = 0; i <= kGrid; ++i) {
    const double x = lo + (hi - lo) * i / kGrid;
    while (k < dist.outcomes.size() && dist.outcomes[k] <= x) cdf += dist.probabilities[k++];
    consider(std::abs(cdf - gauss(x)), x);
  }
  return be;
}

MicrocanonicalWindow microcanonical_window(const SpectralData& es, double E, double Delta) {
  if (!(Delta > 0.0)) throw InvalidArgument("window width must be positive");
  MicrocanonicalWindow w;
  w.E = E;
  w.Delta = Delta;
  for (Eigen::Index i = 0; i < es.dim(); ++i)
    if (es.values(i) > E - Delta && es.values(i) <= E) w.members.push_back(i);
  return w;
}

MicrocanonicalAverage microcanonical_average(const SpectralData& es, const Matrix& a_full, double E, double Delta) {
  if (a_full.rows() != es.dim() || a_full.cols() != es.dim())
    throw InvalidArgument("observable dimension differs from the spectrum");
  MicrocanonicalAverage out;
  out.window = microcanonical_window(es, E, Delta);
  if (out.window.members.empty()) throw InvalidArgument("microcanonical window contains no eigenvalue");
  const auto count = static_cast<Eigen::Index>(out.window.count());
  Matrix v(es.dim(), count);
  for (Eigen::Index j = 0; j < count; ++j) {
    const Eigen::Index idx = out.window.members[static_cast<std::size_t>(j)];
    v.col(j) = es.real() ? Eigen::VectorXcd(es.real_vectors.col(idx).cast<cplx>())
                         : Eigen::VectorXcd(es.complex_vectors.col(idx));
  }
  RealVector diag(count);
  if (is_diagonal(a_full)) {
    const RealVector a = a_full.diagonal().real();
    for (Eigen::Index j = 0; j < count; ++j) diag(j) = v.col(j).cwiseAbs2().dot(a);
  } else {
    const Matrix av = a_full * v;
    for (Eigen::Index j = 0; j < count; ++j) diag(j) = v.col(j).dot(av.col(j)).real();
  }
  out.value = diag.mean();
  Eigen::Index start = 0;
  for (Eigen::Index j = 1; j <= count; ++j) {
    const bool split =
        j == count || std::abs(es.values(out.window.members[static_cast<std::size_t>(j)]) -
                               es.values(out.window.members[static_cast<std::size_t>(j - 1)])) > 1e-9;
    if (!split) continue;
    const auto block = diag.segment(start, j - start);
    out.degeneracy_spread = std::max(out.degeneracy_spread, block.maxCoeff() - block.minCoeff());
    start = j;
  }
  return out;
}

double select_E0(const SpectralData& es, double beta, double Delta) {
  if (!(Delta > 0.0)) throw InvalidArgument("window width must be positive");
  if (!(beta >= 0.0)) throw InvalidArgument("beta must be non-negative");
  const RealVector& e = es.values;
  const Eigen::Index n = e.size();
  if (n == 0) throw InvalidArgument("empty spectrum");
  double best = -std::numeric_limits<double>::infinity(), e0 = e(0);
  Eigen::Index lower = 0;
  for (Eigen::Index j = 0; j < n; ++j) {
    const double top = e(j);
    Eigen::Index upper = j;
    while (upper + 1 < n && e(upper + 1) <= top) ++upper;
    while (e(lower) <= top - Delta) ++lower;
    const double score = std::log(static_cast<double>(upper - lower + 1)) - beta * top;
    if (score > best) {
      best = score;
      e0 = top;
    }
  }
  return e0;
}

EnsembleSweep ensemble_equivalence_sweep(const ModelFamily& models, const ObservableFamily& observables, double beta,
                                         double Delta, const std::vector<int>& sizes) {
  if (sizes.empty()) throw InvalidArgument("empty size list");
  EnsembleSweep out;
  out.delta_star = beta > 0.0 ? std::min(Delta, 1.0 / beta) : Delta;
  for (int n : sizes) {
    const Hamiltonian h = models(n);
    const GibbsState state = gibbs(h, beta, {false});
    const DenseOperator a = observables(n).assemble(n, h.local_dim());
    EnsembleRow row;
    row.N = n;
    row.canonical = measurement_distribution(state, a).mean;
    row.E0 = select_E0(*state.spectrum, beta, Delta);
    const auto micro = microcanonical_average(*state.spectrum, a.matrix, row.E0, Delta);
    row.microcanonical = micro.value;
    row.window_count = micro.window.count();
    row.ratio = std::abs(row.microcanonical - row.canonical) / n;
    out.rows.push_back(row);
  }
  out.last_below_first = out.rows.back().ratio < out.rows.front().ratio;
  return out;
}

BerryEsseenSweep berry_esseen_sweep(const ModelFamily& models, const ObservableFamily& observables, double beta,
                                    const std::vector<int>& sizes) {
  if (sizes.empty()) throw InvalidArgument("empty size list");
  BerryEsseenSweep out;
  for (int n : sizes) {
    const Hamiltonian h = models(n);
    const GibbsState state = gibbs(h, beta, {false});
    const auto be = berry_esseen(measurement_distribution(state, observables(n).assemble(n, h.local_dim())));
    const double scaled = be.delta * std::sqrt(static_cast<double>(n));
    out.rows.push_back({n, be.delta, be.sigma, scaled});
    out.constant = std::max(out.constant, scaled);
  }
  return out;
}

}  // namespace gibbskit
