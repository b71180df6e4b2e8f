#include "gibbskit/exact_oracle.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>

#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace gibbskit {

namespace {

constexpr double kEntropyClamp = 1e-14;
constexpr double kStateTol = 1e-8;

void check_beta(double beta) {
  if (!(beta >= 0.0) || !std::isfinite(beta)) throw InvalidArgument("beta must be a finite number >= 0");
}

// Eigenvalues of a density matrix after validating trace and positivity.
RealVector density_eigenvalues(const Matrix& rho) {
  if (rho.rows() != rho.cols()) throw InvalidArgument("density matrix must be square");
  if (!is_hermitian(rho, 1e-10)) throw InvalidArgument("density matrix is not Hermitian");
  const RealVector w = eigvalsh(0.5 * (rho + rho.adjoint()));
  if (std::abs(w.sum() - 1.0) > kStateTol) throw InvalidArgument("density matrix trace differs from 1");
  if (w.size() > 0 && w.minCoeff() < -kStateTol) throw InvalidArgument("density matrix is not positive semidefinite");
  return w;
}

double entropy_of_weights(const RealVector& w) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < w.size(); ++i)
    if (w(i) > kEntropyClamp) s -= w(i) * std::log(w(i));
  return s;
}

}  // namespace

double log_sum_exp(const RealVector& x) {
  if (x.size() == 0) return -std::numeric_limits<double>::infinity();
  const double m = x.maxCoeff();
  return m + std::log((x.array() - m).exp().sum());
}

std::shared_ptr<const SpectralData> spectrum(const Hamiltonian& hamiltonian) {
  const auto h = hamiltonian.full();
  return std::make_shared<const SpectralData>(eigh(h.matrix));
}

double exact_log_z(const Hamiltonian& hamiltonian, double beta) {
  check_beta(beta);
  const RealVector e = eigvalsh(hamiltonian.full().matrix);
  return log_sum_exp(-beta * e);
}

Region GibbsState::all_vertices() const {
  Region r(static_cast<std::size_t>(num_vertices));
  for (int v = 0; v < num_vertices; ++v) r[static_cast<std::size_t>(v)] = v;
  return r;
}

RealVector GibbsState::diagonal() const {
  if (rho) return rho->diagonal().real();
  return spectrum->diagonal_of(weights);
}

GibbsState gibbs_from_spectrum(std::shared_ptr<const SpectralData> data, int num_vertices, int local_dim,
                               double beta, GibbsOptions options) {
  check_beta(beta);
  GibbsState s;
  s.beta = beta;
  s.num_vertices = num_vertices;
  s.local_dim = local_dim;
  s.spectrum = std::move(data);
  const RealVector& e = s.spectrum->values;
  const RealVector exponents = -beta * e;
  s.log_z = log_sum_exp(exponents);
  s.weights = (exponents.array() - s.log_z).exp().matrix();
  s.weights /= s.weights.sum();
  s.energy = s.weights.dot(e);
  if (options.density_matrix) s.rho = std::make_shared<const Matrix>(s.spectrum->reconstruct(s.weights.cast<cplx>()));
  return s;
}

GibbsState gibbs(const Hamiltonian& hamiltonian, double beta, GibbsOptions options) {
  check_beta(beta);
  return gibbs_from_spectrum(spectrum(hamiltonian), hamiltonian.num_vertices(), hamiltonian.local_dim(), beta,
                             options);
}

DenseOperator density_operator(const GibbsState& state) {
  Matrix m = state.rho ? *state.rho : state.spectrum->reconstruct(state.weights.cast<cplx>());
  return {std::move(m), state.all_vertices(), state.local_dim};
}

DenseOperator marginal(const GibbsState& state, const Region& a) {
  if (a.empty()) throw InvalidArgument("marginal: region is empty");
  if (state.rho) return partial_trace(DenseOperator{*state.rho, state.all_vertices(), state.local_dim}, a);
  return partial_trace(density_operator(state), a);
}

double entropy(const Matrix& rho) { return entropy_of_weights(density_eigenvalues(rho)); }

double entropy(const DenseOperator& rho) { return entropy(rho.matrix); }

double relative_entropy(const Matrix& rho, const Matrix& sigma) {
  if (rho.rows() != sigma.rows()) throw InvalidArgument("relative_entropy: shape mismatch");
  const RealVector wr = density_eigenvalues(rho);
  density_eigenvalues(sigma);
  const auto es = eigh(0.5 * (sigma + sigma.adjoint()));
  const RealVector overlap = es.to_eigenbasis(rho).diagonal().real();
  double cross = 0.0;
  for (Eigen::Index j = 0; j < es.values.size(); ++j) {
    if (overlap(j) <= kEntropyClamp) continue;
    if (es.values(j) <= kEntropyClamp) return std::numeric_limits<double>::infinity();
    cross += overlap(j) * std::log(es.values(j));
  }
  return std::max(0.0, -entropy_of_weights(wr) - cross);
}

double region_entropy(const GibbsState& state, const Region& a) {
  if (a.empty()) return 0.0;
  return entropy(marginal(state, a));
}

double mutual_information(const GibbsState& state, const Region& a, const Region& b) {
  if (!support_intersection(a, b).empty()) throw InvalidArgument("mutual_information: regions overlap");
  return region_entropy(state, a) + region_entropy(state, b) - region_entropy(state, support_union(a, b));
}

double cmi(const GibbsState& state, const Region& a, const Region& b, const Region& c) {
  if (!support_intersection(a, b).empty() || !support_intersection(a, c).empty() ||
      !support_intersection(b, c).empty())
    throw InvalidArgument("cmi: regions overlap");
  const auto ab = support_union(a, b), bc = support_union(b, c);
  return region_entropy(state, ab) + region_entropy(state, bc) - region_entropy(state, support_union(ab, c)) -
         region_entropy(state, b);
}

double trace_norm_distance(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw InvalidArgument("trace_norm_distance: shape mismatch");
  return trace_norm(a - b);
}

double expectation(const GibbsState& state, const DenseOperator& op) {
  const auto m = marginal(state, op.support);
  return (m.matrix * op.matrix).trace().real();
}

double free_energy(const Hamiltonian& hamiltonian, double beta, const Matrix& rho) {
  if (!(beta > 0.0)) throw InvalidArgument("free_energy: beta must be positive");
  const auto h = hamiltonian.full();
  return (rho * h.matrix).trace().real() - entropy(rho) / beta;
}

double connected_correlator(const GibbsState& state, const DenseOperator& c, const DenseOperator& d) {
  if (!support_intersection(c.support, d.support).empty())
    throw InvalidArgument("connected_correlator: supports overlap");
  const auto joint = support_union(c.support, d.support);
  const auto m = marginal(state, joint);
  const Matrix cd = embed_matrix(c, joint) * embed_matrix(d, joint);
  const double both = (m.matrix * cd).trace().real();
  const double ec = (partial_trace(m, c.support).matrix * c.matrix).trace().real();
  const double ed = (partial_trace(m, d.support).matrix * d.matrix).trace().real();
  return std::abs(both - ec * ed);
}

double MeasurementDistribution::sigma() const { return std::sqrt(std::max(0.0, variance)); }

MeasurementDistribution measurement_distribution(const GibbsState& state, const DenseOperator& a) {
  if (!is_hermitian(a.matrix, 1e-10)) throw InvalidArgument("measurement_distribution: observable is not Hermitian");
  const auto all = state.all_vertices();
  const auto dim = static_cast<Eigen::Index>(ipow(state.local_dim, all.size()));
  std::vector<std::pair<double, double>> raw;  // (eigenvalue, probability)
  raw.reserve(static_cast<std::size_t>(dim));
  const bool local_diag = is_diagonal(a.matrix);
  if (local_diag) {
    RealVector values = RealVector::Zero(dim);
    {
      // diagonal of a ⊗ I without forming the matrix
      const auto split = split_support(a.support, all, state.local_dim);
      for (std::size_t i = 0; i < split.inner_offset.size(); ++i)
        for (std::size_t r : split.outer_offset)
          values(static_cast<Eigen::Index>(split.inner_offset[i] + r)) =
              a.matrix(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)).real();
    }
    const RealVector p = state.diagonal();
    for (Eigen::Index i = 0; i < dim; ++i) raw.emplace_back(values(i), p(i));
  } else {
    const Matrix full = embed_matrix(a, all);
    const auto ea = eigh(full);
    // probability of eigenvector j: sum_l w_l |<E_l|a_j>|^2
    Matrix overlap;
    if (state.spectrum->real() && ea.real())
      overlap = (state.spectrum->real_vectors.transpose() * ea.real_vectors).cast<cplx>();
    else
      overlap = state.spectrum->vectors().adjoint() * ea.vectors();
    const RealVector p = overlap.cwiseAbs2().transpose() * state.weights;
    for (Eigen::Index j = 0; j < dim; ++j) raw.emplace_back(ea.values(j), p(j));
  }
  std::sort(raw.begin(), raw.end());
  MeasurementDistribution out;
  std::size_t i = 0;
  while (i < raw.size()) {
    std::size_t j = i;
    double value_sum = 0.0, prob = 0.0;
    while (j < raw.size() && raw[j].first - raw[j == i ? i : j - 1].first <= 1e-9) {
      value_sum += raw[j].first;
      prob += raw[j].second;
      ++j;
    }
    out.outcomes.push_back(value_sum / static_cast<double>(j - i));
    out.probabilities.push_back(std::max(0.0, prob));
    i = j;
  }
  const double total = std::accumulate(out.probabilities.begin(), out.probabilities.end(), 0.0);
  for (auto& p : out.probabilities) p /= total;
  for (std::size_t k = 0; k < out.outcomes.size(); ++k) out.mean += out.probabilities[k] * out.outcomes[k];
  for (std::size_t k = 0; k < out.outcomes.size(); ++k)
    out.variance += out.probabilities[k] * (out.outcomes[k] - out.mean) * (out.outcomes[k] - out.mean);
  return out;
}

DenseOperator site_sum(int num_vertices, const Matrix& single_site) {
  const int d = static_cast<int>(single_site.rows());
  Region all(static_cast<std::size_t>(num_vertices));
  for (int v = 0; v < num_vertices; ++v) all[static_cast<std::size_t>(v)] = v;
  const auto dim = static_cast<Eigen::Index>(ipow(d, all.size()));
  require_dense(static_cast<std::uint64_t>(dim), "site sum");
  DenseOperator out{Matrix::Zero(dim, dim), all, d};
  for (int v = 0; v < num_vertices; ++v) accumulate_embedded(out.matrix, DenseOperator{single_site, {v}, d}, all);
  return out;
}

MaxEntropyReport max_entropy_check(const Hamiltonian& hamiltonian, const GibbsState& state, int trials,
                                   std::uint64_t seed) {
  if (trials < 1) throw InvalidArgument("max_entropy_check: trials must be >= 1");
  (void)hamiltonian;
  const RealVector& e = state.spectrum->values;
  const RealVector& w = state.weights;
  const double target = state.energy;
  std::vector<Eigen::Index> below, above;
  for (Eigen::Index l = 0; l < e.size(); ++l) {
    if (e(l) < target - 1e-12) below.push_back(l);
    if (e(l) > target + 1e-12) above.push_back(l);
  }
  if (below.empty() || above.empty())
    throw NumericalError("max_entropy_check: spectrum does not straddle the thermal energy");

  const double s_beta = entropy_of_weights(w);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> mix(0.05, 0.95);
  MaxEntropyReport report;
  report.all_pass = true;
  for (int t = 0; t < trials; ++t) {
    const Eigen::Index lo = below[std::uniform_int_distribution<std::size_t>(0, below.size() - 1)(rng)];
    const Eigen::Index hi = above[std::uniform_int_distribution<std::size_t>(0, above.size() - 1)(rng)];
    const double wmix = mix(rng);
    // sigma is diagonal in the energy eigenbasis; bisect the hi fraction x.
    auto sigma_of = [&](double x) {
      RealVector s = (1.0 - wmix) * w;
      s(lo) += wmix * (1.0 - x);
      s(hi) += wmix * x;
      return s;
    };
    double xl = 0.0, xr = 1.0;
    for (int it = 0; it < 200 && xr - xl > 1e-16; ++it) {
      const double xm = 0.5 * (xl + xr);
      if (sigma_of(xm).dot(e) < target) xl = xm;
      else xr = xm;
    }
    const RealVector sigma = sigma_of(0.5 * (xl + xr));
    MaxEntropyTrial trial;
    trial.mix_weight = wmix;
    trial.energy_gap = std::abs(sigma.dot(e) - target);
    if (trial.energy_gap > 1e-9 * std::max(1.0, std::abs(target)))
      throw NumericalError("max_entropy_check: bisection did not reach the target energy");
    trial.entropy_drop = s_beta - entropy_of_weights(sigma);
    double d = 0.0;
    for (Eigen::Index l = 0; l < sigma.size(); ++l)
      if (sigma(l) > kEntropyClamp) d += sigma(l) * (std::log(sigma(l)) - std::log(w(l)));
    trial.relative_entropy = d;
    trial.identity_holds = std::abs(trial.entropy_drop - trial.relative_entropy) <= 1e-8;
    trial.strictly_positive = trial.relative_entropy > 0.0;
    report.all_pass = report.all_pass && trial.identity_holds && trial.strictly_positive;
    report.trials.push_back(trial);
  }
  return report;
}

void write_spectrum(const std::string& path, int num_vertices, int local_dim, const SpectralData& data) {
  static_assert(std::endian::native == std::endian::little, "spectral dump assumes a little-endian host");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidArgument("cannot open '" + path + "' for writing");
  const double header[3] = {static_cast<double>(num_vertices), static_cast<double>(local_dim),
                            static_cast<double>(data.dim())};
  out.write(reinterpret_cast<const char*>(header), sizeof(header));
  out.write(reinterpret_cast<const char*>(data.values.data()),
            static_cast<std::streamsize>(sizeof(double) * static_cast<std::size_t>(data.dim())));
  const Matrix v = data.vectors();
  out.write(reinterpret_cast<const char*>(v.data()),
            static_cast<std::streamsize>(sizeof(cplx) * static_cast<std::size_t>(v.size())));
  if (!out) throw InvalidArgument("failed writing '" + path + "'");
}

SpectrumFile read_spectrum(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidArgument("cannot open '" + path + "'");
  double header[3];
  in.read(reinterpret_cast<char*>(header), sizeof(header));
  SpectrumFile f;
  f.num_vertices = static_cast<int>(header[0]);
  f.local_dim = static_cast<int>(header[1]);
  const auto dim = static_cast<Eigen::Index>(header[2]);
  if (!in || dim <= 0 || static_cast<std::size_t>(dim) != ipow(f.local_dim, static_cast<std::size_t>(f.num_vertices)))
    throw InvalidArgument("'" + path + "' is not a spectral dump");
  f.data.values.resize(dim);
  in.read(reinterpret_cast<char*>(f.data.values.data()), static_cast<std::streamsize>(sizeof(double) * dim));
  f.data.complex_vectors.resize(dim, dim);
  in.read(reinterpret_cast<char*>(f.data.complex_vectors.data()),
          static_cast<std::streamsize>(sizeof(cplx) * dim * dim));
  if (!in) throw InvalidArgument("'" + path + "' is truncated");
  if (is_real(f.data.complex_vectors)) {
    f.data.real_vectors = f.data.complex_vectors.real();
    f.data.complex_vectors.resize(0, 0);
  }
  return f;
}

TraceInequality partition_stability(const Matrix& h1, const Matrix& h2) {
  TraceInequality r;
  r.lhs = std::abs(log_sum_exp(eigvalsh(h1 + h2)) - log_sum_exp(eigvalsh(h1)));
  r.rhs = op_norm(h2);
  r.holds = r.lhs <= r.rhs + 1e-12;
  return r;
}

namespace {

double log_trace_c_exp(const Matrix& c, const Matrix& k) {
  const auto es = eigh(k);
  const double top = es.values.maxCoeff();
  const RealVector diag = es.to_eigenbasis(c).diagonal().real();
  return top + std::log(diag.dot((es.values.array() - top).exp().matrix()));
}

}  // namespace

TraceInequality positive_observable_stability(const Matrix& h1, const Matrix& h2, const Matrix& c) {
  TraceInequality r;
  r.lhs = std::abs(log_trace_c_exp(c, h1 + h2) - log_trace_c_exp(c, h1));
  using boost::math::quadrature::gauss_kronrod;
  auto outer = [&](double t) {
    const auto es = eigh(h1 + t * h2);
    const Matrix m = es.to_eigenbasis(h2);
    // ‖e^{-sK} H2 e^{sK}‖ is even in s for Hermitian K and H2.
    auto inner = [&](double s) {
      Matrix scaled = m;
      for (Eigen::Index j = 0; j < m.cols(); ++j)
        for (Eigen::Index i = 0; i < m.rows(); ++i) scaled(i, j) *= std::exp(-s * (es.values(i) - es.values(j)));
      return op_norm(scaled);
    };
    return 2.0 * gauss_kronrod<double, 15>::integrate(inner, 0.0, 0.5, 8, 1e-10);
  };
  r.rhs = gauss_kronrod<double, 15>::integrate(outer, 0.0, 1.0, 8, 1e-10);
  r.holds = r.lhs <= r.rhs + 1e-12;
  return r;
}

}  // namespace gibbskit
