#include "gibbskit/imaginary_time_locality.hpp"

#include <cmath>
#include <numbers>

#include <boost/math/quadrature/exp_sinh.hpp>

namespace gibbskit {

namespace {

// X <- [h, X] on the union of supports; h must be Hermitian.
DenseOperator commutator(const DenseOperator& h, const DenseOperator& x) {
  const Region u = support_union(h.support, x.support);
  Matrix xe = embed_matrix(x, u);
  Matrix right = xe;
  multiply_right_local(right, u, h);
  Matrix left = xe.adjoint();
  multiply_right_local(left, u, h);
  return {Matrix(left.adjoint()) - right, u, x.local_dim};
}

Matrix full_matrix(const Hamiltonian& ham, const DenseOperator& a) {
  const Region all = ham.all_vertices();
  require_dense(ipow(ham.local_dim(), all.size()), "full operator");
  return embed_matrix(a, all);
}

void check_operator(const Hamiltonian& ham, const DenseOperator& a) {
  if (a.local_dim != ham.local_dim()) throw InvalidArgument("operator local dimension differs from the model's");
  if (a.support.empty()) throw InvalidArgument("operator support is empty");
  if (!std::is_sorted(a.support.begin(), a.support.end())) throw InvalidArgument("operator support must be sorted");
  for (int v : a.support)
    if (v < 0 || v >= ham.num_vertices()) throw InvalidArgument("operator support outside the lattice");
  if (static_cast<std::size_t>(a.matrix.rows()) != ipow(a.local_dim, a.support.size()))
    throw InvalidArgument("operator matrix does not match its support");
}

void check_hermitian(const DenseOperator& a) {
  if (!is_hermitian(a.matrix, 1e-10)) throw InvalidArgument("operator must be Hermitian");
}

// exp(t H - c) with c = max_i t E_i, so the largest entry of the spectrum is 1.
struct ScaledExp {
  Matrix m;
  double log_scale = 0.0;
};

ScaledExp exp_scaled(const EigenSystem& es, double t) {
  const double c = t >= 0 ? t * es.values.maxCoeff() : t * es.values.minCoeff();
  Eigen::VectorXcd f(es.values.size());
  for (Eigen::Index i = 0; i < f.size(); ++i) f(i) = std::exp(t * es.values(i) - c);
  return {es.reconstruct(f), c};
}

ScaledExp exp_scaled(const EigenSystem& es, double t, double c) {
  Eigen::VectorXcd f(es.values.size());
  for (Eigen::Index i = 0; i < f.size(); ++i) f(i) = std::exp(t * es.values(i) - c);
  return {es.reconstruct(f), c};
}

double checked_exp(double x, const char* what) {
  if (x > 700.0) throw DomainError(std::string(what) + ": exponent " + std::to_string(x) + " overflows");
  return std::exp(x);
}

// The region and restricted Hamiltonian matrix used by H_l.
struct Restriction {
  Region region;
  Matrix h;
};

Restriction restrict_to_ball(const Hamiltonian& ham, const Region& support, int radius) {
  Restriction r;
  r.region = support_union(ball(ham, support, radius), support);
  require_dense(ipow(ham.local_dim(), r.region.size()), "restricted region");
  r.h = ham.sum_terms(ham.terms_inside(r.region), r.region).matrix;
  return r;
}

double normea_bound(const Hamiltonian& ham, double norm_a, double beta) {
  const double x = 2.0 * beta * ham.J() * ham.k();
  if (x >= 1.0) return std::numeric_limits<double>::infinity();
  if (beta == 0.0 || ham.J() == 0.0) return std::exp(norm_a * ham.k());
  return std::exp(-norm_a / (2.0 * beta * ham.J()) * std::log1p(-x));
}

double localized_bound(const Hamiltonian& ham, double norm_a, double beta, int l) {
  const double x = 2.0 * beta * ham.J() * ham.k();
  if (x >= 1.0) return std::numeric_limits<double>::infinity();
  if (ham.J() == 0.0) return 0.0;
  if (beta == 0.0) return 0.0;
  const double expo = norm_a / (2.0 * beta * ham.J()) + 1.0;
  return beta * ham.k() * norm_a * std::pow(x, l + 1) * std::exp(-expo * std::log1p(-x));
}

Matrix exact_transfer_matrix(const Hamiltonian& ham, const Matrix& hfull, const Matrix& afull, double beta,
                             double* recon, double* norm) {
  const EigenSystem es1 = eigh(hfull + afull);
  const EigenSystem es0 = eigh(hfull);
  const ScaledExp x = exp_scaled(es1, -beta);
  const ScaledExp y = exp_scaled(es0, beta);
  const double scale = checked_exp(x.log_scale + y.log_scale, "transfer operator");
  Matrix xy = x.m * y.m;
  if (recon) {
    const ScaledExp z = exp_scaled(es0, -beta);
    const double s2 = checked_exp(y.log_scale + z.log_scale, "transfer operator");
    *recon = op_norm(x.m - (xy * z.m) * s2) / op_norm(x.m);
  }
  if (norm) *norm = op_norm(xy) * scale;
  (void)ham;
  return xy * scale;
}

// E_A(l) on the support of C_l by RK4 with step halving.
TransferOperator localized_transfer(const Hamiltonian& ham, const DenseOperator& a, double beta, int l) {
  const double x = 2.0 * beta * ham.J() * ham.k();
  if (x >= 1.0)
    throw DomainError("localized transfer operator needs beta < 1/(2Jk) = " +
                      std::to_string(1.0 / (2.0 * ham.J() * ham.k())));
  const CommutatorTower tower = nested_commutators(ham, a, l);
  const Region s = tower.C.back().support;
  std::vector<Matrix> c;
  for (const auto& cm : tower.C) c.push_back(embed_matrix(cm, s));
  const auto dim = c[0].rows();
  auto gen = [&](double t) {
    Matrix g = Matrix::Zero(dim, dim);
    double p = 1.0;
    for (const auto& cm : c) {
      g += p * cm;
      p *= t;
    }
    return g;
  };
  auto integrate = [&](int n) {
    const double h = beta / n;
    Matrix e = Matrix::Identity(dim, dim);
    for (int j = 0; j < n; ++j) {
      const double t = j * h;
      const Matrix g0 = gen(t), g1 = gen(t + h / 2), g2 = gen(t + h);
      const Matrix k1 = -e * g0;
      const Matrix k2 = -(e + h / 2 * k1) * g1;
      const Matrix k3 = -(e + h / 2 * k2) * g1;
      const Matrix k4 = -(e + h * k3) * g2;
      e += h / 6 * (k1 + 2 * k2 + 2 * k3 + k4);
    }
    return e;
  };
  TransferOperator out;
  out.flavor = TransferFlavor::Localized;
  out.radius = l;
  int n = 4;
  Matrix prev = integrate(n);
  while (true) {
    Matrix next = integrate(2 * n);
    out.ode_delta = op_norm(next - prev);
    n *= 2;
    prev = std::move(next);
    if (out.ode_delta < 1e-9) break;
    if (n >= (1 << 14))
      throw NumericalError("E_A(l) step halving stalled at difference " + std::to_string(out.ode_delta));
  }
  out.ode_steps = n;
  out.norm = op_norm(prev);
  out.E = {std::move(prev), s, ham.local_dim()};
  out.bound = localized_bound(ham, op_norm(a.matrix), beta, l);
  return out;
}

TransferOperator restricted_transfer(const Hamiltonian& ham, const DenseOperator& a, double beta, int l) {
  if (l < 0) throw InvalidArgument("radius must be non-negative");
  const Restriction r = restrict_to_ball(ham, a.support, l);
  const Matrix ar = embed_matrix(a, r.region);
  TransferOperator out;
  out.flavor = TransferFlavor::Restricted;
  out.radius = l;
  const Matrix e = exact_transfer_matrix(ham, r.h, ar, beta, nullptr, &out.norm);
  out.E = {e, r.region, ham.local_dim()};
  return out;
}

bool full_feasible(const Hamiltonian& ham) {
  return ipow(ham.local_dim(), static_cast<std::size_t>(ham.num_vertices())) <= dense_cap();
}

}  // namespace

DenseOperator CommutatorTower::partial_sum(double beta, int M) const {
  if (M < 0 || M > order()) throw InvalidArgument("partial sum order outside the tower");
  const Region& s = C[static_cast<std::size_t>(M)].support;
  const auto dim = static_cast<Eigen::Index>(ipow(base.local_dim, s.size()));
  Matrix sum = Matrix::Zero(dim, dim);
  double p = 1.0;
  for (int m = 0; m <= M; ++m) {
    accumulate_embedded(sum, C[static_cast<std::size_t>(m)], s, p);
    p *= beta;
  }
  return {std::move(sum), s, base.local_dim};
}

CommutatorTower nested_commutators(const Hamiltonian& ham, const DenseOperator& a, int M) {
  check_operator(ham, a);
  if (M < 0) throw InvalidArgument("tower order must be non-negative");
  CommutatorTower t;
  t.base = a;
  t.C.push_back(a);
  const double na = op_norm(a.matrix);
  const double k = ham.k(), J = ham.J();
  t.norms.push_back(na);
  t.bounds.push_back(k * na);
  for (int m = 1; m <= M; ++m) {
    const DenseOperator& prev = t.C.back();
    const auto touching = ham.terms_touching(prev.support);
    Region s = prev.support;
    for (int i : touching) s = support_union(s, ham.term(i).op.support);
    require_dense(ipow(ham.local_dim(), s.size()), "nested commutator support");
    const auto dim = static_cast<Eigen::Index>(ipow(ham.local_dim(), s.size()));
    Matrix c = Matrix::Zero(dim, dim);
    for (int i : touching) accumulate_embedded(c, commutator(ham.term(i).op, prev), s, -1.0 / m);
    t.C.push_back({std::move(c), s, ham.local_dim()});
    t.norms.push_back(op_norm(t.C.back().matrix));
    t.bounds.push_back(k * na * std::pow(2.0 * J * k, m));
  }
  for (std::size_t m = 0; m < t.norms.size(); ++m)
    if (t.norms[m] > t.bounds[m] * (1 + 1e-12) + 1e-14) t.bounds_hold = false;
  return t;
}

double tower_tail_bound(const Hamiltonian& ham, double norm_a, double beta, int M) {
  const double x = 2.0 * beta * ham.J() * ham.k();
  if (x >= 1.0) return std::numeric_limits<double>::infinity();
  return ham.k() * norm_a * std::pow(x, M + 1) / (1.0 - x);
}

double chain_norm_bound(double beta, double J, double norm_a) {
  const double f = 16.0 * beta * J * std::exp(1.0 + 8.0 * beta * J);
  return norm_a * f * std::exp(f);
}

double chain_tail_bound(double beta, double J, double norm_a, int M) {
  const double g = std::expm1(240.0 * std::numbers::e * std::numbers::e * beta * J);
  if (!(M > g)) return std::numeric_limits<double>::infinity();
  return 15.0 * norm_a * std::exp(-(M + 1.0));
}

DenseOperator euclidean_evolve(const Hamiltonian& ham, const DenseOperator& a, double beta) {
  check_operator(ham, a);
  const Matrix af = full_matrix(ham, a);
  if (beta == 0.0) return {af, ham.all_vertices(), ham.local_dim()};
  const EigenSystem es = eigh(ham.full().matrix);
  const double spread = es.values.maxCoeff() - es.values.minCoeff();
  if (std::abs(beta) * spread > 700.0)
    throw DomainError("beta times the spectral width exceeds 700; e^{-beta H} A e^{beta H} overflows");
  Matrix t = es.to_eigenbasis(af);
  for (Eigen::Index j = 0; j < t.cols(); ++j)
    for (Eigen::Index i = 0; i < t.rows(); ++i) t(i, j) *= std::exp(-beta * (es.values(i) - es.values(j)));
  return {es.from_eigenbasis(t), ham.all_vertices(), ham.local_dim()};
}

TransferOperator transfer_operator(const Hamiltonian& ham, const DenseOperator& a, double beta,
                                   TransferFlavor flavor, int l) {
  check_operator(ham, a);
  check_hermitian(a);
  if (!(beta >= 0.0)) throw InvalidArgument("beta must be non-negative");
  if (flavor == TransferFlavor::Exact) {
    TransferOperator out;
    out.flavor = flavor;
    const Matrix e = exact_transfer_matrix(ham, ham.full().matrix, full_matrix(ham, a), beta,
                                           &out.reconstruction_error, &out.norm);
    out.E = {e, ham.all_vertices(), ham.local_dim()};
    out.bound = normea_bound(ham, op_norm(a.matrix), beta);
    return out;
  }
  TransferOperator out = flavor == TransferFlavor::Localized ? localized_transfer(ham, a, beta, l)
                                                             : restricted_transfer(ham, a, beta, l);
  if (full_feasible(ham)) {
    const Matrix exact =
        exact_transfer_matrix(ham, ham.full().matrix, full_matrix(ham, a), beta, nullptr, nullptr);
    out.distance_to_exact = op_norm(exact - embed_matrix(out.E, ham.all_vertices()));
  }
  return out;
}

DenseOperator trotter_transfer(const Hamiltonian& ham, const DenseOperator& a, double beta) {
  check_operator(ham, a);
  check_hermitian(a);
  const Matrix af = full_matrix(ham, a);
  const Matrix e = exact_transfer_matrix(ham, ham.full().matrix, af, beta, nullptr, nullptr);
  return {e * expm_hermitian(af, beta), ham.all_vertices(), ham.local_dim()};
}

std::vector<SweepPoint> transfer_sweep(const Hamiltonian& ham, const DenseOperator& a, double beta,
                                       TransferFlavor flavor, const std::vector<int>& radii) {
  check_operator(ham, a);
  check_hermitian(a);
  if (flavor == TransferFlavor::Exact) throw InvalidArgument("sweep needs an approximate flavor");
  const Matrix exact = exact_transfer_matrix(ham, ham.full().matrix, full_matrix(ham, a), beta, nullptr, nullptr);
  std::vector<SweepPoint> out;
  for (int l : radii) {
    const TransferOperator t = flavor == TransferFlavor::Localized ? localized_transfer(ham, a, beta, l)
                                                                   : restricted_transfer(ham, a, beta, l);
    out.push_back({static_cast<double>(l), op_norm(exact - embed_matrix(t.E, ham.all_vertices())), t.bound});
  }
  return out;
}

double qbp_kernel(double beta, double omega) {
  const double x = beta * omega / 2.0;
  if (std::abs(x) < 1e-6) return 1.0 - x * x / 3.0;
  return std::tanh(x) / x;
}

Matrix qbp_filter(const EigenSystem& es, const Matrix& a, double beta) {
  Matrix t = es.to_eigenbasis(a);
  for (Eigen::Index j = 0; j < t.cols(); ++j)
    for (Eigen::Index i = 0; i < t.rows(); ++i) t(i, j) *= qbp_kernel(beta, es.values(i) - es.values(j));
  return es.from_eigenbasis(t);
}

Matrix qbp_filter(const Matrix& h, const Matrix& a, double beta) {
  if (!is_hermitian(h, 1e-10)) throw InvalidArgument("H(s) must be Hermitian");
  if (h.rows() != a.rows() || a.rows() != a.cols()) throw InvalidArgument("operator dimensions differ");
  return qbp_filter(eigh(h), a, beta);
}

double qbp_weight_function(double beta, double t) {
  if (!(beta > 0.0)) throw InvalidArgument("beta must be positive");
  if (t == 0.0) return std::numeric_limits<double>::infinity();
  const double x = std::numbers::pi * std::abs(t) / beta;
  return 2.0 / (beta * std::numbers::pi) * std::log1p(2.0 / std::expm1(x));
}

double qbp_weight_tail(double beta, double a) {
  if (!(beta > 0.0)) throw InvalidArgument("beta must be positive");
  if (!(a > beta / std::numbers::pi)) throw InvalidArgument("tail bound needs a > beta/pi");
  return 4.0 / (std::numbers::pi * std::numbers::pi * std::expm1(std::numbers::pi * a / beta));
}

double qbp_weight_integral(double beta) {
  boost::math::quadrature::exp_sinh<double> integrator;
  auto f = [beta](double t) { return t > 0.0 ? qbp_weight_function(beta, t) : 0.0; };
  return 2.0 * integrator.integrate(f, 0.0, std::numeric_limits<double>::infinity(), 1e-13);
}

namespace {

struct QbpRun {
  Matrix o;
  int substeps = 0;
  double delta = 0.0;
};

// Midpoint product of exp(-(beta/2) Phi ds), later s on the left.
Matrix qbp_product(const Matrix& h, const Matrix& a, double beta, int n) {
  Matrix o = Matrix::Identity(h.rows(), h.cols());
  for (int j = 0; j < n; ++j) {
    const double s = (j + 0.5) / n;
    const EigenSystem es = eigh(h + s * a);
    Matrix phi = qbp_filter(es, a, beta);
    phi = (0.5 * (phi + phi.adjoint())).eval();
    o = expm_hermitian(phi, -beta / (2.0 * n)) * o;
  }
  return o;
}

QbpRun qbp_integrate(const Matrix& h, const Matrix& a, double beta, const QbpOptions& opt) {
  if (opt.substeps < 1 || opt.max_substeps < 2 * opt.substeps) throw InvalidArgument("invalid substep budget");
  int n = opt.substeps;
  Matrix coarse = qbp_product(h, a, beta, n);
  while (true) {
    Matrix fine = qbp_product(h, a, beta, 2 * n);
    Matrix rich = (4.0 * fine - coarse) / 3.0;
    const double delta = op_norm(rich - fine);
    if (delta <= opt.tolerance) return {std::move(rich), 2 * n, delta};
    if (4 * n > opt.max_substeps)
      throw NumericalError("QBP quadrature reached only " + std::to_string(delta) + " within " +
                           std::to_string(2 * n) + " substeps");
    n *= 2;
    coarse = std::move(fine);
  }
}

}  // namespace

BeliefPropagationOperator qbp_operator(const Hamiltonian& ham, const DenseOperator& a, double beta, int radius,
                                       const QbpOptions& options) {
  check_operator(ham, a);
  check_hermitian(a);
  if (!(beta >= 0.0)) throw InvalidArgument("beta must be non-negative");
  BeliefPropagationOperator out;
  out.radius = radius < 0 ? -1 : radius;
  out.beta = beta;
  Region region;
  Matrix h;
  if (radius < 0) {
    region = ham.all_vertices();
    h = ham.full().matrix;
  } else {
    Restriction r = restrict_to_ball(ham, a.support, radius);
    region = std::move(r.region);
    h = std::move(r.h);
  }
  const Matrix ar = embed_matrix(a, region);
  QbpRun run = qbp_integrate(h, ar, beta, options);
  out.substeps = run.substeps;
  out.quadrature_error = run.delta;
  out.norm = op_norm(run.o);
  out.norm_bound = std::exp(beta * op_norm(a.matrix) / 2.0);

  if (radius < 0) {
    const EigenSystem es1 = eigh(h + ar);
    const double c = -beta * es1.values.minCoeff();
    const ScaledExp lhs = exp_scaled(es1, -beta, c);
    const ScaledExp base = exp_scaled(eigh(h), -beta, c);
    out.reconstruction_error = op_norm(lhs.m - run.o * base.m * run.o.adjoint()) / op_norm(lhs.m);
  } else if (options.measure_distance && full_feasible(ham)) {
    const Matrix hf = ham.full().matrix;
    const QbpRun exact = qbp_integrate(hf, full_matrix(ham, a), beta, options);
    out.distance_to_exact = op_norm(exact.o - embed_matrix({run.o, region, ham.local_dim()}, ham.all_vertices()));
  }
  out.O = {std::move(run.o), std::move(region), ham.local_dim()};
  return out;
}

std::vector<SweepPoint> qbp_sweep(const Hamiltonian& ham, const DenseOperator& a, double beta,
                                  const std::vector<int>& radii, const QbpOptions& options) {
  check_operator(ham, a);
  check_hermitian(a);
  const QbpRun exact = qbp_integrate(ham.full().matrix, full_matrix(ham, a), beta, options);
  std::vector<SweepPoint> out;
  for (int m : radii) {
    if (m < 0) throw InvalidArgument("radius must be non-negative");
    const Restriction r = restrict_to_ball(ham, a.support, m);
    const QbpRun loc = qbp_integrate(r.h, embed_matrix(a, r.region), beta, options);
    const double d =
        op_norm(exact.o - embed_matrix({loc.o, r.region, ham.local_dim()}, ham.all_vertices()));
    out.push_back({static_cast<double>(m), d, exact.delta + loc.delta});
  }
  return out;
}

LiebRobinsonReport lieb_robinson_check(const Hamiltonian& ham, const DenseOperator& a, double t_max, int m_max,
                                       int t_points, int lattice_dimension) {
  check_operator(ham, a);
  check_hermitian(a);
  if (t_points < 2 || m_max < 0 || !(t_max >= 0.0)) throw InvalidArgument("invalid Lieb-Robinson grid");
  const Region all = ham.all_vertices();
  const Matrix af = full_matrix(ham, a);
  const EigenSystem es = eigh(ham.full().matrix);
  const Matrix at0 = es.to_eigenbasis(af);

  auto evolve = [](const EigenSystem& e, const Matrix& tilde, double t) {
    Matrix m = tilde;
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      for (Eigen::Index i = 0; i < m.rows(); ++i)
        m(i, j) *= std::exp(cplx(0.0, -t * (e.values(i) - e.values(j))));
    return e.from_eigenbasis(m);
  };

  LiebRobinsonReport rep;
  std::vector<Matrix> full_t;
  std::vector<double> ts;
  for (int j = 0; j < t_points; ++j) {
    ts.push_back(t_max * j / (t_points - 1));
    full_t.push_back(evolve(es, at0, ts.back()));
  }
  for (int m = 0; m <= m_max; ++m) {
    const Restriction r = restrict_to_ball(ham, a.support, m);
    const bool whole = r.region.size() == all.size() && ham.terms_inside(r.region).size() ==
                                                            static_cast<std::size_t>(ham.num_terms());
    const EigenSystem er = eigh(r.h);
    const Matrix ar = er.to_eigenbasis(embed_matrix(a, r.region));
    for (std::size_t j = 0; j < ts.size(); ++j) {
      double err = 0.0;
      if (!whole && ts[j] > 0.0) {
        const Matrix loc = embed_matrix({evolve(er, ar, ts[j]), r.region, ham.local_dim()}, all);
        Matrix diff = full_t[j] - loc;
        diff = (0.5 * (diff + diff.adjoint())).eval();
        err = op_norm(diff);
      }
      rep.points.push_back({ts[j], m, err});
    }
  }

  std::vector<const LiebRobinsonPoint*> use;
  for (const auto& p : rep.points)
    if (p.error > 1e-12 && p.t > 0.0 && (lattice_dimension == 1 || p.m > 0)) use.push_back(&p);
  if (use.size() < 3) throw NumericalError("Lieb-Robinson fit is degenerate: fewer than 3 norms above 1e-12");
  Eigen::MatrixXd X(static_cast<Eigen::Index>(use.size()), 3);
  Eigen::VectorXd y(static_cast<Eigen::Index>(use.size()));
  for (std::size_t i = 0; i < use.size(); ++i) {
    const auto& p = *use[i];
    const auto r = static_cast<Eigen::Index>(i);
    X(r, 0) = 1.0;
    X(r, 1) = p.t;
    X(r, 2) = -static_cast<double>(p.m);
    y(r) = std::log(p.error) - (lattice_dimension - 1) * (p.m > 0 ? std::log(static_cast<double>(p.m)) : 0.0);
  }
  const Eigen::VectorXd coef = X.colPivHouseholderQr().solve(y);
  rep.b = std::exp(coef(0));
  rep.c_prime = coef(2);
  rep.v = coef(2) != 0.0 ? coef(1) / coef(2) : kNaN;
  rep.rms_residual = std::sqrt((X * coef - y).squaredNorm() / static_cast<double>(use.size()));
  return rep;
}

}  // namespace gibbskit
