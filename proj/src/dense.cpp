#include "gibbskit/dense.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <numeric>

#define lapack_complex_float std::complex<float>
#define lapack_complex_double std::complex<double>
#include <lapacke.h>

namespace gibbskit {

namespace {
std::atomic<std::uint64_t> g_dense_cap{0};

std::uint64_t initial_cap() {
  if (const char* env = std::getenv("GIBBSKIT_DENSE_CAP")) {
    char* end = nullptr;
    auto v = std::strtoull(env, &end, 10);
    if (end != env && v > 0) return v;
  }
  return 1ull << 14;
}
}  // namespace

std::uint64_t dense_cap() {
  std::uint64_t cap = g_dense_cap.load();
  if (cap == 0) {
    cap = initial_cap();
    g_dense_cap.store(cap);
  }
  return cap;
}

void set_dense_cap(std::uint64_t cap) { g_dense_cap.store(cap); }

void require_dense(std::uint64_t dim, const std::string& what) {
  if (dim > dense_cap()) {
    throw OverCap(what + ": dimension " + std::to_string(dim) + " exceeds dense cap " +
                  std::to_string(dense_cap()));
  }
}

const char* version_string() { return "gibbskit 0.1.0"; }

std::size_t ipow(int base, std::size_t exp) {
  std::size_t r = 1;
  for (std::size_t i = 0; i < exp; ++i) r *= static_cast<std::size_t>(base);
  return r;
}

std::vector<int> support_union(std::span<const int> a, std::span<const int> b) {
  std::vector<int> out;
  std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

std::vector<int> support_intersection(std::span<const int> a, std::span<const int> b) {
  std::vector<int> out;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

std::vector<int> support_difference(std::span<const int> a, std::span<const int> b) {
  std::vector<int> out;
  std::set_difference(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

bool is_subset(std::span<const int> sub, std::span<const int> super) {
  return std::includes(super.begin(), super.end(), sub.begin(), sub.end());
}

SupportSplit split_support(std::span<const int> inner, std::span<const int> total, int d) {
  if (!is_subset(inner, total)) throw InvalidArgument("split_support: support is not a subset");
  const std::size_t n = total.size();
  std::vector<std::size_t> stride(n);
  for (std::size_t p = 0; p < n; ++p) stride[p] = ipow(d, n - 1 - p);

  std::vector<std::size_t> inner_pos, outer_pos;
  for (std::size_t p = 0; p < n; ++p) {
    if (std::binary_search(inner.begin(), inner.end(), total[p]))
      inner_pos.push_back(p);
    else
      outer_pos.push_back(p);
  }
  auto offsets = [&](const std::vector<std::size_t>& pos) {
    const std::size_t count = ipow(d, pos.size());
    std::vector<std::size_t> off(count, 0);
    for (std::size_t idx = 0; idx < count; ++idx) {
      std::size_t rem = idx, acc = 0;
      for (std::size_t q = pos.size(); q-- > 0;) {
        acc += (rem % d) * stride[pos[q]];
        rem /= d;
      }
      off[idx] = acc;
    }
    return off;
  };
  return {offsets(inner_pos), offsets(outer_pos)};
}

DenseOperator identity_operator(std::span<const int> support, int d) {
  const auto dim = ipow(d, support.size());
  return {Matrix::Identity(dim, dim), {support.begin(), support.end()}, d};
}

Matrix embed_matrix(const DenseOperator& op, std::span<const int> target) {
  if (op.support.size() == target.size()) {
    if (!std::equal(op.support.begin(), op.support.end(), target.begin()))
      throw InvalidArgument("embed: target support does not contain operator support");
    return op.matrix;
  }
  const auto split = split_support(op.support, target, op.local_dim);
  const auto dim = ipow(op.local_dim, target.size());
  Matrix out = Matrix::Zero(dim, dim);
  const auto& in = split.inner_offset;
  for (std::size_t r : split.outer_offset) {
    for (std::size_t b = 0; b < in.size(); ++b) {
      for (std::size_t a = 0; a < in.size(); ++a) {
        out(in[a] + r, in[b] + r) = op.matrix(a, b);
      }
    }
  }
  return out;
}

void accumulate_embedded(Matrix& out, const DenseOperator& op, std::span<const int> target, cplx scale) {
  const auto split = split_support(op.support, target, op.local_dim);
  const auto& in = split.inner_offset;
  for (std::size_t b = 0; b < in.size(); ++b) {
    for (std::size_t a = 0; a < in.size(); ++a) {
      const cplx v = scale * op.matrix(a, b);
      if (v == cplx(0.0)) continue;
      for (std::size_t r : split.outer_offset) out(in[a] + r, in[b] + r) += v;
    }
  }
}

DenseOperator embed(const DenseOperator& op, std::span<const int> target) {
  return {embed_matrix(op, target), {target.begin(), target.end()}, op.local_dim};
}

DenseOperator partial_trace(const DenseOperator& op, std::span<const int> keep) {
  const auto split = split_support(keep, op.support, op.local_dim);
  const auto& in = split.inner_offset;
  Matrix out = Matrix::Zero(in.size(), in.size());
  for (std::size_t b = 0; b < in.size(); ++b) {
    for (std::size_t a = 0; a < in.size(); ++a) {
      cplx acc = 0.0;
      for (std::size_t r : split.outer_offset) acc += op.matrix(in[a] + r, in[b] + r);
      out(a, b) = acc;
    }
  }
  return {std::move(out), {keep.begin(), keep.end()}, op.local_dim};
}

DenseOperator multiply(const DenseOperator& a, const DenseOperator& b) {
  auto u = support_union(a.support, b.support);
  return {embed_matrix(a, u) * embed_matrix(b, u), u, a.local_dim};
}

DenseOperator add(const DenseOperator& a, const DenseOperator& b, cplx scale_b) {
  auto u = support_union(a.support, b.support);
  Matrix m = embed_matrix(a, u);
  m += scale_b * embed_matrix(b, u);
  return {std::move(m), u, a.local_dim};
}

DenseOperator scaled(const DenseOperator& a, cplx s) { return {s * a.matrix, a.support, a.local_dim}; }

DenseOperator adjoint(const DenseOperator& a) { return {a.matrix.adjoint(), a.support, a.local_dim}; }

void multiply_right_local(Matrix& x, std::span<const int> support, const DenseOperator& local) {
  const auto split = split_support(local.support, support, local.local_dim);
  const auto& in = split.inner_offset;
  const Eigen::Index rows = x.rows();
  const auto ld = static_cast<Eigen::Index>(in.size());
  Matrix gathered(rows, ld);
  for (std::size_t r : split.outer_offset) {
    for (Eigen::Index b = 0; b < ld; ++b) gathered.col(b) = x.col(static_cast<Eigen::Index>(in[b] + r));
    for (Eigen::Index a = 0; a < ld; ++a) {
      auto col = x.col(static_cast<Eigen::Index>(in[a] + r));
      col.setZero();
      for (Eigen::Index b = 0; b < ld; ++b) {
        const cplx c = local.matrix(b, a);
        if (c != cplx(0.0)) col += c * gathered.col(b);
      }
    }
  }
}

Matrix permute_to_sorted(const Matrix& matrix, std::span<const int> order, int d) {
  const std::size_t n = order.size();
  std::vector<std::size_t> perm(n);  // perm[p] = position in `order` of the p-th sorted site
  std::iota(perm.begin(), perm.end(), 0);
  std::sort(perm.begin(), perm.end(), [&](std::size_t a, std::size_t b) { return order[a] < order[b]; });
  const std::size_t dim = ipow(d, n);
  std::vector<std::size_t> map(dim);
  std::vector<std::size_t> digits(n);
  for (std::size_t idx = 0; idx < dim; ++idx) {
    std::size_t rem = idx;
    for (std::size_t q = n; q-- > 0;) {
      digits[q] = rem % d;
      rem /= d;
    }
    // idx enumerates sorted-order digits; find the matching index in `order`.
    std::size_t src = 0;
    std::vector<std::size_t> src_digits(n);
    for (std::size_t p = 0; p < n; ++p) src_digits[perm[p]] = digits[p];
    for (std::size_t q = 0; q < n; ++q) src = src * d + src_digits[q];
    map[idx] = src;
  }
  Matrix out(dim, dim);
  for (std::size_t j = 0; j < dim; ++j)
    for (std::size_t i = 0; i < dim; ++i) out(i, j) = matrix(map[i], map[j]);
  return out;
}

bool is_real(const Matrix& m) { return m.imag().cwiseAbs().maxCoeff() == 0.0; }

namespace {

// Some OpenBLAS builds dispatch to AVX-512 kernels that return wrong products
// under certain hypervisors. Check once against Eigen's own kernel.
void check_blas_once() {
  static const bool ok = [] {
    const int n = 256;
    Eigen::MatrixXd a(n, n), b(n, n);
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) {
        a(i, j) = std::sin(0.37 * i + 1.3 * j);
        b(i, j) = std::cos(0.11 * i - 0.7 * j);
      }
    Eigen::MatrixXd ref = Eigen::MatrixXd::Zero(n, n);
    for (int j = 0; j < n; ++j)
      for (int l = 0; l < n; ++l) ref.col(j) += b(l, j) * a.col(l);
    Eigen::MatrixXd c = a * b;
    return (c - ref).cwiseAbs().maxCoeff() < 1e-9 * n;
  }();
  if (!ok) {
    throw NumericalError(
        "BLAS self-check failed: matrix products are wrong on this CPU; "
        "set OPENBLAS_CORETYPE=Haswell (or another working kernel) and rerun");
  }
}

}  // namespace

EigenSystem eigh(const Matrix& h) {
  const lapack_int n = static_cast<lapack_int>(h.rows());
  EigenSystem es;
  es.values.resize(n);
  if (n == 0) return es;
  if (is_diagonal(h, 0.0)) {
    std::vector<Eigen::Index> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](auto a, auto b) { return h(a, a).real() < h(b, b).real(); });
    es.real_vectors = Eigen::MatrixXd::Zero(n, n);
    for (lapack_int k = 0; k < n; ++k) {
      es.values(k) = h(idx[k], idx[k]).real();
      es.real_vectors(idx[k], k) = 1.0;
    }
    return es;
  }
  check_blas_once();
  lapack_int info = 0, found = 0;
  std::vector<lapack_int> isuppz(2 * static_cast<std::size_t>(n));
  if (is_real(h)) {
    Eigen::MatrixXd a = h.real();
    es.real_vectors.resize(n, n);
    info = LAPACKE_dsyevr(LAPACK_COL_MAJOR, 'V', 'A', 'L', n, a.data(), n, 0.0, 0.0, 0, 0, 0.0, &found,
                          es.values.data(), es.real_vectors.data(), n, isuppz.data());
  } else {
    Matrix a = h;
    es.complex_vectors.resize(n, n);
    info = LAPACKE_zheevr(LAPACK_COL_MAJOR, 'V', 'A', 'L', n, a.data(), n, 0.0, 0.0, 0, 0, 0.0, &found,
                          es.values.data(), es.complex_vectors.data(), n, isuppz.data());
  }
  if (info != 0 || found != n) throw NumericalError("eigh: LAPACK returned info=" + std::to_string(info));
  return es;
}

RealVector eigvalsh(const Matrix& h) {
  const lapack_int n = static_cast<lapack_int>(h.rows());
  RealVector w(n);
  if (n == 0) return w;
  if (is_diagonal(h, 0.0)) {
    for (lapack_int k = 0; k < n; ++k) w(k) = h(k, k).real();
    std::sort(w.data(), w.data() + n);
    return w;
  }
  check_blas_once();
  lapack_int info = 0, found = 0;
  std::vector<lapack_int> isuppz(2 * static_cast<std::size_t>(n));
  if (is_real(h)) {
    Eigen::MatrixXd a = h.real();
    info = LAPACKE_dsyevr(LAPACK_COL_MAJOR, 'N', 'A', 'L', n, a.data(), n, 0.0, 0.0, 0, 0, 0.0, &found, w.data(),
                          nullptr, 1, isuppz.data());
  } else {
    Matrix a = h;
    info = LAPACKE_zheevr(LAPACK_COL_MAJOR, 'N', 'A', 'L', n, a.data(), n, 0.0, 0.0, 0, 0, 0.0, &found, w.data(),
                          nullptr, 1, isuppz.data());
  }
  if (info != 0 || found != n) throw NumericalError("eigvalsh: LAPACK returned info=" + std::to_string(info));
  return w;
}

namespace {

// Real matrix times complex matrix without promoting the real factor.
Matrix mixed_product(const Eigen::MatrixXd& r, const Matrix& c) {
  Matrix out(r.rows(), c.cols());
  out.real() = r * c.real();
  if (!is_real(c)) out.imag() = r * c.imag();
  else out.imag().setZero();
  return out;
}

Matrix mixed_product(const Matrix& c, const Eigen::MatrixXd& r) {
  Matrix out(c.rows(), r.cols());
  out.real() = c.real() * r;
  if (!is_real(c)) out.imag() = c.imag() * r;
  else out.imag().setZero();
  return out;
}

}  // namespace

Matrix EigenSystem::vectors() const { return real() ? Matrix(real_vectors.cast<cplx>()) : complex_vectors; }

Matrix EigenSystem::reconstruct(const Eigen::VectorXcd& f) const {
  if (real()) {
    const bool real_f = f.imag().cwiseAbs().maxCoeff() == 0.0;
    Matrix out(dim(), dim());
    out.real() = real_vectors * f.real().asDiagonal() * real_vectors.transpose();
    if (real_f) out.imag().setZero();
    else out.imag() = real_vectors * f.imag().asDiagonal() * real_vectors.transpose();
    return out;
  }
  return complex_vectors * f.asDiagonal() * complex_vectors.adjoint();
}

Matrix EigenSystem::to_eigenbasis(const Matrix& a) const {
  if (real()) return mixed_product(Eigen::MatrixXd(real_vectors.transpose()), mixed_product(a, real_vectors));
  return complex_vectors.adjoint() * a * complex_vectors;
}

Matrix EigenSystem::from_eigenbasis(const Matrix& a) const {
  if (real()) return mixed_product(real_vectors, mixed_product(a, Eigen::MatrixXd(real_vectors.transpose())));
  return complex_vectors * a * complex_vectors.adjoint();
}

RealVector EigenSystem::diagonal_of(const RealVector& f) const {
  if (real()) return real_vectors.cwiseAbs2() * f;
  return complex_vectors.cwiseAbs2() * f;
}

Matrix spectral_function(const EigenSystem& es, const std::function<cplx(double)>& f) {
  Eigen::VectorXcd fv(es.values.size());
  for (Eigen::Index i = 0; i < es.values.size(); ++i) fv(i) = f(es.values(i));
  return es.reconstruct(fv);
}

Matrix expm_hermitian(const Matrix& h, double t, double shift) {
  const auto es = eigh(h);
  return spectral_function(es, [&](double e) { return cplx(std::exp(t * e - shift)); });
}

RealVector singular_values(const Matrix& m) {
  if (is_hermitian(m, 1e-13)) return eigvalsh(m).cwiseAbs();
  if (is_real(m)) {
    Eigen::BDCSVD<Eigen::MatrixXd> svd(m.real());
    return svd.singularValues();
  }
  Eigen::BDCSVD<Matrix> svd(m);
  return svd.singularValues();
}

double op_norm(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  if (m.rows() < 64 || is_hermitian(m, 1e-13)) return singular_values(m).maxCoeff();
  // largest eigenvalue of the Gram matrix; much cheaper than a full SVD
  double top = 0.0;
  if (is_real(m)) {
    const Eigen::MatrixXd r = m.real();
    const Eigen::MatrixXd g = r.transpose() * r;
    top = eigvalsh(g.cast<cplx>()).maxCoeff();
  } else {
    top = eigvalsh(m.adjoint() * m).maxCoeff();
  }
  return std::sqrt(std::max(top, 0.0));
}

double trace_norm(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  return singular_values(m).sum();
}

double max_abs(const Matrix& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

bool is_hermitian(const Matrix& m, double tol) {
  if (m.rows() != m.cols()) return false;
  return (m - m.adjoint()).cwiseAbs().maxCoeff() <= tol;
}

bool is_diagonal(const Matrix& m, double tol) {
  for (Eigen::Index j = 0; j < m.cols(); ++j)
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      if (i != j && std::abs(m(i, j)) > tol) return false;
  return true;
}

Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

Matrix pauli(char label) {
  Matrix m(2, 2);
  switch (label) {
    case 'I': m << 1, 0, 0, 1; break;
    case 'X': m << 0, 1, 1, 0; break;
    case 'Y': m << 0, cplx(0, -1), cplx(0, 1), 0; break;
    case 'Z': m << 1, 0, 0, -1; break;
    default: throw InvalidArgument(std::string("unknown Pauli label '") + label + "'");
  }
  return m;
}

Matrix pauli_string(const std::string& labels) {
  Matrix out = Matrix::Identity(1, 1);
  for (char c : labels) out = kron(out, pauli(c));
  return out;
}

}  // namespace gibbskit
