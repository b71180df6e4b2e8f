#pragma once

#include <complex>
#include <functional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "gibbskit/common.hpp"

namespace gibbskit {

using cplx = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using RealVector = Eigen::VectorXd;

/// A complex matrix acting on an ordered set of lattice sites. Rows and
/// columns follow the sorted support with big-endian digit order: the first
/// support site is the most significant digit.
struct DenseOperator {
  Matrix matrix;
  std::vector<int> support;
  int local_dim = 2;

  std::size_t dim() const { return static_cast<std::size_t>(matrix.rows()); }
};

std::size_t ipow(int base, std::size_t exp);

/// Sorted union / intersection / difference of vertex lists.
std::vector<int> support_union(std::span<const int> a, std::span<const int> b);
std::vector<int> support_intersection(std::span<const int> a, std::span<const int> b);
std::vector<int> support_difference(std::span<const int> a, std::span<const int> b);
bool is_subset(std::span<const int> sub, std::span<const int> super);

/// Index bookkeeping for a sub-support S of a sorted support T. Every basis
/// index of T decomposes as inner_offset[a] + outer_offset[r] where `a`
/// indexes S and `r` indexes T \ S.
struct SupportSplit {
  std::vector<std::size_t> inner_offset;
  std::vector<std::size_t> outer_offset;
};
SupportSplit split_support(std::span<const int> inner, std::span<const int> total, int d);

DenseOperator identity_operator(std::span<const int> support, int d);

/// Embeds `op` into a superset support as op ⊗ I.
DenseOperator embed(const DenseOperator& op, std::span<const int> target_support);
Matrix embed_matrix(const DenseOperator& op, std::span<const int> target_support);
/// out += scale * (op ⊗ I) without forming the embedded matrix.
void accumulate_embedded(Matrix& out, const DenseOperator& op, std::span<const int> target_support,
                         cplx scale = 1.0);

/// Partial trace onto `keep`, which must be a subset of op.support.
DenseOperator partial_trace(const DenseOperator& op, std::span<const int> keep);

/// Operator products and sums on the union of supports.
DenseOperator multiply(const DenseOperator& a, const DenseOperator& b);
DenseOperator add(const DenseOperator& a, const DenseOperator& b, cplx scale_b = 1.0);
DenseOperator scaled(const DenseOperator& a, cplx s);
DenseOperator adjoint(const DenseOperator& a);

/// X <- X * (local ⊗ I) where X acts on `support` and local.support ⊆ support.
void multiply_right_local(Matrix& x, std::span<const int> support, const DenseOperator& local);

/// Reorders tensor legs: `matrix` is given in the leg order `order`; the
/// result is expressed in sorted order.
Matrix permute_to_sorted(const Matrix& matrix, std::span<const int> order, int d);

/// Eigendecomposition H = U diag(values) U†. Real symmetric input keeps a
/// real U so that basis changes run through real products.
struct EigenSystem {
  RealVector values;            // ascending
  Eigen::MatrixXd real_vectors;  // set when the input was real
  Matrix complex_vectors;        // set otherwise

  bool real() const { return complex_vectors.size() == 0; }
  Eigen::Index dim() const { return values.size(); }
  Matrix vectors() const;
  /// U diag(f) U†
  Matrix reconstruct(const Eigen::VectorXcd& f) const;
  /// U† A U
  Matrix to_eigenbasis(const Matrix& a) const;
  /// U A U†
  Matrix from_eigenbasis(const Matrix& a) const;
  /// Diagonal of U diag(f) U† for real f.
  RealVector diagonal_of(const RealVector& f) const;
};

/// Hermitian eigendecomposition through LAPACK (divide and conquer). Real
/// symmetric input is routed to the real solver.
EigenSystem eigh(const Matrix& h);
RealVector eigvalsh(const Matrix& h);

/// U f(E) U† for a Hermitian matrix given by its eigensystem.
Matrix spectral_function(const EigenSystem& es, const std::function<cplx(double)>& f);

/// exp(t H) for Hermitian H. `shift` is subtracted from the exponent's
/// eigenvalues: result = exp(t H - shift).
Matrix expm_hermitian(const Matrix& h, double t, double shift = 0.0);

RealVector singular_values(const Matrix& m);
double op_norm(const Matrix& m);
double trace_norm(const Matrix& m);
double max_abs(const Matrix& m);
bool is_hermitian(const Matrix& m, double tol = 1e-12);
bool is_diagonal(const Matrix& m, double tol = 1e-14);
bool is_real(const Matrix& m);

Matrix kron(const Matrix& a, const Matrix& b);
Matrix pauli(char label);
/// Tensor product of single-site Paulis, e.g. "XZ".
Matrix pauli_string(const std::string& labels);

}  // namespace gibbskit
