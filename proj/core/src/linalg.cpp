#include "qwd/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace qwd::la {

Matrix identity(Eigen::Index n) { return Matrix::Identity(n, n); }

Matrix pauli(char which) {
  Matrix m = Matrix::Zero(2, 2);
  switch (which) {
    case 'I': m << 1, 0, 0, 1; break;
    case 'X': m << 0, 1, 1, 0; break;
    case 'Y': m << 0, -kI, kI, 0; break;
    case 'Z': m << 1, 0, 0, -1; break;
    default: throw std::invalid_argument("unknown Pauli label");
  }
  return m;
}

Matrix ket_bra(const Vector& ket, const Vector& bra) {
  return ket * bra.adjoint();
}

Matrix projector(const Vector& ket) { return ket_bra(ket, ket); }

Vector basis(Eigen::Index n, Eigen::Index i) {
  Vector v = Vector::Zero(n);
  v(i) = 1.0;
  return v;
}

Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

Matrix kron(const std::vector<Matrix>& factors) {
  Matrix out = Matrix::Identity(1, 1);
  for (const auto& f : factors) out = kron(out, f);
  return out;
}

bool is_square(const Matrix& m) { return m.rows() == m.cols() && m.rows() > 0; }

double max_abs(const Matrix& m) {
  return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

bool is_hermitian(const Matrix& m, double tol) {
  return is_square(m) && max_abs(m - m.adjoint()) <= tol;
}

bool is_unitary(const Matrix& m, double tol) {
  return is_square(m) && max_abs(m.adjoint() * m - identity(m.rows())) <= tol;
}

bool is_psd(const Matrix& m, double tol) {
  if (!is_hermitian(m, tol)) return false;
  return eigh(m).values.minCoeff() >= -tol;
}

bool is_density(const Matrix& m, double tol) {
  return is_psd(m, tol) && std::abs(m.trace() - cplx(1.0)) <= tol;
}

HermitianEigen eigh(const Matrix& h) {
  Matrix sym = 0.5 * (h + h.adjoint());
  Eigen::SelfAdjointEigenSolver<Matrix> solver(sym);
  return {solver.eigenvalues(), solver.eigenvectors()};
}

Matrix expm_herm(const HermitianEigen& eig, double t) {
  Vector phases(eig.values.size());
  for (Eigen::Index i = 0; i < eig.values.size(); ++i)
    phases(i) = std::exp(-kI * (t * eig.values(i)));
  return eig.vectors * phases.asDiagonal() * eig.vectors.adjoint();
}

Matrix expm_herm(const Matrix& h, double t) { return expm_herm(eigh(h), t); }

double spectral_norm(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  if (is_hermitian(m, 1e-12)) return eigh(m).values.cwiseAbs().maxCoeff();
  Eigen::JacobiSVD<Matrix> svd(m);
  return svd.singularValues()(0);
}

double trace_norm_hermitian(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  return eigh(m).values.cwiseAbs().sum();
}

double real_trace(const Matrix& m) { return m.trace().real(); }

Matrix partial_trace(const Matrix& rho, const std::vector<int>& dims,
                     const std::vector<int>& traced) {
  const int n = static_cast<int>(dims.size());
  std::vector<bool> drop(n, false);
  for (int t : traced) drop.at(t) = true;
  std::vector<long> strides(n, 1);
  for (int i = n - 2; i >= 0; --i) strides[i] = strides[i + 1] * dims[i + 1];
  long kept_dim = 1, traced_dim = 1;
  for (int i = 0; i < n; ++i) (drop[i] ? traced_dim : kept_dim) *= dims[i];
  // Map (kept index, traced index) -> full index.
  auto full_index = [&](long kept, long tr) {
    long idx = 0;
    for (int i = n - 1; i >= 0; --i) {
      long digit;
      if (drop[i]) {
        digit = tr % dims[i];
        tr /= dims[i];
      } else {
        digit = kept % dims[i];
        kept /= dims[i];
      }
      idx += digit * strides[i];
    }
    return idx;
  };
  std::vector<long> table(static_cast<size_t>(kept_dim * traced_dim));
  for (long k = 0; k < kept_dim; ++k)
    for (long t = 0; t < traced_dim; ++t)
      table[k * traced_dim + t] = full_index(k, t);
  Matrix out = Matrix::Zero(kept_dim, kept_dim);
  for (long a = 0; a < kept_dim; ++a)
    for (long b = 0; b < kept_dim; ++b) {
      cplx acc = 0;
      for (long t = 0; t < traced_dim; ++t)
        acc += rho(table[a * traced_dim + t], table[b * traced_dim + t]);
      out(a, b) = acc;
    }
  return out;
}

Matrix swap_operator(int d) {
  Matrix s = Matrix::Zero(d * d, d * d);
  for (int a = 0; a < d; ++a)
    for (int b = 0; b < d; ++b) s(b * d + a, a * d + b) = 1.0;
  return s;
}

}  // namespace qwd::la
