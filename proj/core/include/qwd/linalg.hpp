#pragma once

#include <complex>
#include <vector>

#include <Eigen/Dense>

namespace qwd {

using cplx = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;

constexpr double kMatrixTol = 1e-10;
constexpr cplx kI{0.0, 1.0};

namespace la {

Matrix identity(Eigen::Index n);
Matrix pauli(char which);  // 'I', 'X', 'Y', 'Z'
Matrix ket_bra(const Vector& ket, const Vector& bra);
Matrix projector(const Vector& ket);
Vector basis(Eigen::Index n, Eigen::Index i);
Matrix kron(const Matrix& a, const Matrix& b);
Matrix kron(const std::vector<Matrix>& factors);

bool is_square(const Matrix& m);
bool is_hermitian(const Matrix& m, double tol = kMatrixTol);
bool is_unitary(const Matrix& m, double tol = kMatrixTol);
bool is_psd(const Matrix& m, double tol = kMatrixTol);
bool is_density(const Matrix& m, double tol = kMatrixTol);
double max_abs(const Matrix& m);

// Eigen-decomposition of a Hermitian matrix (ascending eigenvalues).
struct HermitianEigen {
  RealVector values;
  Matrix vectors;
};
HermitianEigen eigh(const Matrix& h);

// exp(-i t H) for Hermitian H.
Matrix expm_herm(const Matrix& h, double t);
Matrix expm_herm(const HermitianEigen& eig, double t);

double spectral_norm(const Matrix& m);
double trace_norm_hermitian(const Matrix& m);
double real_trace(const Matrix& m);

// Partial trace over subsystem `traced` of a tensor product with the given
// factor dimensions (first factor most significant).
Matrix partial_trace(const Matrix& rho, const std::vector<int>& dims,
                     const std::vector<int>& traced);

// Unitary that swaps the two tensor factors of C^{da} (x) C^{db} when da == db.
Matrix swap_operator(int d);

}  // namespace la
}  // namespace qwd
