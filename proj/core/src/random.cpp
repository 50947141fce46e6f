#include "qwd/random.hpp"

#include <cmath>

namespace qwd::rnd {

Matrix ginibre(int rows, int cols, Rng& rng) {
  Matrix g(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) g(i, j) = cplx(rng.normal(), rng.normal()) / std::sqrt(2.0);
  return g;
}

Matrix haar_unitary(int d, Rng& rng) {
  Eigen::HouseholderQR<Matrix> qr(ginibre(d, d, rng));
  Matrix q = qr.householderQ() * Matrix::Identity(d, d);
  Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int i = 0; i < d; ++i) {
    const cplx diag = r(i, i);
    const double mag = std::abs(diag);
    q.col(i) *= mag > 0 ? diag / mag : cplx(1.0);
  }
  return q;
}

Vector haar_state(int d, Rng& rng) {
  Vector v = ginibre(d, 1, rng).col(0);
  return v / v.norm();
}

Matrix random_density(int d, Rng& rng, int rank) {
  Matrix g = ginibre(d, rank > 0 ? rank : d, rng);
  Matrix rho = g * g.adjoint();
  rho /= rho.trace().real();
  return 0.5 * (rho + rho.adjoint());
}

Matrix random_hermitian(int d, Rng& rng) {
  Matrix g = ginibre(d, d, rng);
  return 0.5 * (g + g.adjoint());
}

std::vector<Matrix> random_channel(int d, int count, Rng& rng) {
  // Stinespring isometry: first d columns of a Haar unitary on C^{d*count}.
  Matrix u = haar_unitary(d * count, rng);
  std::vector<Matrix> out;
  for (int k = 0; k < count; ++k) out.push_back(u.block(k * d, 0, d, d));
  return out;
}

}  // namespace qwd::rnd
