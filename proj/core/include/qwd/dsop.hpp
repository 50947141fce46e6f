#pragma once

#include <functional>
#include <vector>

#include "qwd/linalg.hpp"

namespace qwd {

// f(theta) = tr(O E2(U E1(rho) U^dagger)), U = exp(-i theta sigma) (x) I, with
// sigma acting on the leading tensor factor of the system.
struct ChannelSandwich {
  std::vector<Matrix> pre;
  Matrix sigma;
  std::vector<Matrix> post;
  Matrix observable;

  Eigen::Index dim() const { return observable.rows(); }
  void check() const;
};

Matrix apply_channel(const std::vector<Matrix>& kraus, const Matrix& rho);
double sandwich_value(const ChannelSandwich& sw, const Matrix& rho, double theta);

// tr_copy(exp(-i a S)(rho (x) sigma)exp(i a S)) on the doubled space
// (system, copy), S swapping the sigma block of the system with the copy.
Matrix swap_coupled(const Matrix& rho, const Matrix& sigma, double alpha);
// cos^2 a rho + sin^2 a tr_block(rho) (x) sigma - i cos a sin a [sigma (x) I, rho]
Matrix swap_coupled_closed_form(const Matrix& rho, const Matrix& sigma,
                                double alpha);

double commutator_form_derivative(const ChannelSandwich& sw, const Matrix& rho,
                                  double theta, double alpha);
double commutator_oracle(const ChannelSandwich& sw, const Matrix& rho,
                         double theta);

// f'(theta) = r (f(theta + pi/(4r)) - f(theta - pi/(4r))) for f built on
// exp(-i theta H), H with exactly two distinct eigenvalues separated by 2r.
double param_shift_derivative(const Matrix& h,
                              const std::function<double(double)>& f,
                              double theta);

}  // namespace qwd
