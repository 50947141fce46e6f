#include "qwd/dsop.hpp"

#include <cmath>

#include "qwd/errors.hpp"

namespace qwd {

void ChannelSandwich::check() const {
  const Eigen::Index d = dim();
  if (!la::is_square(sigma) || sigma.rows() == 0 || d % sigma.rows() != 0)
    throw Error(ErrorKind::DimMismatch, "sigma does not factor the system");
  if (!la::is_density(sigma, 1e-9))
    throw Error(ErrorKind::NonDensitySigma, "sigma is not a density matrix");
  for (const auto* list : {&pre, &post}) {
    Matrix sum = Matrix::Zero(d, d);
    for (const auto& k : *list) {
      if (k.rows() != d || k.cols() != d)
        throw Error(ErrorKind::DimMismatch, "Kraus operator dimension");
      sum += k.adjoint() * k;
    }
    // Trace non-increasing: I - sum must be PSD.
    if (!list->empty() && !la::is_psd(la::identity(d) - sum, 1e-9))
      throw Error(ErrorKind::InvalidArgument, "Kraus list is not trace non-increasing");
  }
}

Matrix apply_channel(const std::vector<Matrix>& kraus, const Matrix& rho) {
  if (kraus.empty()) return rho;  // identity channel
  Matrix out = Matrix::Zero(rho.rows(), rho.cols());
  for (const auto& k : kraus) out += k * rho * k.adjoint();
  return out;
}

namespace {

Matrix lift(const Matrix& sigma_block, Eigen::Index dim) {
  return la::kron(sigma_block, la::identity(dim / sigma_block.rows()));
}

Matrix conjugated(const ChannelSandwich& sw, const Matrix& inner, double theta) {
  const Matrix u = lift(la::expm_herm(sw.sigma, theta), sw.dim());
  return u * inner * u.adjoint();
}

double finish(const ChannelSandwich& sw, const Matrix& state) {
  return (sw.observable * apply_channel(sw.post, state)).trace().real();
}

}  // namespace

double sandwich_value(const ChannelSandwich& sw, const Matrix& rho, double theta) {
  return finish(sw, conjugated(sw, apply_channel(sw.pre, rho), theta));
}

Matrix swap_coupled(const Matrix& rho, const Matrix& sigma, double alpha) {
  const Eigen::Index D = rho.rows(), d = sigma.rows(), rest = D / d;
  const Eigen::Index big = D * d;
  // Basis |a, r, c>: a = sigma block of the system, r = rest, c = copy.
  Matrix swap = Matrix::Zero(big, big);
  for (Eigen::Index a = 0; a < d; ++a)
    for (Eigen::Index r = 0; r < rest; ++r)
      for (Eigen::Index c = 0; c < d; ++c)
        swap((c * rest + r) * d + a, (a * rest + r) * d + c) = 1.0;
  const Matrix coupling =
      std::cos(alpha) * la::identity(big) - kI * std::sin(alpha) * swap;
  const Matrix joint = coupling * la::kron(rho, sigma) * coupling.adjoint();
  return la::partial_trace(joint, {static_cast<int>(D), static_cast<int>(d)}, {1});
}

Matrix swap_coupled_closed_form(const Matrix& rho, const Matrix& sigma,
                                double alpha) {
  const Eigen::Index D = rho.rows(), d = sigma.rows();
  const int rest = static_cast<int>(D / d);
  const double c = std::cos(alpha), s = std::sin(alpha);
  const Matrix reduced = la::partial_trace(rho, {static_cast<int>(d), rest}, {0});
  const Matrix lifted = lift(sigma, D);
  return c * c * rho + s * s * la::kron(sigma, reduced) -
         kI * c * s * (lifted * rho - rho * lifted);
}

double commutator_form_derivative(const ChannelSandwich& sw, const Matrix& rho,
                                  double theta, double alpha) {
  const double denom = std::sin(2 * alpha);
  if (std::abs(denom) < 1e-12)
    throw Error(ErrorKind::DegenerateAlpha, "sin(2 alpha) vanishes");
  const Matrix inner = apply_channel(sw.pre, rho);
  auto g = [&](double a) {
    return finish(sw, conjugated(sw, swap_coupled(inner, sw.sigma, a), theta));
  };
  return (g(alpha) - g(-alpha)) / denom;
}

double commutator_oracle(const ChannelSandwich& sw, const Matrix& rho,
                         double theta) {
  const Matrix inner = apply_channel(sw.pre, rho);
  const Matrix lifted = lift(sw.sigma, sw.dim());
  const Matrix comm = -kI * (lifted * inner - inner * lifted);
  return finish(sw, conjugated(sw, comm, theta));
}

double param_shift_derivative(const Matrix& h,
                              const std::function<double(double)>& f,
                              double theta) {
  if (!la::is_hermitian(h, 1e-9))
    throw Error(ErrorKind::UnsupportedSpectrum, "generator is not Hermitian");
  const RealVector ev = la::eigh(h).values;
  const double lo = ev.minCoeff(), hi = ev.maxCoeff();
  const double spread = std::max(1.0, std::max(std::abs(lo), std::abs(hi)));
  if (hi - lo <= 1e-9 * spread)
    throw Error(ErrorKind::UnsupportedSpectrum, "generator has one eigenvalue");
  for (Eigen::Index i = 0; i < ev.size(); ++i)
    if (std::abs(ev(i) - lo) > 1e-9 * spread && std::abs(ev(i) - hi) > 1e-9 * spread)
      throw Error(ErrorKind::UnsupportedSpectrum,
                  "generator has more than two distinct eigenvalues");
  const double r = (hi - lo) / 2;
  const double shift = M_PI / (4 * r);
  return r * (f(theta + shift) - f(theta - shift));
}

}  // namespace qwd
