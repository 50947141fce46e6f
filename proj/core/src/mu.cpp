#include "qwd/mu.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>

#include <boost/math/quadrature/exp_sinh.hpp>

#include "qwd/errors.hpp"

namespace qwd {

namespace {

constexpr long kTableSize = 1L << 16;
constexpr long kDirectTerms = 1000000;

double term(double s, double n) {
  return 1.0 / (n * std::pow(std::log(n + M_E), 1.0 + s));
}

double term_derivative(double s, double x) {
  const double L = std::log(x + M_E);
  return -1.0 / (x * x * std::pow(L, 1.0 + s)) -
         (1.0 + s) / (x * std::pow(L, 2.0 + s) * (x + M_E));
}

}  // namespace

double mu_tail_integral(double s, double from) {
  // With u = ln(x + e) the integrand becomes u^{-1-s} / (1 - e^{1-u}); the
  // leading part integrates in closed form and the rest decays like e^{-u}.
  const double U = std::log(from + M_E);
  boost::math::quadrature::exp_sinh<double> integrator;
  auto correction = [s, U](double v) {
    const double u = U + v;
    const double q = std::exp(1.0 - u);
    return std::pow(u, -1.0 - s) * q / (1.0 - q);
  };
  return std::pow(U, -s) / s + integrator.integrate(correction, 1e-14);
}

double mu_normalizer(double s) {
  if (!(s > 0.0 && s <= 1.0))
    throw Error(ErrorKind::InvalidArgument, "s must lie in (0, 1]");
  static std::mutex lock;
  static std::map<double, double> cache;
  std::lock_guard<std::mutex> guard(lock);
  if (auto it = cache.find(s); it != cache.end()) return it->second;
  // Kahan-compensated head sum, then Euler-Maclaurin:
  // sum_{n>=N} f(n) = int_N^inf f + f(N)/2 - f'(N)/12 + O(f'''(N)).
  double sum = 0, comp = 0;
  for (long n = 1; n < kDirectTerms; ++n) {
    const double y = term(s, static_cast<double>(n)) - comp;
    const double t = sum + y;
    comp = (t - sum) - y;
    sum = t;
  }
  const double N = static_cast<double>(kDirectTerms);
  const double tail =
      mu_tail_integral(s, N) + term(s, N) / 2 - term_derivative(s, N) / 12;
  const double c = sum + tail;
  cache[s] = c;
  return c;
}

MuDistribution::MuDistribution(double s) : MuDistribution(s, mu_normalizer(s), true) {}

MuDistribution MuDistribution::with_normalizer(double s, double c) {
  if (!(c > 0)) throw Error(ErrorKind::InvalidArgument, "normalizer must be positive");
  return MuDistribution(s, c, false);
}

MuDistribution::MuDistribution(double s, double c, bool exact)
    : s_(s), c_(c), exact_(exact) {
  if (!(s > 0.0 && s <= 1.0))
    throw Error(ErrorKind::InvalidArgument, "s must lie in (0, 1]");
  build_table();
}

void MuDistribution::build_table() {
  cum_.assign(kTableSize + 1, 0.0);
  mu_table_.assign(kTableSize + 1, 0.0);
  b_table_.assign(kTableSize + 1, 0.0);
  for (long j = 1; j <= kTableSize; ++j) {
    const double left = 1.0 - cum_[j - 1];
    const double m = std::min(raw(j), std::max(left, 0.0));
    cum_[j] = cum_[j - 1] + m;
    mu_table_[j] = m;
    b_table_[j] = left <= 0 ? 1.0 : std::min(1.0, m / left);
  }
}

double MuDistribution::raw(long j) const {
  return term(s_, static_cast<double>(j)) / c_;
}

double MuDistribution::cumulative(long j) const {
  if (j <= 0) return 0.0;
  if (j <= kTableSize) return cum_[j];
  double acc = cum_[kTableSize];
  for (long k = kTableSize + 1; k <= j; ++k)
    acc += std::min(raw(k), std::max(1.0 - acc, 0.0));
  return acc;
}

double MuDistribution::mu(long j) const {
  if (j < 1) return 0.0;
  if (j <= kTableSize) return mu_table_[j];
  // Computed from raw() rather than a table difference to keep full relative
  // precision for large j.
  const double before = cumulative(j - 1);
  return std::min(raw(j), std::max(1.0 - before, 0.0));
}

double MuDistribution::b(long j) const {
  if (j >= 1 && j <= kTableSize) return b_table_[j];
  const double left = 1.0 - cumulative(j - 1);
  if (left <= 0) return 1.0;
  return std::min(1.0, mu(j) / left);
}

MuTables mu_tables(const MuDistribution& mu, long n) {
  if (n < 1) throw Error(ErrorKind::InvalidArgument, "n must be >= 1");
  MuTables t;
  t.mu.reserve(n);
  t.b.reserve(n);
  // Same recurrence as build_table, carried past the table so the cost stays
  // linear in n.
  double before = 0.0;
  for (long j = 1; j <= n; ++j) {
    const double left = 1.0 - before;
    const double m = std::min(mu.raw(j), std::max(left, 0.0));
    before += m;
    t.mu.push_back(m);
    t.b.push_back(left <= 0 ? 1.0 : std::min(1.0, m / left));
    t.S += 1.0 / m;
    t.S3 += 1.0 / (m * m * m);
  }
  return t;
}

}  // namespace qwd
