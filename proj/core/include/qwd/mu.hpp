#pragma once

#include <cstddef>
#include <vector>

namespace qwd {

// mu(n) = 1 / (c(s) n ln^{1+s}(n + e)) over n >= 1.
//
// With the default constructor c(s) is the true normalizer. A caller may also
// supply an explicit normalizer; when that makes the raw weights sum past 1,
// the distribution actually sampled is the capped sequence
// mu_eff(j) = min(mu(j), 1 - sum_{k<j} mu_eff(k)), so b_j stays in [0, 1].
class MuDistribution {
 public:
  explicit MuDistribution(double s = 0.25);
  static MuDistribution with_normalizer(double s, double c);

  double s() const { return s_; }
  double normalizer() const { return c_; }
  bool exact() const { return exact_; }

  double raw(long j) const;  // 1 / (c j ln^{1+s}(j+e))
  double mu(long j) const;   // effective probability of firing at j
  double cumulative(long j) const;  // sum_{k <= j} mu(k)
  double b(long j) const;    // mu(j) / (1 - cumulative(j - 1))

 private:
  MuDistribution(double s, double c, bool exact);
  void build_table();

  double s_;
  double c_;
  bool exact_;
  std::vector<double> cum_;  // cum_[j] = sum_{k<=j} mu(k), cum_[0] = 0
  std::vector<double> mu_table_;  // mu(j) for j <= table size
  std::vector<double> b_table_;   // b(j) for j <= table size
};

// sum_{n>=1} 1/(n ln^{1+s}(n+e)), absolute error below 1e-12.
double mu_normalizer(double s);
// Upper bound on sum_{n>N} 1/(n ln^{1+s}(n+e)) (integral comparison).
double mu_tail_integral(double s, double from);

struct MuTables {
  std::vector<double> mu;  // mu(1..n)
  std::vector<double> b;   // b(1..n)
  double S = 0;            // sum_{j<=n} 1/mu(j)
  double S3 = 0;           // sum_{j<=n} 1/mu(j)^3
};

MuTables mu_tables(const MuDistribution& mu, long n);

}  // namespace qwd
