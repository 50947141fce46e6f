#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "qwd/autodiff.hpp"

namespace qwd {

enum class ShotMode { Faithful, Rao };
ShotMode shot_mode_from_string(const std::string& name);

struct GradEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  long shots = 0;
  double fired_fraction = 0.0;
  double sample_variance = 0.0;

  std::string to_json() const;  // "qwd-report/1"
};

struct SamplingOptions {
  long shots = 10000;
  std::uint64_t seed = 0;
  ShotMode mode = ShotMode::Faithful;
  long k_max = 1000000;
  unsigned workers = 0;  // 0: hardware concurrency
};

// Samples eigenvalues of an observable on pure states.
class ObservableSampler {
 public:
  explicit ObservableSampler(const Matrix& o);
  double sample(const Vector& psi, Rng& rng) const;
  double expect(const Vector& psi) const;

 private:
  Matrix o_;
  bool diagonal_ = false;
  RealVector values_;
  Matrix vectors_;
};

GradEstimate estimate_gradient(const DiffProgram& diff,
                               const std::vector<double>& theta,
                               const DensityState& rho, const Matrix& observable,
                               const SamplingOptions& options);

// Mean of shot_weight^2 * o^2 with o a sampled eigenvalue of O.
GradEstimate estimate_second_moment(const DiffProgram& diff,
                                    const std::vector<double>& theta,
                                    const DensityState& rho,
                                    const Matrix& observable,
                                    const SamplingOptions& options);

// Runs `shots` independent shots, shot i seeded by (seed, i), and returns the
// per-shot values in shot order. Bitwise independent of the worker count.
std::vector<double> run_shots(long shots, std::uint64_t seed, unsigned workers,
                              const std::function<double(Rng&, long)>& shot);

struct SpectralResult {
  double epsilon = 0.0;
  int unit_eigencount = 0;
  std::string method;  // "dense", "arnoldi", "decay-fit"
  double residual = 0.0;
};

enum class SpectralMethod { Auto, Dense, Arnoldi };

// Largest eigenvalue modulus below 1 - 1e-9 of the loop iteration map
// X -> B(M1 X M1^dagger) (B = body semantics). Auto uses the dense
// superoperator for total dimension <= 16 and Arnoldi iteration otherwise;
// bodies with nested loops fall back to a decay-rate fit.
SpectralResult epsilon_spectral(const Program& program, const Statement& loop,
                                const std::vector<double>& theta,
                                SpectralMethod method = SpectralMethod::Auto);

// exp(slope) of a least-squares fit of log masses[n] over n in [from, to].
double fit_decay_rate(const std::vector<double>& masses, int from, int to);

double variance_bound_series(double M, int M1, int M2, const MuDistribution& mu,
                             double epsilon, int N_epsilon, double tol = 1e-6);
double fourth_moment_bound(double M, int M1, int M2, const MuDistribution& mu,
                           double epsilon, int N_epsilon, double tol = 1e-6);

long plan_samples(double variance, double delta, double fail_prob);

struct VarianceReport {
  double second_moment_bound = 0.0;
  double fourth_moment_bound = 0.0;
  double epsilon = 0.0;
  int N_epsilon = 1;
  long planned_shots = 1;
  std::string method = "theoretical";
  long pilot_shots = 0;
  double pilot_estimate = 0.0;
  double pilot_std_error = 0.0;
  double variance_input = 0.0;
  int running_count = 0;
  int loop_count = 0;
  double observable_norm = 0.0;

  std::string to_json() const;  // "qwd-report/1"
};

struct PlanOptions {
  double delta = 0.1;
  double fail_prob = 0.1;
  double margin_delta = 30.0;
  double margin_fail = 0.1;
  std::uint64_t seed = 0;
  long max_pilot_shots = 0;  // 0: no cap
  long k_max = 1000000;
};

// Theoretical plan from the second-moment bound.
VarianceReport theoretical_plan(const DiffProgram& diff,
                                const std::vector<double>& theta,
                                const Matrix& observable, double delta,
                                double fail_prob);

// Two-stage plan: fourth-moment bound sizes a pilot estimating the second
// moment; the final plan uses pilot estimate + margin_delta.
VarianceReport empirical_plan(const DiffProgram& diff,
                              const std::vector<double>& theta,
                              const DensityState& rho, const Matrix& observable,
                              const PlanOptions& options);

}  // namespace qwd
