#pragma once

#include <string>
#include <utility>
#include <vector>

#include "qwd/engine.hpp"
#include "qwd/program.hpp"

namespace qwd {

struct DensityState {
  Matrix matrix;

  DensityState() = default;
  explicit DensityState(Matrix m) : matrix(std::move(m)) {}
  static DensityState pure(const Vector& psi);
  static DensityState basis(std::size_t dim, std::size_t index);
  // |0...0><0...0| over the program's registers.
  static DensityState zero(const Program& program);

  double trace_mass() const { return la::real_trace(matrix); }
  std::size_t dim() const { return static_cast<std::size_t>(matrix.rows()); }
};

struct TruncationPolicy {
  double tol_mass = 1e-10;
  long k_max = 1000000;
};

struct EvalResult {
  DensityState state;
  double residual = 0.0;
};

struct ExpectationResult {
  double value = 0.0;
  double error_bound = 0.0;
};

struct Trajectory {
  DensityState final_state;
  std::vector<std::pair<std::string, int>> record;
  double probability = 1.0;
};

EvalResult evaluate(const Program& program, const std::vector<double>& theta,
                    const DensityState& rho, const TruncationPolicy& policy = {});

ExpectationResult expectation(const Program& program,
                              const std::vector<double>& theta,
                              const DensityState& rho, const Matrix& observable,
                              const TruncationPolicy& policy = {});

Trajectory sample_trajectory(const Program& program,
                             const std::vector<double>& theta,
                             const DensityState& rho, Rng& rng,
                             long k_max = 1000000);

// Draws a pure state from the spectral ensemble of rho.
Vector sample_pure(const DensityState& rho, Rng& rng);

// sample_pure with the eigen-decomposition done once.
class PureSampler {
 public:
  explicit PureSampler(const DensityState& rho);
  Vector sample(Rng& rng) const;

 private:
  std::vector<double> weights_;
  double total_ = 0.0;
  Matrix vectors_;
};

// tr(E0 o (B o E1)^n (rho)) for the given While statement, where rho is the
// state reaching the loop.
double loop_term_mass(const Program& program, const Statement& loop,
                      const std::vector<double>& theta, const DensityState& rho,
                      int n);
std::vector<double> loop_term_masses(const Program& program,
                                     const Statement& loop,
                                     const std::vector<double>& theta,
                                     const DensityState& rho, int n_max);

// State reaching a top-level loop (statements of the top-level sequence that
// precede it are evaluated).
DensityState state_before(const Program& program, const Statement& loop,
                          const std::vector<double>& theta,
                          const DensityState& rho,
                          const TruncationPolicy& policy = {});

void check_state(const Program& program, const DensityState& rho);

}  // namespace qwd
