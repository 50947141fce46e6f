#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "qwd/autodiff.hpp"
#include "qwd/casestudy.hpp"
#include "qwd/estimator.hpp"

namespace qwd {

struct AdamState {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double alpha = 0.1;
  double eps_stab = 1e-8;
  std::vector<double> m;
  std::vector<double> v;
  long step = 0;
};

// Bias-corrected Adam update minimizing along `grad`.
std::vector<double> adam_step(const std::vector<double>& theta,
                              const std::vector<double>& grad, AdamState& state);

struct Objective {
  Program program;
  std::vector<ObjectiveTerm> terms;
  Combiner combiner = Combiner::Sum;
  Direction direction = Direction::Minimize;

  static Objective from(const CaseStudySpec& spec);
};

// Combined objective from per-term values.
double combine(Combiner combiner, const std::vector<double>& values);
// Gradient of the combined objective from per-term values and gradients.
std::vector<double> combine_gradient(
    Combiner combiner, const std::vector<double>& values,
    const std::vector<std::vector<double>>& term_gradients);

struct OptimizeOptions {
  int steps = 100;
  double alpha = 0.1;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps_stab = 1e-8;
  long shots = 10000;
  std::uint64_t seed = 0;
  ShotMode mode = ShotMode::Faithful;
  Backend backend = Backend::Commutator;
  double mu_s = 0.25;
  unsigned workers = 0;
  long k_max = 1000000;
};

struct StepRecord {
  int step = 0;
  std::vector<double> theta;     // parameters at which the step was evaluated
  double objective = 0.0;        // exact combined objective at theta
  std::vector<double> gradient;  // sampled gradient of the combined objective
  long shots = 0;
  double wall_seconds = 0.0;
};

struct RunRecord {
  std::vector<StepRecord> steps;
  std::vector<double> final_theta;
  double final_objective = 0.0;

  std::string to_json() const;  // "qwd-result/1"
  std::string to_csv() const;
};

// Exact objective value at theta (density simulation).
double objective_value(const Objective& objective, const std::vector<double>& theta,
                       std::vector<double>* term_values = nullptr);

RunRecord optimize(const Objective& objective, std::vector<double> theta0,
                   const OptimizeOptions& options);

// Probabilistic loop demo: E(theta) = 2 sin(theta), derivative 2 cos(theta).
GradEstimate prob_demo_eul(double theta, const MuDistribution& mu, long shots,
                           std::uint64_t seed);
GradEstimate prob_demo_forward(double theta, long shots, std::uint64_t seed);

}  // namespace qwd
