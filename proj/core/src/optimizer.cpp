#include "qwd/optimizer.hpp"

#include <chrono>
#include <cmath>
#include <sstream>

#include <json.hpp>

namespace qwd {

using nlohmann::json;

std::vector<double> adam_step(const std::vector<double>& theta,
                              const std::vector<double>& grad, AdamState& state) {
  if (theta.size() != grad.size())
    throw Error(ErrorKind::DimMismatch, "gradient and parameter sizes differ");
  if (state.m.empty()) {
    state.m.assign(theta.size(), 0.0);
    state.v.assign(theta.size(), 0.0);
  }
  if (state.m.size() != theta.size())
    throw Error(ErrorKind::DimMismatch, "optimizer state size differs");
  ++state.step;
  const double c1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  std::vector<double> out = theta;
  for (std::size_t i = 0; i < theta.size(); ++i) {
    state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * grad[i];
    state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * grad[i] * grad[i];
    const double m_hat = state.m[i] / c1;
    const double v_hat = state.v[i] / c2;
    out[i] -= state.alpha * m_hat / (std::sqrt(v_hat) + state.eps_stab);
  }
  return out;
}

Objective Objective::from(const CaseStudySpec& spec) {
  Objective o;
  o.program = spec.program;
  o.terms = spec.inputs;
  o.combiner = spec.combiner;
  o.direction = spec.direction;
  return o;
}

double combine(Combiner combiner, const std::vector<double>& values) {
  double total = 0;
  for (double v : values)
    total += combiner == Combiner::Sum ? v : (v - 1.0) * (v - 1.0);
  if (combiner == Combiner::MseToOne && !values.empty()) total /= values.size();
  return total;
}

std::vector<double> combine_gradient(
    Combiner combiner, const std::vector<double>& values,
    const std::vector<std::vector<double>>& term_gradients) {
  std::vector<double> g;
  if (term_gradients.empty()) return g;
  g.assign(term_gradients.front().size(), 0.0);
  for (std::size_t i = 0; i < term_gradients.size(); ++i) {
    const double w = combiner == Combiner::Sum
                         ? 1.0
                         : 2.0 * (values[i] - 1.0) / static_cast<double>(values.size());
    for (std::size_t k = 0; k < g.size(); ++k) g[k] += w * term_gradients[i][k];
  }
  return g;
}

double objective_value(const Objective& objective, const std::vector<double>& theta,
                       std::vector<double>* term_values) {
  std::vector<double> values;
  for (const auto& term : objective.terms)
    values.push_back(
        expectation(objective.program, theta, term.rho, term.observable).value);
  if (term_values) *term_values = values;
  return combine(objective.combiner, values);
}

RunRecord optimize(const Objective& objective, std::vector<double> theta0,
                   const OptimizeOptions& options) {
  const Program& prog = objective.program;
  if (theta0.size() != prog.params.size())
    throw Error(ErrorKind::DimMismatch, "theta0 has " + std::to_string(theta0.size()) +
                                            " entries, program declares " +
                                            std::to_string(prog.params.size()));
  const MuDistribution mu(options.mu_s);
  std::vector<DiffProgram> diffs;
  for (const auto& p : prog.params)
    diffs.push_back(options.backend == Backend::Commutator
                        ? transform_commutator(prog, p.name, mu)
                        : transform_param_shift(prog, p.name, mu));

  AdamState adam;
  adam.alpha = options.alpha;
  adam.beta1 = options.beta1;
  adam.beta2 = options.beta2;
  adam.eps_stab = options.eps_stab;
  const double sign = objective.direction == Direction::Minimize ? 1.0 : -1.0;

  RunRecord record;
  std::vector<double> theta = std::move(theta0);
  for (int step = 0; step < options.steps; ++step) {
    const auto start = std::chrono::steady_clock::now();
    StepRecord rec;
    rec.step = step;
    rec.theta = theta;
    std::vector<double> values;
    rec.objective = objective_value(objective, theta, &values);
    std::vector<std::vector<double>> term_grads(
        objective.terms.size(), std::vector<double>(theta.size(), 0.0));
    for (std::size_t k = 0; k < diffs.size(); ++k)
      for (std::size_t i = 0; i < objective.terms.size(); ++i) {
        SamplingOptions s;
        s.shots = options.shots;
        s.mode = options.mode;
        s.workers = options.workers;
        s.k_max = options.k_max;
        s.seed = mix_key(mix_key(options.seed, static_cast<std::uint64_t>(step)),
                         k * 4096 + i);
        term_grads[i][k] =
            estimate_gradient(diffs[k], theta, objective.terms[i].rho,
                              objective.terms[i].observable, s)
                .mean;
        rec.shots += s.shots;
      }
    rec.gradient = combine_gradient(objective.combiner, values, term_grads);
    std::vector<double> descent = rec.gradient;
    for (double& g : descent) g *= sign;
    theta = adam_step(theta, descent, adam);
    rec.wall_seconds = std::chrono::duration<double>(
                           std::chrono::steady_clock::now() - start)
                           .count();
    record.steps.push_back(std::move(rec));
  }
  record.final_theta = theta;
  record.final_objective = objective_value(objective, theta);
  return record;
}

std::string RunRecord::to_json() const {
  json j;
  j["format"] = "qwd-result/1";
  j["kind"] = "optimize";
  json steps_json = json::array();
  for (const auto& s : steps)
    steps_json.push_back({{"step", s.step},
                          {"theta", s.theta},
                          {"objective", s.objective},
                          {"gradient", s.gradient},
                          {"shots", s.shots},
                          {"wall_seconds", s.wall_seconds}});
  j["steps"] = steps_json;
  j["final_theta"] = final_theta;
  j["final_objective"] = final_objective;
  return j.dump(2);
}

std::string RunRecord::to_csv() const {
  std::ostringstream out;
  out.precision(17);
  const std::size_t k = steps.empty() ? final_theta.size() : steps.front().theta.size();
  out << "step";
  for (std::size_t i = 0; i < k; ++i) out << ",theta" << i;
  out << ",objective";
  for (std::size_t i = 0; i < k; ++i) out << ",grad" << i;
  out << ",shots,wall_seconds\n";
  for (const auto& s : steps) {
    out << s.step;
    for (double t : s.theta) out << ',' << t;
    out << ',' << s.objective;
    for (double g : s.gradient) out << ',' << g;
    out << ',' << s.shots << ',' << s.wall_seconds << '\n';
  }
  return out.str();
}

// ---------------------------------------------------------------------------
// Probabilistic loop: r := 0; y := 0; while r = 0 do y += sin(theta);
// r := 0 (+)_{1/2} 1 od.

namespace {

GradEstimate summarize(const std::vector<double>& values, long fired) {
  GradEstimate g;
  g.shots = static_cast<long>(values.size());
  double sum = 0;
  for (double v : values) sum += v;
  g.mean = sum / g.shots;
  double ss = 0;
  for (double v : values) ss += (v - g.mean) * (v - g.mean);
  g.sample_variance = g.shots > 1 ? ss / (g.shots - 1) : 0.0;
  g.std_error = std::sqrt(g.sample_variance / g.shots);
  g.fired_fraction = static_cast<double>(fired) / g.shots;
  return g;
}

}  // namespace

GradEstimate prob_demo_eul(double theta, const MuDistribution& mu, long shots,
                           std::uint64_t seed) {
  std::vector<char> fired(static_cast<std::size_t>(std::max(shots, 1L)), 0);
  auto shot = [&](Rng& rng, long i) {
    bool done = false;
    long counter = 1;
    double dual = 0.0;
    long j = 0;
    for (;;) {
      if (!done) {
        if (rng.uniform() < mu.b(counter)) {
          done = true;
          j = counter;
          dual = std::cos(theta);
        } else {
          ++counter;
        }
      }
      if (rng.uniform() >= 0.5) break;  // r := 1 exits
    }
    fired[i] = done;
    return done ? dual / mu.mu(j) : 0.0;
  };
  const auto values = run_shots(shots, seed, 1, shot);
  long count = 0;
  for (char f : fired) count += f;
  return summarize(values, count);
}

GradEstimate prob_demo_forward(double theta, long shots, std::uint64_t seed) {
  auto shot = [&](Rng& rng, long) {
    double dual = 0.0;
    do {
      dual += std::cos(theta);
    } while (rng.uniform() < 0.5);
    return dual;
  };
  return summarize(run_shots(shots, seed, 1, shot), shots);
}

}  // namespace qwd
