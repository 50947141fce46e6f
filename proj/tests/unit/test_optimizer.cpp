#include <gtest/gtest.h>

#include <cmath>

#include <json.hpp>

#include "qwd/qwd.hpp"

namespace {

using namespace qwd;

TEST(Adam, FirstStepMovesByAlpha) {
  AdamState s;
  s.alpha = 0.1;
  const auto out = adam_step({1.0, -2.0, 0.5}, {3.0, -0.01, 0.0}, s);
  // Bias correction makes the first step alpha * g / (|g| + eps').
  EXPECT_NEAR(out[0], 0.9, 1e-8);
  EXPECT_NEAR(out[1], -2.0 + 0.1, 1e-6);
  EXPECT_DOUBLE_EQ(out[2], 0.5);
  EXPECT_EQ(s.step, 1);
  EXPECT_THROW(adam_step({1.0}, {1.0, 2.0}, s), Error);
}

TEST(Adam, ConvergesOnAQuadratic) {
  AdamState s;
  s.alpha = 0.05;
  std::vector<double> x{3.0, -1.0};
  for (int i = 0; i < 2000; ++i) x = adam_step(x, {2 * (x[0] - 1), 2 * (x[1] + 0.5)}, s);
  EXPECT_NEAR(x[0], 1.0, 1e-3);
  EXPECT_NEAR(x[1], -0.5, 1e-3);
}

TEST(Combine, SumAndMse) {
  EXPECT_DOUBLE_EQ(combine(Combiner::Sum, {0.5, 0.25}), 0.75);
  EXPECT_DOUBLE_EQ(combine(Combiner::MseToOne, {0.5, 1.0, 0.0, 1.0}), (0.25 + 1.0) / 4);
  const auto g = combine_gradient(Combiner::MseToOne, {0.5, 0.0}, {{1.0, 2.0}, {-1.0, 0.0}});
  // d/dx mean (v_i - 1)^2 = sum 2 (v_i - 1) v_i' / n.
  EXPECT_DOUBLE_EQ(g[0], 2 * (-0.5) * 1.0 / 2 + 2 * (-1.0) * -1.0 / 2);
  EXPECT_DOUBLE_EQ(g[1], 2 * (-0.5) * 2.0 / 2);
}

TEST(Optimize, RecordsSteps) {
  const CaseStudySpec spec = build_rus(2);
  OptimizeOptions o;
  o.steps = 3;
  o.shots = 300;
  o.seed = 4;
  o.alpha = 0.2;
  const Objective obj = Objective::from(spec);
  const RunRecord r = optimize(obj, spec.theta0, o);
  ASSERT_EQ(r.steps.size(), 3u);
  EXPECT_EQ(r.steps[0].theta, spec.theta0);
  EXPECT_DOUBLE_EQ(r.steps[0].objective, objective_value(obj, spec.theta0));
  EXPECT_EQ(r.steps[0].shots, 300 * 3 * 4);
  EXPECT_DOUBLE_EQ(r.final_objective, objective_value(obj, r.final_theta));
  const auto j = nlohmann::json::parse(r.to_json());
  EXPECT_EQ(j["format"], "qwd-result/1");
  EXPECT_EQ(j["steps"].size(), 3u);
  const std::string csv = r.to_csv();
  EXPECT_EQ(csv.rfind("step,theta0,theta1,theta2,objective,grad0,grad1,grad2,shots,wall_seconds\n", 0), 0u);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 4);
  // Same seed, same trace.
  EXPECT_EQ(optimize(obj, spec.theta0, o).final_theta, r.final_theta);
  EXPECT_THROW(optimize(obj, {0.0}, o), Error);
}

TEST(ProbDemo, BothEstimatorsTargetTwoCos) {
  const MuDistribution mu(0.25);
  for (double t : {0.0, 1.0}) {
    const GradEstimate e = prob_demo_eul(t, mu, 100000, 1);
    const GradEstimate f = prob_demo_forward(t, 100000, 2);
    EXPECT_NEAR(e.mean, 2 * std::cos(t), 4 * e.std_error) << t;
    EXPECT_NEAR(f.mean, 2 * std::cos(t), 4 * f.std_error) << t;
    EXPECT_EQ(f.fired_fraction, 1.0);
  }
}

}  // namespace
