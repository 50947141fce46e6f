#include <gtest/gtest.h>

#include <cmath>
#include <map>

#include "generators.hpp"
#include "oracle.hpp"
#include "qwd/qwd.hpp"

namespace {

using namespace qwd;
using qwd::testing::oracle_evaluate;
using qwd::testing::random_loop_case;

Program fig2a() { return parse_file(QWD_PROGRAMS_DIR "/fig2a.qprog"); }

// Closed form of the running example: 1 + sum_k 2^{-(k+1)} sin(k theta)
// = 1 + Im(z / (1 - z)) / 2 with z = e^{i theta} / 2.
double fig2a_value(double theta) {
  const cplx z = std::polar(0.5, theta);
  return 1.0 + 0.5 * (z / (1.0 - z)).imag();
}

TEST(Evaluate, MatchesOracleOnRandomPrograms) {
  for (int i = 0; i < 30; ++i) {
    qwd::testing::CaseOptions o;
    o.params = 1 + i % 2;
    const auto c = random_loop_case(1000 + i, o);
    const EvalResult got = evaluate(c.program, c.theta, c.rho);
    const Matrix want = oracle_evaluate(c.program, c.theta, c.rho.matrix);
    EXPECT_LT((got.state.matrix - want).norm(), 1e-9) << "case " << i;
    EXPECT_LE(got.residual, 1e-9);
  }
}

TEST(Evaluate, RunningExampleClosedForm) {
  const Program p = fig2a();
  const Matrix o = observable_matrix(p, "Opsi");
  const DensityState zero = DensityState::zero(p);
  for (double theta : {0.0, 0.3, 1.0, 2.5, -1.2}) {
    const ExpectationResult r = expectation(p, {theta}, zero, o);
    EXPECT_NEAR(r.value, fig2a_value(theta), 1e-9) << theta;
    EXPECT_LE(std::abs(r.value - fig2a_value(theta)), r.error_bound + 1e-12);
  }
}

TEST(Evaluate, LoopTermMassesHalve) {
  const Program p = fig2a();
  const Statement& loop = *collect_loops(p.body).front();
  const DensityState before = state_before(p, loop, {0.4}, DensityState::zero(p));
  const auto masses = loop_term_masses(p, loop, {0.4}, before, 30);
  // H carries the rounding of 1/sqrt(2), so the halving is exact to ~1e-16
  // per iteration.
  for (int n = 0; n <= 30; ++n)
    EXPECT_NEAR(masses[n] / std::ldexp(1.0, -(n + 1)), 1.0, 1e-13) << n;
  EXPECT_NEAR(loop_term_mass(p, loop, {0.4}, before, 7) / std::ldexp(1.0, -8), 1.0, 1e-13);
}

TEST(Evaluate, LoopBudgetIsEnforced) {
  const Program p = fig2a();
  TruncationPolicy policy;
  policy.tol_mass = 1e-30;
  policy.k_max = 5;
  try {
    evaluate(p, {0.0}, DensityState::zero(p), policy);
    FAIL() << "budget not enforced";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::LoopBudgetExceeded);
  }
}

TEST(Evaluate, RejectsStateOfWrongDimension) {
  const Program p = fig2a();
  try {
    evaluate(p, {0.0}, DensityState::basis(3, 0));
    FAIL() << "dimension mismatch accepted";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::DimMismatch);
  }
  EXPECT_THROW(evaluate(p, {}, DensityState::zero(p)), Error);
}

TEST(Trajectory, IterationCountsAreGeometric) {
  const Program p = fig2a();
  const DensityState zero = DensityState::zero(p);
  const int shots = 4000;
  std::map<int, int> counts;
  for (int i = 0; i < shots; ++i) {
    Rng rng = Rng::for_shot(5, i);
    const Trajectory t = sample_trajectory(p, {0.7}, zero, rng);
    // Every record entry is a loop guard outcome; the last one is the exit.
    ASSERT_FALSE(t.record.empty());
    EXPECT_EQ(t.record.back().second, 0);
    ++counts[static_cast<int>(t.record.size()) - 1];
    EXPECT_NEAR(t.probability, std::ldexp(1.0, -static_cast<int>(t.record.size())), 1e-12);
    EXPECT_NEAR(t.final_state.trace_mass(), 1.0, 1e-12);
  }
  for (int n = 0; n < 5; ++n) {
    const double p_n = std::ldexp(1.0, -(n + 1));
    const double sd = std::sqrt(shots * p_n * (1 - p_n));
    EXPECT_NEAR(counts[n], shots * p_n, 4 * sd) << n;
  }
}

TEST(Trajectory, PureSamplerReproducesDensity) {
  Rng gen(9);
  const DensityState rho(rnd::random_density(3, gen));
  PureSampler sampler(rho);
  Matrix acc = Matrix::Zero(3, 3);
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    Rng rng = Rng::for_shot(17, i);
    const Vector psi = sampler.sample(rng);
    EXPECT_NEAR(psi.norm(), 1.0, 1e-12);
    acc += psi * psi.adjoint();
  }
  EXPECT_LT((acc / n - rho.matrix).norm(), 0.03);
}

TEST(Trajectory, AveragedTrajectoriesMatchDensityEvaluation) {
  const auto c = random_loop_case(77);
  const Matrix want = oracle_evaluate(c.program, c.theta, c.rho.matrix);
  Matrix acc = Matrix::Zero(want.rows(), want.cols());
  const int n = 6000;
  for (int i = 0; i < n; ++i) {
    Rng rng = Rng::for_shot(21, i);
    acc += sample_trajectory(c.program, c.theta, c.rho, rng).final_state.matrix;
  }
  EXPECT_LT((acc / n - want).norm(), 0.05);
}

TEST(Rng, ShotStreamsDependOnlyOnSeedAndIndex) {
  Rng a = Rng::for_shot(42, 7), b = Rng::for_shot(42, 7), c = Rng::for_shot(42, 8);
  const double x = a.uniform();
  EXPECT_EQ(x, b.uniform());
  EXPECT_NE(x, c.uniform());
  EXPECT_NE(mix_key(1, 2), mix_key(2, 1));
}

}  // namespace
