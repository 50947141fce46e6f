#include <gtest/gtest.h>

#include <cmath>

#include "generators.hpp"
#include "invariants.hpp"
#include "oracle.hpp"
#include "qwd/qwd.hpp"

namespace {

using namespace qwd;
using namespace qwd::testing;

constexpr int kCases = 200;

void expect_ok(const PropertyResult& r) {
  EXPECT_EQ(r.cases, kCases);
  EXPECT_TRUE(r.ok()) << r.failures << " failures; first: " << r.first_failure;
}

TEST(Property, TraceMonotonicity) { expect_ok(check_trace_monotonicity(kCases, 1)); }
TEST(Property, BranchCompleteness) { expect_ok(check_branch_completeness(kCases, 2)); }
TEST(Property, MuNormalization) { expect_ok(check_mu_normalization(kCases, 3)); }
TEST(Property, ParserRoundTrip) { expect_ok(check_parser_round_trip(kCases, 4)); }
TEST(Property, CountOracle) { expect_ok(check_count_oracle(kCases, 5)); }

TEST(Property, EvaluateMatchesOracle) {
  int failures = 0;
  for (int i = 0; i < kCases; ++i) {
    CaseOptions o;
    o.params = 1 + i % 2;
    o.branches = i % 3 != 0;
    const auto c = random_loop_case(10000 + i, o);
    const Matrix got = evaluate(c.program, c.theta, c.rho).state.matrix;
    const Matrix want = oracle_evaluate(c.program, c.theta, c.rho.matrix);
    if ((got - want).norm() > 1e-9) ++failures;
  }
  EXPECT_EQ(failures, 0);
}

TEST(Property, SpectralRoutesAgree) {
  int failures = 0;
  for (int i = 0; i < kCases; ++i) {
    const auto c = random_loop_case(20000 + i);
    const Statement& loop = *collect_loops(c.program.body).front();
    const double dense = epsilon_spectral(c.program, loop, c.theta, SpectralMethod::Dense).epsilon;
    const double arnoldi =
        epsilon_spectral(c.program, loop, c.theta, SpectralMethod::Arnoldi).epsilon;
    if (std::abs(dense - arnoldi) > 1e-6) {
      ++failures;
      ADD_FAILURE() << "case " << i << ": dense " << dense << " arnoldi " << arnoldi;
    }
  }
  EXPECT_EQ(failures, 0);
}

TEST(Property, CommutatorFormMatchesOracle) {
  int failures = 0;
  for (int i = 0; i < kCases; ++i) {
    const auto c = random_sandwich(30000 + i);
    const double want = sandwich_derivative_oracle(c.sw, c.rho, c.theta);
    const double alpha = 0.1 + 1.3 * ((i * 37) % 100) / 100.0;
    if (std::abs(commutator_form_derivative(c.sw, c.rho, c.theta, alpha) - want) > 1e-9)
      ++failures;
  }
  EXPECT_EQ(failures, 0);
}

TEST(Property, ExactDiffMatchesOracleDerivative) {
  int failures = 0;
  for (int i = 0; i < kCases; ++i) {
    CaseOptions o;
    o.min_leak = 0.3;
    o.max_dim = 4;
    const auto c = random_loop_case(40000 + i, o);
    const DiffProgram d = transform_commutator(c.program, "theta");
    const double got = exact_diff_expectation(d, c.theta, c.rho, c.observable).value;
    const double want = oracle_derivative(c.program, c.theta, 0, c.rho.matrix, c.observable);
    if (std::abs(got - want) > 1e-6) {
      ++failures;
      ADD_FAILURE() << "case " << i << ": " << got << " vs " << want;
    }
  }
  EXPECT_EQ(failures, 0);
}

}  // namespace
