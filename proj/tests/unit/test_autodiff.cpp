#include <gtest/gtest.h>

#include <cmath>
#include <functional>

#include "generators.hpp"
#include "oracle.hpp"
#include "qwd/qwd.hpp"

namespace {

using namespace qwd;
using qwd::testing::oracle_derivative;
using qwd::testing::random_loop_case;

Program fig2a() { return parse_file(QWD_PROGRAMS_DIR "/fig2a.qprog"); }

int count_eul(const Statement& s) {
  int n = s.kind == StmtKind::Eul;
  for (const auto& c : s.children) n += count_eul(c);
  return n;
}

TEST(Autodiff, OneSitePerOccurrence) {
  for (int i = 0; i < 20; ++i) {
    qwd::testing::CaseOptions o;
    o.params = 2;
    const auto c = random_loop_case(500 + i, o);
    for (const auto& p : c.program.params) {
      const DiffProgram d = transform_commutator(c.program, p.name);
      EXPECT_EQ(count_eul(d.program.body), running_count(c.program, p.name));
      EXPECT_EQ(static_cast<int>(d.sites.size()), running_count(c.program, p.name));
      EXPECT_TRUE(structurally_equal(strip_sites(d.program.body), c.program.body) ||
                  format(strip_sites(d.program.body)) == format(c.program.body));
    }
  }
}

TEST(Autodiff, SidecarRoundTrip) {
  const DiffProgram d = transform_param_shift(fig2a(), "theta", MuDistribution(0.5));
  const DiffProgram back = load_diff_program(d.qprog(), d.sidecar_json());
  EXPECT_TRUE(structurally_equal(back.program, d.program));
  EXPECT_EQ(back.param, "theta");
  EXPECT_EQ(back.backend, Backend::ParamShift);
  EXPECT_EQ(back.mu.s(), 0.5);
  EXPECT_EQ(back.mu.normalizer(), d.mu.normalizer());
  ASSERT_EQ(back.sites.size(), d.sites.size());
  EXPECT_EQ(back.sites[0].generator_scale, 1.0);
  EXPECT_THROW(load_diff_program(d.qprog(), "{\"format\": \"other\"}"), Error);
}

TEST(Autodiff, UnknownParameterIsRejected) {
  try {
    transform_commutator(fig2a(), "phi");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::UndeclaredName);
  }
}

TEST(Autodiff, ParamShiftNeedsPauliDensity) {
  const auto c = random_loop_case(3);
  try {
    transform_param_shift(c.program, "theta");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::UnsupportedOccurrence);
  }
}

TEST(Autodiff, ExactDiffOnRunningExample) {
  const Program p = fig2a();
  const Matrix o = observable_matrix(p, "Opsi");
  const DensityState zero = DensityState::zero(p);
  for (Backend b : {Backend::Commutator, Backend::ParamShift}) {
    const DiffProgram d = b == Backend::Commutator ? transform_commutator(p, "theta")
                                                   : transform_param_shift(p, "theta");
    for (double t : {0.0, 0.8, 2.1}) {
      const DiffExpectation e = exact_diff_expectation(d, {t}, zero, o);
      // f(t) = 1 + Im(z / (1 - z)) / 2 with z = e^{it} / 2, differentiated
      // independently by a central difference of the closed form.
      auto f = [](double x) {
        const cplx z = std::polar(0.5, x);
        return 1.0 + 0.5 * (z / (1.0 - z)).imag();
      };
      const double h = 1e-5;
      EXPECT_NEAR(e.value, (f(t + h) - f(t - h)) / (2 * h), 1e-6) << to_string(b) << t;
      EXPECT_LT(e.error_bound, 1e-6);
    }
  }
}

TEST(Autodiff, ExactDiffMatchesOracleDerivative) {
  for (int i = 0; i < 15; ++i) {
    qwd::testing::CaseOptions o;
    o.params = 1 + i % 2;
    o.min_leak = 0.3;
    const auto c = random_loop_case(700 + i, o);
    for (std::size_t k = 0; k < c.program.params.size(); ++k) {
      const DiffProgram d = transform_commutator(c.program, c.program.params[k].name);
      const DiffExpectation e = exact_diff_expectation(d, c.theta, c.rho, c.observable);
      const double want = oracle_derivative(c.program, c.theta, static_cast<int>(k), c.rho.matrix,
                                            c.observable);
      EXPECT_NEAR(e.value, want, 1e-6) << "case " << i << " param " << k;
    }
  }
}

TEST(Autodiff, ShotWeights) {
  const MuDistribution mu(0.25);
  EXPECT_EQ(shot_weight(Backend::Commutator, std::nullopt, 1, mu), 0.0);
  EXPECT_DOUBLE_EQ(shot_weight(Backend::Commutator, 3, -1, mu), -2.0 / mu.mu(3));
  EXPECT_DOUBLE_EQ(shot_weight(Backend::ParamShift, 5, 1, mu, 0.5), 0.5 / mu.mu(5));
}

TEST(Autodiff, CouplingKrausFormAChannel) {
  Rng rng(8);
  const Matrix sigma = rnd::random_density(2, rng);
  for (int z : {1, -1}) {
    const auto ks = coupling_kraus(sigma, M_PI / 4, z);
    Matrix sum = Matrix::Zero(2, 2);
    for (const auto& k : ks) sum += k.adjoint() * k;
    EXPECT_LT((sum - la::identity(2)).norm(), 1e-12);
    // Acting on rho gives the swap coupling of rho with sigma.
    const Matrix rho = rnd::random_density(2, rng);
    EXPECT_LT((apply_channel(ks, rho) - swap_coupled(rho, sigma, z * M_PI / 4)).norm(), 1e-12);
  }
}

TEST(Autodiff, ShotsAreUnbiased) {
  const Program p = fig2a();
  const DiffProgram d = transform_commutator(p, "theta");
  SamplingOptions s;
  s.shots = 40000;
  s.seed = 3;
  s.workers = 1;
  const GradEstimate g = estimate_gradient(d, {0.0}, DensityState::zero(p),
                                           observable_matrix(p, "Opsi"), s);
  EXPECT_NEAR(g.mean, 1.0, 4 * g.std_error);
  EXPECT_GT(g.fired_fraction, 0.0);
}

}  // namespace
