#include <gtest/gtest.h>

#include <cmath>

#include "generators.hpp"
#include "oracle.hpp"
#include "qwd/qwd.hpp"

// Sanity checks of the reference implementations against hand-derived values.

namespace {

using namespace qwd;
using namespace qwd::testing;

TEST(Oracle, EmbedOrdersDigits) {
  // X on the second of two qubits maps |00> to |01>, i.e. index 0 to 1.
  const Matrix x = la::pauli('X');
  const Matrix full = oracle_embed(x, {1}, {2, 2});
  EXPECT_EQ(full(1, 0), cplx(1.0));
  EXPECT_EQ(full(3, 2), cplx(1.0));
  EXPECT_EQ(full(2, 0), cplx(0.0));
  // A two-register operator listed in reverse order swaps its factors.
  Matrix cnot = Matrix::Identity(4, 4);
  cnot.block(2, 2, 2, 2) = x;
  const Matrix rev = oracle_embed(cnot, {1, 0}, {2, 2});
  // Control is now the second qubit: |01> -> |11>.
  EXPECT_EQ(rev(3, 1), cplx(1.0));
  EXPECT_EQ(rev(2, 2), cplx(1.0));
}

TEST(Oracle, ExpmOfPauliZ) {
  const Matrix u = oracle_expm(la::pauli('Z'), 0.7);
  EXPECT_NEAR(std::abs(u(0, 0) - std::polar(1.0, -0.7)), 0.0, 1e-14);
  EXPECT_NEAR(std::abs(u(1, 1) - std::polar(1.0, 0.7)), 0.0, 1e-14);
  EXPECT_NEAR(std::abs(u(0, 1)), 0.0, 1e-14);
}

TEST(Oracle, EvaluatesRunningExample) {
  const Program p = parse_file(QWD_PROGRAMS_DIR "/fig2a.qprog");
  const Matrix o = observable_matrix(p, "Opsi");
  const Matrix zero = DensityState::zero(p).matrix;
  for (double t : {0.0, 0.9}) {
    const cplx z = std::polar(0.5, t);
    EXPECT_NEAR(oracle_expectation(p, {t}, zero, o), 1.0 + 0.5 * (z / (1.0 - z)).imag(), 1e-12);
  }
  EXPECT_NEAR(oracle_derivative(p, {0.0}, 0, zero, o), 1.0, 1e-7);
  EXPECT_EQ(text_running_count(p, "theta"), 1);
  EXPECT_EQ(text_loop_count(p), 1);
}

TEST(Oracle, SandwichDerivativeMatchesDifference) {
  for (int i = 0; i < 10; ++i) {
    const auto c = random_sandwich(50 + i);
    // Independent value: kron(U, I) built from oracle_expm.
    auto value = [&](double t) {
      const Eigen::Index s = c.sw.sigma.rows();
      const Eigen::Index rest = c.sw.dim() / s;
      const Matrix u = oracle_expm(c.sw.sigma, t);
      Matrix full = Matrix::Zero(c.sw.dim(), c.sw.dim());
      for (Eigen::Index a = 0; a < s; ++a)
        for (Eigen::Index b = 0; b < s; ++b)
          full.block(a * rest, b * rest, rest, rest) = u(a, b) * Matrix::Identity(rest, rest);
      Matrix r = Matrix::Zero(c.sw.dim(), c.sw.dim());
      for (const auto& k : c.sw.pre) r += k * c.rho * k.adjoint();
      r = full * r * full.adjoint();
      Matrix out = Matrix::Zero(c.sw.dim(), c.sw.dim());
      for (const auto& k : c.sw.post) out += k * r * k.adjoint();
      return (c.sw.observable * out).trace().real();
    };
    const double h = 1e-5;
    EXPECT_NEAR(sandwich_derivative_oracle(c.sw, c.rho, c.theta),
                (value(c.theta + h) - value(c.theta - h)) / (2 * h), 1e-7)
        << i;
  }
}

TEST(Oracle, GeneratorsRespectOptions) {
  for (int i = 0; i < 20; ++i) {
    CaseOptions o;
    o.params = 2;
    const auto c = random_loop_case(i, o);
    EXPECT_TRUE(validate(c.program).ok());
    EXPECT_LE(c.program.dimension(), 8u);
    EXPECT_EQ(c.program.params.size(), 2u);
    EXPECT_TRUE(la::is_density(c.rho.matrix));
    EXPECT_NEAR(la::spectral_norm(c.observable), 1.0, 1e-9);
  }
}

}  // namespace
