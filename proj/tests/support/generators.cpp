#include "generators.hpp"

#include <cmath>

namespace qwd::testing {

namespace {

Matrix guard_density(double leak_min, Rng& rng) {
  const double w0 = leak_min + (0.95 - leak_min) * rng.uniform();
  const double w1 = 1.0 - w0;
  const double coherence = std::sqrt(w0 * w1) * rng.uniform();
  const double phase = 2 * M_PI * rng.uniform();
  Matrix g(2, 2);
  g << w0, coherence * std::exp(cplx(0, -phase)), coherence * std::exp(cplx(0, phase)), w1;
  return g;
}

int pick(Rng& rng, int n) { return static_cast<int>(rng.uniform() * n) % n; }

}  // namespace

Matrix random_observable(int d, Rng& rng) {
  Matrix h = rnd::random_hermitian(d, rng);
  return h / la::spectral_norm(h);
}

RandomCase random_loop_case(std::uint64_t seed, const CaseOptions& options) {
  Rng rng(mix_key(seed, 0x7e57));
  Program p;
  p.add_register("g", 2);
  // Data registers: one qubit, one ququart or two qubits, within the cap.
  std::vector<std::string> data;
  const int layout = options.max_dim >= 8 ? pick(rng, 3) : 0;
  if (layout == 0) {
    p.add_register("a", 2);
    data = {"a"};
  } else if (layout == 1) {
    p.add_register("a", 4);
    data = {"a"};
  } else {
    p.add_register("a", 2).add_register("b", 2);
    data = {"a", "b"};
  }
  const int a_dim = p.registers[1].dim;
  const int data_dim = static_cast<int>(p.dimension_of(data));
  p.add_param("theta");
  if (options.params > 1) p.add_param("phi");
  auto param_name = [&](int i) { return p.params[i % p.params.size()].name; };

  p.add_matrix("guard", MatrixKind::Density, guard_density(options.min_leak, rng));
  p.add_matrix("U0", MatrixKind::Gate, rnd::haar_unitary(data_dim, rng));
  p.add_matrix("U1", MatrixKind::Gate, rnd::haar_unitary(data_dim, rng));
  // Rotation targets: the first data register or all data.
  const std::vector<std::string> rot_regs =
      rng.uniform() < 0.5 ? std::vector<std::string>{"a"} : data;
  const int rot_dim = static_cast<int>(p.dimension_of(rot_regs));
  p.add_matrix("s0", MatrixKind::Density,
               rnd::random_density(rot_dim, rng, 1 + pick(rng, rot_dim)));
  p.add_matrix("s1", MatrixKind::Density,
               rnd::random_density(rot_dim, rng, 1 + pick(rng, rot_dim)));
  Matrix p0 = Matrix::Zero(2, 2), p1 = Matrix::Zero(2, 2);
  p0(0, 0) = 1;
  p1(1, 1) = 1;
  p.add_measurement("M", {0, 1}, {p0, p1});

  using namespace stmt;
  std::vector<Statement> head = {init_density("guard", {"g"}), unitary("U0", data)};
  if (rng.uniform() < 0.5) head.push_back(rot(param_name(1), "s0", rot_regs));
  std::vector<Statement> body = {unitary("U1", data),
                                 rot(param_name(0), "s1", rot_regs)};
  if (options.branches && rng.uniform() < 0.6) {
    const auto kraus = rnd::random_channel(a_dim, 2, rng);
    p.add_measurement("D", {0, 1}, {kraus[0], kraus[1]});
    p.add_matrix("G", MatrixKind::Gate, rnd::haar_unitary(a_dim, rng));
    p.add_matrix("s2", MatrixKind::Density, rnd::random_density(a_dim, rng, 1));
    body.push_back(if_meas("D", {"a"},
                           {{0, unitary("G", {"a"})},
                            {1, rot(param_name(0), "s2", {"a"})}}));
  }
  body.push_back(init_density("guard", {"g"}));
  head.push_back(while_loop("M", {"g"}, seq(std::move(body))));
  p.body = seq(std::move(head));
  require_valid(p);

  RandomCase c;
  const int dim = static_cast<int>(p.dimension());
  c.rho = DensityState(rnd::random_density(dim, rng));
  c.observable = random_observable(dim, rng);
  for (std::size_t i = 0; i < p.params.size(); ++i)
    c.theta.push_back(2 * M_PI * rng.uniform());
  c.program = std::move(p);
  return c;
}

SandwichCase random_sandwich(std::uint64_t seed) {
  Rng rng(mix_key(seed, 0x5a4d));
  const int n = rng.uniform() < 0.5 ? 2 : 4;
  const int s = n == 2 || rng.uniform() < 0.5 ? 2 : 4;
  SandwichCase c;
  c.sw.pre = rnd::random_channel(n, 1 + pick(rng, 3), rng);
  c.sw.post = rnd::random_channel(n, 1 + pick(rng, 3), rng);
  c.sw.sigma = rnd::random_density(s, rng, 1 + pick(rng, s));
  c.sw.observable = random_observable(n, rng);
  c.rho = rnd::random_density(n, rng);
  c.theta = 2 * M_PI * rng.uniform();
  return c;
}

}  // namespace qwd::testing
