#include "qwd/casestudy.hpp"

#include <cmath>

#include "qwd/random.hpp"

namespace qwd {

const char* to_string(Direction d) {
  return d == Direction::Minimize ? "min" : "max";
}

const char* to_string(Combiner c) {
  return c == Combiner::Sum ? "sum" : "mse-to-one";
}

namespace {

constexpr double kPi = 3.14159265358979323846;

Matrix diag_projector(int dim, int from, int to) {
  Matrix m = Matrix::Zero(dim, dim);
  for (int n = from; n < to; ++n) m(n, n) = 1.0;
  return m;
}

// |n+1><n| for n < dim-1, wrapping the top level to 0.
Matrix cyclic_increment(int dim) {
  Matrix m = Matrix::Zero(dim, dim);
  for (int n = 0; n < dim; ++n) m((n + 1) % dim, n) = 1.0;
  return m;
}

Matrix plus_projector() {
  Vector plus(2);
  plus << 1.0 / std::sqrt(2.0), 1.0 / std::sqrt(2.0);
  return la::projector(plus);
}

Matrix counter_observable(int dim, double scale) {
  Matrix m = Matrix::Zero(dim, dim);
  for (int n = 1; n < dim; ++n) m(n, n) = scale * n;
  return m;
}

}  // namespace

// ---------------------------------------------------------------------------
// Amplitude amplification

int paa_counter_dim(double p) {
  if (!(p > 0 && p <= 1))
    throw Error(ErrorKind::InvalidArgument, "p must lie in (0, 1]");
  return 4 * static_cast<int>(std::floor(1.0 / std::sqrt(p) + 1e-9)) + 1;
}

double paa_theta0(double p) {
  const double g = 2.0 * std::sqrt(p * (1.0 - p));
  return 4.0 * std::acos((1.0 - g) / (1.0 + g));
}

CaseStudySpec build_paa(double p) {
  const int T = paa_counter_dim(p);
  if (static_cast<std::size_t>(4) * T > Program().dim_cap)
    throw Error(ErrorKind::DimensionCapExceeded,
                "counter dimension " + std::to_string(T) + " exceeds the cap");
  Program prog;
  prog.add_register("q", 2).add_register("r", 2).add_register("t", T);
  prog.add_param("theta");
  Matrix a(2, 2);
  a << std::sqrt(1.0 - p), -std::sqrt(p), std::sqrt(p), std::sqrt(1.0 - p);
  const Matrix one = la::projector(la::basis(2, 1));
  const Matrix sigma = (la::kron(one, la::pauli('Y')) + la::identity(4)) / 4.0;
  prog.add_matrix("A", MatrixKind::Gate, a)
      .add_matrix("Adg", MatrixKind::Gate, a.adjoint())
      .add_matrix("Z", MatrixKind::Gate, la::pauli('Z'))
      .add_matrix("N", MatrixKind::Gate, cyclic_increment(T))
      .add_matrix("sigma", MatrixKind::Density, sigma)
      .add_matrix("O1", MatrixKind::Observable,
                  counter_observable(T, std::sqrt(p) / 4.0), {"t"});
  prog.add_measurement("M", {0, 1}, {one, la::projector(la::basis(2, 0))});
  prog.add_measurement("Mc", {0, 1},
                       {diag_projector(T, 0, T - 1), diag_projector(T, T - 1, T)});
  using namespace stmt;
  Statement body = seq({unitary("Z", {"q"}), unitary("Adg", {"q"}),
                        unitary("Z", {"q"}), unitary("A", {"q"}),
                        rot("theta", "sigma", {"q", "r"}),
                        if_meas("Mc", {"t"},
                                {{0, unitary("N", {"t"})}, {1, skip()}})});
  prog.body = seq({init("q"), init("r"), init("t"), unitary("A", {"q"}),
                   while_loop("M", {"r"}, std::move(body))});
  require_valid(prog);

  CaseStudySpec spec;
  spec.name = "paa";
  spec.inputs.push_back({DensityState::zero(prog),
                         observable_matrix(prog, "O1"), "O1"});
  spec.program = std::move(prog);
  spec.theta0 = {paa_theta0(p)};
  spec.direction = Direction::Minimize;
  spec.combiner = Combiner::Sum;
  spec.recommended_shots =
      static_cast<long>(std::llround(5.0 / std::sqrt(p) * 1000.0));
  return spec;
}

// ---------------------------------------------------------------------------
// Quantum walk. Register order inside 64 x 64 blocks: c_x, c_y, q_x, q_y.
// Coin directions: 00 left, 11 right, 01 up, 10 down.

namespace {

int qw_index(int cx, int cy, int x, int y) { return ((cx * 2 + cy) * 4 + x) * 4 + y; }

Matrix qw_shift_table(bool flip) {
  Matrix s = Matrix::Zero(64, 64);
  for (int cx = 0; cx < 2; ++cx)
    for (int cy = 0; cy < 2; ++cy)
      for (int x = 0; x < 4; ++x)
        for (int y = 0; y < 4; ++y) {
          int nx = x, ny = y;
          if (cx == 0 && cy == 0) nx = (x + 3) % 4;
          if (cx == 1 && cy == 1) nx = (x + 1) % 4;
          if (cx == 0 && cy == 1) ny = (y + 1) % 4;
          if (cx == 1 && cy == 0) ny = (y + 3) % 4;
          const int ncx = flip ? 1 - cx : cx, ncy = flip ? 1 - cy : cy;
          s(qw_index(ncx, ncy, nx, ny), qw_index(cx, cy, x, y)) = 1.0;
        }
  return s;
}

Matrix fourier(int d) {
  Matrix f(d, d);
  for (int j = 0; j < d; ++j)
    for (int k = 0; k < d; ++k)
      f(j, k) = std::polar(1.0 / std::sqrt(double(d)), 2.0 * kPi * j * k / d);
  return f;
}

}  // namespace

Matrix qw_shift_moving() { return qw_shift_table(false); }
Matrix qw_shift_flip() { return qw_shift_table(true); }

Matrix qw_shift(double theta1, double theta2) {
  const Matrix plus = plus_projector();
  const Matrix ry = la::kron({la::identity(2), la::expm_herm(plus, theta2),
                              la::identity(16)});
  const Matrix rx = la::kron({la::expm_herm(plus, theta1), la::identity(32)});
  return ry * rx * qw_shift_moving();
}

Matrix qw_marking_coin() {
  const Vector u = Vector::Constant(4, 0.5);
  const Matrix g = 2.0 * la::projector(u) - la::identity(4);
  const Matrix marked = la::projector(la::basis(16, 3 * 4 + 3));
  return la::kron(g, la::identity(16) - marked) - la::kron(la::identity(4), marked);
}

Matrix qw_uniform_position() { return la::kron(fourier(4), fourier(4)); }

CaseStudySpec build_qw(std::uint64_t seed) {
  Program prog;
  prog.add_register("cx", 2)
      .add_register("cy", 2)
      .add_register("qx", 4)
      .add_register("qy", 4)
      .add_register("t", 5);
  prog.add_param("theta1").add_param("theta2");
  const Matrix marked = la::projector(la::basis(16, 3 * 4 + 3));
  Matrix hadamard(2, 2);
  hadamard << 1, 1, 1, -1;
  hadamard /= std::sqrt(2.0);
  prog.add_matrix("H", MatrixKind::Gate, hadamard)
      .add_matrix("Hpos", MatrixKind::Gate, qw_uniform_position())
      .add_matrix("C", MatrixKind::Gate, qw_marking_coin())
      .add_matrix("Sm", MatrixKind::Gate, qw_shift_moving())
      .add_matrix("Inc", MatrixKind::Gate, cyclic_increment(5))
      .add_matrix("plus", MatrixKind::Density, plus_projector())
      .add_matrix("O2", MatrixKind::Observable, counter_observable(5, 0.25), {"t"});
  prog.add_measurement("M", {0, 1}, {marked, la::identity(16) - marked});
  prog.add_measurement("Mc", {0, 1}, {diag_projector(5, 0, 4), diag_projector(5, 4, 5)});
  using namespace stmt;
  const std::vector<std::string> all = {"cx", "cy", "qx", "qy"};
  auto shift = [&] {
    return seq({unitary("Sm", all), rot("theta1", "plus", {"cx"}),
                rot("theta2", "plus", {"cy"})});
  };
  Statement body = seq({init("cx"), init("cy"), init("qx"), init("qy"),
                        unitary("H", {"cx"}), unitary("H", {"cy"}),
                        unitary("Hpos", {"qx", "qy"}), unitary("C", all), shift(),
                        unitary("C", all), shift(),
                        if_meas("Mc", {"t"},
                                {{0, unitary("Inc", {"t"})}, {1, skip()}})});
  prog.body = seq({init("t"), while_loop("M", {"qx", "qy"}, std::move(body))});
  require_valid(prog);

  CaseStudySpec spec;
  spec.name = "qw";
  spec.inputs.push_back({DensityState::zero(prog),
                         observable_matrix(prog, "O2"), "O2"});
  spec.program = std::move(prog);
  Rng rng(mix_key(seed, 0x9a17));
  spec.theta0 = {2.0 * kPi * (0.1 + 0.8 * rng.uniform()),
                 2.0 * kPi * (0.1 + 0.8 * rng.uniform())};
  spec.direction = Direction::Minimize;
  spec.combiner = Combiner::Sum;
  spec.recommended_shots = 20000;
  return spec;
}

// ---------------------------------------------------------------------------
// Repeat-until-success. U acts on (r, q) with r the leading factor.

RusUnitaries rus_unitaries(std::uint64_t seed) {
  Rng rng(mix_key(seed, 0x5255));
  RusUnitaries out;
  out.v1 = rnd::haar_unitary(2, rng);
  out.v2 = rnd::haar_unitary(2, rng);
  Matrix hadamard(2, 2);
  hadamard << 1, 1, 1, -1;
  hadamard /= std::sqrt(2.0);
  const Matrix p0 = la::projector(la::basis(2, 0));
  const Matrix p1 = la::projector(la::basis(2, 1));
  out.u = (la::kron(p0, out.v1) + la::kron(p1, out.v2)) *
          la::kron(hadamard, la::identity(2));
  return out;
}

Matrix rus_recovery(double theta1, double theta2, double theta3) {
  const Matrix p0 = la::projector(la::basis(2, 0));
  return la::expm_herm(p0, theta1) * la::expm_herm(plus_projector(), theta2) *
         la::expm_herm(p0, theta3);
}

CaseStudySpec build_rus(std::uint64_t seed) {
  const RusUnitaries us = rus_unitaries(seed);
  Program prog;
  prog.add_register("q", 2).add_register("r", 2);
  prog.add_param("theta1").add_param("theta2").add_param("theta3");
  const Matrix p0 = la::projector(la::basis(2, 0));
  const Matrix p1 = la::projector(la::basis(2, 1));
  prog.add_matrix("U", MatrixKind::Gate, us.u)
      .add_matrix("P0", MatrixKind::Density, p0)
      .add_matrix("plus", MatrixKind::Density, plus_projector());
  const double h = 1.0 / std::sqrt(2.0);
  std::vector<Vector> psis(4, Vector(2));
  psis[0] << 1, 0;
  psis[1] << 0, 1;
  psis[2] << h, h;
  psis[3] << h, cplx(0, h);
  for (int j = 0; j < 4; ++j) {
    const Matrix target = us.v1 * la::projector(psis[j]) * us.v1.adjoint();
    prog.add_matrix("O3" + std::to_string(j + 1), MatrixKind::Observable,
                    (target + target.adjoint()) / 2.0, {"q"});
  }
  prog.add_measurement("M", {0, 1}, {p0, p1});
  using namespace stmt;
  Statement body = seq({rot("theta3", "P0", {"q"}), rot("theta2", "plus", {"q"}),
                        rot("theta1", "P0", {"q"}), init("r"),
                        unitary("U", {"r", "q"})});
  prog.body = seq({init("r"), unitary("U", {"r", "q"}),
                   while_loop("M", {"r"}, std::move(body))});
  require_valid(prog);

  CaseStudySpec spec;
  spec.name = "rus";
  for (int j = 0; j < 4; ++j) {
    const std::string name = "O3" + std::to_string(j + 1);
    spec.inputs.push_back({DensityState(la::kron(la::projector(psis[j]), p0)),
                           observable_matrix(prog, name), name});
  }
  spec.program = std::move(prog);
  Rng rng(mix_key(seed, 0x7e7a));
  spec.theta0 = {2.0 * kPi * rng.uniform(), 2.0 * kPi * rng.uniform(),
                 2.0 * kPi * rng.uniform()};
  spec.direction = Direction::Minimize;
  spec.combiner = Combiner::MseToOne;
  spec.recommended_shots = 47000;
  return spec;
}

}  // namespace qwd
