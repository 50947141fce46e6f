#include "qwd/sim.hpp"

#include <cmath>

namespace qwd {

DensityState DensityState::pure(const Vector& psi) {
  return DensityState(la::projector(psi));
}

DensityState DensityState::basis(std::size_t dim, std::size_t index) {
  Matrix m = Matrix::Zero(dim, dim);
  m(index, index) = 1.0;
  return DensityState(std::move(m));
}

DensityState DensityState::zero(const Program& program) {
  return basis(program.dimension(), 0);
}

void check_state(const Program& program, const DensityState& rho) {
  if (rho.dim() != program.dimension() || rho.matrix.cols() != rho.matrix.rows())
    throw Error(ErrorKind::DimMismatch,
                "state dimension " + std::to_string(rho.dim()) +
                    " does not match program dimension " +
                    std::to_string(program.dimension()));
}

EvalResult evaluate(const Program& program, const std::vector<double>& theta,
                    const DensityState& rho, const TruncationPolicy& policy) {
  check_state(program, rho);
  Executable exe(program, theta);
  DensityRun run;
  run.tol_mass = policy.tol_mass;
  run.k_max = policy.k_max;
  Slots state;
  state.m[0] = rho.matrix;
  run.run(exe.root(), state);
  EvalResult out;
  out.state.matrix = state.m[0].size()
                         ? state.m[0]
                         : Matrix::Zero(rho.matrix.rows(), rho.matrix.cols());
  out.residual = run.residual;
  return out;
}

ExpectationResult expectation(const Program& program,
                              const std::vector<double>& theta,
                              const DensityState& rho, const Matrix& observable,
                              const TruncationPolicy& policy) {
  if (observable.rows() != static_cast<Eigen::Index>(program.dimension()))
    throw Error(ErrorKind::DimMismatch, "observable dimension mismatch");
  EvalResult r = evaluate(program, theta, rho, policy);
  ExpectationResult out;
  out.value = (observable * r.state.matrix).trace().real();
  out.error_bound = r.residual * la::spectral_norm(observable);
  return out;
}

PureSampler::PureSampler(const DensityState& rho) {
  la::HermitianEigen eig = la::eigh(rho.matrix);
  weights_.resize(eig.values.size());
  for (Eigen::Index i = 0; i < eig.values.size(); ++i)
    total_ += (weights_[i] = std::max(0.0, eig.values(i)));
  vectors_ = std::move(eig.vectors);
}

Vector PureSampler::sample(Rng& rng) const {
  return vectors_.col(sample_index(weights_, total_, rng));
}

Vector sample_pure(const DensityState& rho, Rng& rng) {
  return PureSampler(rho).sample(rng);
}

Trajectory sample_trajectory(const Program& program,
                             const std::vector<double>& theta,
                             const DensityState& rho, Rng& rng, long k_max) {
  check_state(program, rho);
  Executable exe(program, theta);
  Vector psi = sample_pure(rho, rng);
  PureRun run;
  run.k_max = k_max;
  run.rng = &rng;
  run.run(exe.root(), psi);
  Trajectory t;
  t.final_state = DensityState::pure(psi / psi.norm());
  t.record = std::move(run.record);
  t.probability = run.probability;
  return t;
}

namespace {

const Node& loop_node(const Executable& exe, const Statement& loop) {
  if (loop.kind != StmtKind::While)
    throw Error(ErrorKind::InvalidArgument, "statement is not a while loop");
  const Node* node = exe.find(&loop);
  if (!node) throw Error(ErrorKind::InvalidArgument, "loop is not part of program");
  return *node;
}

}  // namespace

std::vector<double> loop_term_masses(const Program& program,
                                     const Statement& loop,
                                     const std::vector<double>& theta,
                                     const DensityState& rho, int n_max) {
  check_state(program, rho);
  Executable exe(program, theta);
  const Node& node = loop_node(exe, loop);
  DensityRun run;
  Matrix cur = rho.matrix;
  std::vector<double> masses;
  for (int n = 0; n <= n_max; ++n) {
    Matrix exit = cur;
    conjugate(node.meas_ops[0], node.targets, exit);
    masses.push_back(la::real_trace(exit));
    if (n == n_max) break;
    conjugate(node.meas_ops[1], node.targets, cur);
    Slots s;
    s.m[0] = std::move(cur);
    run.run(node.children[0], s);
    cur = s.m[0].size() ? std::move(s.m[0]) : Matrix::Zero(rho.dim(), rho.dim());
  }
  return masses;
}

double loop_term_mass(const Program& program, const Statement& loop,
                      const std::vector<double>& theta, const DensityState& rho,
                      int n) {
  return loop_term_masses(program, loop, theta, rho, n).back();
}

DensityState state_before(const Program& program, const Statement& loop,
                          const std::vector<double>& theta,
                          const DensityState& rho,
                          const TruncationPolicy& policy) {
  if (&program.body == &loop) return rho;
  if (program.body.kind != StmtKind::Seq)
    throw Error(ErrorKind::InvalidArgument, "loop is not at top level");
  Program prefix = program;
  std::vector<Statement> items;
  bool found = false;
  for (const auto& c : program.body.children) {
    if (&c == &loop) {
      found = true;
      break;
    }
    items.push_back(c);
  }
  if (!found) throw Error(ErrorKind::InvalidArgument, "loop is not at top level");
  prefix.body = stmt::seq(std::move(items));
  return evaluate(prefix, theta, rho, policy).state;
}

}  // namespace qwd
