#include "qwd/engine.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace qwd {

LocalOp::LocalOp(Matrix m) : dense(std::move(m)) {
  const Eigen::Index n = dense.rows();
  std::size_t nnz = 0;
  rows.assign(static_cast<std::size_t>(n), {});
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      if (dense(i, j) != cplx(0.0)) {
        rows[i].push_back({static_cast<int>(j), dense(i, j)});
        ++nnz;
      }
  sparse = n > 2 && 2 * nnz < static_cast<std::size_t>(n * n);
  diagonal = true;
  for (Eigen::Index i = 0; i < n && diagonal; ++i)
    for (const auto& [j, v] : rows[i])
      if (j != i) {
        diagonal = false;
        break;
      }
  if (diagonal) diag = dense.diagonal();
}

double LocalOp::row_cost() const {
  if (diagonal) return 1.0;
  if (!sparse) return static_cast<double>(dim());
  std::size_t nnz = 0;
  for (const auto& r : rows) nnz += r.size();
  return static_cast<double>(nnz) / static_cast<double>(dim());
}

namespace {

// Plain complex product; avoids the NaN-recovery path of operator*.
inline cplx mul(cplx a, cplx b) {
  return {a.real() * b.real() - a.imag() * b.imag(),
          a.real() * b.imag() + a.imag() * b.real()};
}

}  // namespace

void apply_left(const LocalOp& op, const Layout::Targets& t, Matrix& rho) {
  const std::size_t k = t.local_dim;
  const Eigen::Index cols = rho.cols();
  Matrix block(k, cols);
  for (std::size_t base : t.bases) {
    for (std::size_t a = 0; a < k; ++a) block.row(a) = rho.row(base + t.offsets[a]);
    if (op.sparse) {
      for (std::size_t a = 0; a < k; ++a) {
        auto row = rho.row(base + t.offsets[a]);
        row.setZero();
        for (const auto& [b, v] : op.rows[a]) row += v * block.row(b);
      }
    } else {
      Matrix out = op.dense * block;
      for (std::size_t a = 0; a < k; ++a) rho.row(base + t.offsets[a]) = out.row(a);
    }
  }
}

void apply_right_adjoint(const LocalOp& op, const Layout::Targets& t,
                         Matrix& rho) {
  const std::size_t k = t.local_dim;
  const Eigen::Index rows = rho.rows();
  Matrix block(rows, k);
  for (std::size_t base : t.bases) {
    for (std::size_t a = 0; a < k; ++a) block.col(a) = rho.col(base + t.offsets[a]);
    if (op.sparse) {
      // (rho K^dagger)[:, a] = sum_b rho[:, b] conj(K[a, b])
      for (std::size_t a = 0; a < k; ++a) {
        auto col = rho.col(base + t.offsets[a]);
        col.setZero();
        for (const auto& [b, v] : op.rows[a]) col += std::conj(v) * block.col(b);
      }
    } else {
      Matrix out = block * op.dense.adjoint();
      for (std::size_t a = 0; a < k; ++a) rho.col(base + t.offsets[a]) = out.col(a);
    }
  }
}

void conjugate(const LocalOp& op, const Layout::Targets& t, Matrix& rho) {
  apply_left(op, t, rho);
  apply_right_adjoint(op, t, rho);
}

void apply(const LocalOp& op, const Layout::Targets& t, Vector& psi) {
  const std::size_t k = t.local_dim;
  const std::size_t nb = t.bases.size();
  if (op.diagonal) {
    for (std::size_t base : t.bases)
      for (std::size_t a = 0; a < k; ++a) {
        cplx& z = psi(base + t.offsets[a]);
        z = mul(op.diag(a), z);
      }
    return;
  }
  if (op.sparse) {
    thread_local Vector x;
    x.resize(k);
    for (std::size_t base : t.bases) {
      for (std::size_t a = 0; a < k; ++a) x(a) = psi(base + t.offsets[a]);
      for (std::size_t a = 0; a < k; ++a) {
        cplx acc = 0;
        for (const auto& [b, v] : op.rows[a]) acc += mul(v, x(b));
        psi(base + t.offsets[a]) = acc;
      }
    }
    return;
  }
  // Gather all bases into one block so the update is a single product.
  thread_local Matrix in, out;
  in.resize(k, nb);
  out.resize(k, nb);
  for (std::size_t b = 0; b < nb; ++b)
    for (std::size_t a = 0; a < k; ++a) in(a, b) = psi(t.bases[b] + t.offsets[a]);
  if (k <= 16) {
    // Small blocks: column updates out(:, b) += in(c, b) * op(:, c) beat the
    // blocked product's setup cost.
    const double* u = reinterpret_cast<const double*>(op.dense.data());
    for (std::size_t b = 0; b < nb; ++b) {
      double* y = reinterpret_cast<double*>(out.col(b).data());
      for (std::size_t i = 0; i < 2 * k; ++i) y[i] = 0.0;
      for (std::size_t c = 0; c < k; ++c) {
        const double xr = in(c, b).real(), xi = in(c, b).imag();
        const double* col = u + 2 * k * c;
        for (std::size_t a = 0; a < k; ++a) {
          y[2 * a] += col[2 * a] * xr - col[2 * a + 1] * xi;
          y[2 * a + 1] += col[2 * a] * xi + col[2 * a + 1] * xr;
        }
      }
    }
  } else {
    out.noalias() = op.dense * in;
  }
  for (std::size_t b = 0; b < nb; ++b)
    for (std::size_t a = 0; a < k; ++a) psi(t.bases[b] + t.offsets[a]) = out(a, b);
}

void replace_targets(const Matrix& sigma, const Layout::Targets& t,
                     Matrix& rho) {
  const std::size_t k = t.local_dim;
  const std::size_t nb = t.bases.size();
  Matrix reduced = Matrix::Zero(nb, nb);
  for (std::size_t a = 0; a < nb; ++a)
    for (std::size_t b = 0; b < nb; ++b) {
      cplx acc = 0;
      for (std::size_t n = 0; n < k; ++n)
        acc += rho(t.bases[a] + t.offsets[n], t.bases[b] + t.offsets[n]);
      reduced(a, b) = acc;
    }
  for (std::size_t a = 0; a < nb; ++a)
    for (std::size_t b = 0; b < nb; ++b)
      for (std::size_t i = 0; i < k; ++i)
        for (std::size_t j = 0; j < k; ++j)
          rho(t.bases[a] + t.offsets[i], t.bases[b] + t.offsets[j]) =
              reduced(a, b) * sigma(i, j);
}

std::uint64_t mix_key(std::uint64_t seed, std::uint64_t shot) {
  // splitmix64 finalizer over a combination of the two keys
  std::uint64_t z = seed * 0x9E3779B97F4A7C15ULL + shot + 0x632BE59BD9B4E019ULL;
  for (int round = 0; round < 2; ++round) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    z ^= z >> 31;
    z += shot * 0xD1B54A32D192ED03ULL;
  }
  return z;
}

std::size_t sample_index(const std::vector<double>& weights, double total,
                         Rng& rng) {
  double u = rng.uniform() * total;
  std::size_t last_positive = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (weights[i] <= 0) continue;
    last_positive = i;
    if (u < weights[i]) return i;
    u -= weights[i];
  }
  return last_positive;
}

// ---------------------------------------------------------------------------
// Compilation

Executable::Executable(const Program& program, const std::vector<double>& theta)
    : program_(&program), layout_(program.dims()) {
  if (theta.size() != program.params.size())
    throw Error(ErrorKind::InvalidArgument,
                "expected " + std::to_string(program.params.size()) +
                    " parameter values, got " + std::to_string(theta.size()));
  root_ = compile(program.body, theta);
  // Collect site pointers after the tree is final (no reallocation later).
  std::function<void(const Node&)> walk = [&](const Node& n) {
    if (n.kind == Node::Kind::Site) sites_.push_back(&n);
    for (const auto& c : n.children) walk(c);
  };
  walk(root_);
}

Layout::Targets Executable::targets(const std::vector<std::string>& regs) const {
  std::vector<int> idx;
  for (const auto& r : regs) {
    int i = program_->register_index(r);
    if (i < 0) throw Error(ErrorKind::UndeclaredName, "register '" + r + "'");
    idx.push_back(i);
  }
  return layout_.targets(idx);
}

const Node* Executable::find(const Statement* source) const {
  std::function<const Node*(const Node&)> walk = [&](const Node& n) -> const Node* {
    if (n.source == source) return &n;
    for (const auto& c : n.children)
      if (const Node* hit = walk(c)) return hit;
    return nullptr;
  };
  return walk(root_);
}

bool Executable::fuse_into(Node& first, const Node& second) const {
  constexpr std::size_t kMaxFusedDim = 64;
  using K = Node::Kind;
  const bool unitary_pair = first.kind == K::Unitary && second.kind == K::Unitary;
  const bool absorb = first.kind == K::Prepare && second.kind == K::Unitary;
  const bool prepares = first.kind == K::Prepare && second.kind == K::Prepare;
  if (!unitary_pair && !absorb && !prepares) return false;
  std::vector<int> regs = first.targets.regs;
  bool overlap = false;
  for (int r : second.targets.regs) {
    if (std::find(regs.begin(), regs.end(), r) == regs.end())
      regs.push_back(r);
    else
      overlap = true;
  }
  // A unitary is absorbed into a preparation only when it acts inside it;
  // preparations merge only on disjoint targets.
  if (absorb && regs.size() != first.targets.regs.size()) return false;
  if (prepares && overlap) return false;
  std::vector<int> dims;
  std::size_t dim = 1;
  for (int r : regs) {
    dims.push_back(layout_.dims()[r]);
    dim *= static_cast<std::size_t>(dims.back());
  }
  if (dim > kMaxFusedDim) return false;
  const Layout local(dims);
  auto embed = [&](const Node& node) {
    std::vector<int> pos;
    for (int r : node.targets.regs)
      pos.push_back(static_cast<int>(std::find(regs.begin(), regs.end(), r) - regs.begin()));
    Matrix m = Matrix::Identity(dim, dim);
    apply_left(node.op, local.targets(pos), m);
    return m;
  };
  auto set_sigma = [&](Matrix sigma) {
    la::HermitianEigen eig = la::eigh(sigma);
    first.sigma = std::move(sigma);
    first.sigma_weights = eig.values;
    first.sigma_vectors = eig.vectors;
    first.targets = layout_.targets(regs);
  };
  if (prepares) {
    set_sigma(la::kron(first.sigma, second.sigma));
    return true;
  }
  if (absorb) {
    const Matrix u = embed(second);
    set_sigma(u * first.sigma * u.adjoint());
    return true;
  }
  LocalOp fused(embed(second) * embed(first));
  // Cost per global row: each op runs once over the full space.
  if (fused.row_cost() > first.op.row_cost() + second.op.row_cost()) return false;
  first.targets = layout_.targets(regs);
  first.op = std::move(fused);
  return true;
}

Node Executable::compile(const Statement& s, const std::vector<double>& theta) {
  Node n;
  n.source = &s;
  auto density_of = [&](const std::string& name) -> const Matrix& {
    const MatrixDecl* d = program_->find_matrix(name, MatrixKind::Density);
    if (!d) throw Error(ErrorKind::UndeclaredName, "density '" + name + "'");
    return d->value;
  };
  auto set_prepare = [&](const Matrix& sigma) {
    n.kind = Node::Kind::Prepare;
    n.sigma = sigma;
    la::HermitianEigen eig = la::eigh(sigma);
    n.sigma_weights = eig.values;
    n.sigma_vectors = eig.vectors;
  };
  switch (s.kind) {
    case StmtKind::Skip:
      n.kind = Node::Kind::Skip;
      break;
    case StmtKind::Init: {
      n.targets = targets(s.registers);
      Matrix zero = Matrix::Zero(n.targets.local_dim, n.targets.local_dim);
      zero(0, 0) = 1.0;
      set_prepare(zero);
      break;
    }
    case StmtKind::InitDensity:
      n.targets = targets(s.registers);
      set_prepare(density_of(s.name));
      break;
    case StmtKind::Unitary: {
      const MatrixDecl* g = program_->find_matrix(s.name, MatrixKind::Gate);
      if (!g) throw Error(ErrorKind::UndeclaredName, "gate '" + s.name + "'");
      n.kind = Node::Kind::Unitary;
      n.targets = targets(s.registers);
      n.op = LocalOp(g->value);
      break;
    }
    case StmtKind::ParamUnitary: {
      const Param* p = program_->find_param(s.param);
      if (!p) throw Error(ErrorKind::UndeclaredName, "parameter '" + s.param + "'");
      n.kind = Node::Kind::Unitary;
      n.targets = targets(s.registers);
      n.op = LocalOp(la::expm_herm(density_of(s.name), theta[p->index]));
      break;
    }
    case StmtKind::Eul:
      n.kind = Node::Kind::Site;
      n.targets = targets(s.registers);
      n.sigma = density_of(s.name);
      n.site = static_cast<int>(site_count_++);
      break;
    case StmtKind::Seq:
      n.kind = Node::Kind::Seq;
      for (const auto& c : s.children) {
        Node child = compile(c, theta);
        if (!n.children.empty() && fuse_into(n.children.back(), child)) continue;
        n.children.push_back(std::move(child));
      }
      break;
    case StmtKind::IfMeas:
    case StmtKind::While: {
      const MeasDecl* m = program_->find_measurement(s.name);
      if (!m) throw Error(ErrorKind::UndeclaredName, "measurement '" + s.name + "'");
      n.targets = targets(s.registers);
      n.meas_name = s.name;
      if (s.kind == StmtKind::While) {
        n.kind = Node::Kind::Loop;
        n.labels = {0, 1};
        n.meas_ops = {LocalOp(*m->op(0)), LocalOp(*m->op(1))};
        n.children.push_back(compile(s.body(), theta));
      } else {
        n.kind = Node::Kind::Branch;
        n.labels = s.labels;
        for (std::size_t i = 0; i < s.children.size(); ++i) {
          n.meas_ops.push_back(LocalOp(*m->op(s.labels[i])));
          n.children.push_back(compile(s.children[i], theta));
        }
      }
      break;
    }
  }
  return n;
}

// ---------------------------------------------------------------------------
// Density execution

namespace {

std::string short_number(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", x);
  return buf;
}

}  // namespace

double Slots::mass() const {
  double total = 0;
  for (std::size_t i = 0; i < m.size(); ++i)
    if (mass_slot[i] && m[i].size()) total += la::real_trace(m[i]);
  return total;
}

void Slots::add(const Slots& other) {
  if (m.size() < other.m.size()) {
    m.resize(other.m.size());
    mass_slot = other.mass_slot;
  }
  for (std::size_t i = 0; i < other.m.size(); ++i) {
    if (!other.m[i].size()) continue;
    if (m[i].size())
      m[i] += other.m[i];
    else
      m[i] = other.m[i];
  }
}

namespace {

Slots measured(const Slots& in, const LocalOp& op, const Layout::Targets& t) {
  Slots out = in;
  for (auto& rho : out.m)
    if (rho.size()) conjugate(op, t, rho);
  return out;
}

}  // namespace

void DensityRun::run(const Node& node, Slots& state) {
  switch (node.kind) {
    case Node::Kind::Skip:
      return;
    case Node::Kind::Unitary:
      for (auto& rho : state.m)
        if (rho.size()) conjugate(node.op, node.targets, rho);
      return;
    case Node::Kind::Prepare:
      for (auto& rho : state.m)
        if (rho.size()) replace_targets(node.sigma, node.targets, rho);
      return;
    case Node::Kind::Seq:
      for (const auto& c : node.children) run(c, state);
      return;
    case Node::Kind::Site:
      if (on_site) on_site(node, state);
      return;
    case Node::Kind::Branch: {
      Slots total(state.m.size());
      total.mass_slot = state.mass_slot;
      for (std::size_t i = 0; i < node.children.size(); ++i) {
        Slots arm = measured(state, node.meas_ops[i], node.targets);
        run(node.children[i], arm);
        total.add(arm);
      }
      state = std::move(total);
      return;
    }
    case Node::Kind::Loop: {
      Slots out(state.m.size());
      out.mass_slot = state.mass_slot;
      Slots cur = std::move(state);
      double prev_mass = cur.mass();
      for (long k = 0;; ++k) {
        if (k >= k_max)
          throw Error(ErrorKind::LoopBudgetExceeded,
                      "loop mass did not fall below " + short_number(tol_mass) +
                          " within " + std::to_string(k_max) + " iterations");
        out.add(measured(cur, node.meas_ops[0], node.targets));
        cur = measured(cur, node.meas_ops[1], node.targets);
        run(node.children[0], cur);
        const double m = cur.mass();
        if (m < tol_mass) {
          residual += std::max(m, 0.0);
          if (prev_mass > 0) worst_drop_ratio = std::max(worst_drop_ratio, m / prev_mass);
          dropped.add(cur);
          break;
        }
        prev_mass = m;
      }
      state = std::move(out);
      return;
    }
  }
}

// ---------------------------------------------------------------------------
// Pure-state trajectory execution

namespace {

double target_weight(const Vector& psi, const Layout::Targets& t, std::size_t n) {
  double w = 0;
  for (std::size_t base : t.bases) w += std::norm(psi(base + t.offsets[n]));
  return w;
}

}  // namespace

void PureRun::run(const Node& node, Vector& psi) {
  switch (node.kind) {
    case Node::Kind::Skip:
      return;
    case Node::Kind::Unitary:
      apply(node.op, node.targets, psi);
      return;
    case Node::Kind::Seq:
      for (const auto& c : node.children) run(c, psi);
      return;
    case Node::Kind::Site:
      if (on_site) on_site(node, psi, *this);
      return;
    case Node::Kind::Prepare: {
      // Unravel tr_t(.) (x) sigma: measure the targets in the computational
      // basis, then draw an eigenvector of sigma.
      const Layout::Targets& t = node.targets;
      const std::size_t k = t.local_dim;
      std::vector<double> w(k);
      double total = 0;
      for (std::size_t n = 0; n < k; ++n) total += (w[n] = target_weight(psi, t, n));
      const std::size_t n = sample_index(w, total, *rng);
      std::vector<double> lam(k);
      double lam_total = 0;
      for (std::size_t i = 0; i < k; ++i)
        lam_total += (lam[i] = std::max(0.0, node.sigma_weights(i)));
      const std::size_t e = sample_index(lam, lam_total, *rng);
      const double norm = std::sqrt(w[n]);
      for (std::size_t base : t.bases) {
        const cplx amp = psi(base + t.offsets[n]) * (1.0 / norm);
        for (std::size_t m = 0; m < k; ++m)
          psi(base + t.offsets[m]) = mul(amp, node.sigma_vectors(m, e));
      }
      return;
    }
    case Node::Kind::Branch:
    case Node::Kind::Loop: {
      auto measure = [&](int& label) {
        const std::size_t count = node.meas_ops.size();
        thread_local std::vector<double> w;
        w.assign(count, 0.0);
        double total = 0;
        std::size_t pick = 0;
        bool all_diagonal = true;
        for (const auto& op : node.meas_ops) all_diagonal = all_diagonal && op.diagonal;
        if (all_diagonal) {
          // Branch weights from the target marginals; only the drawn branch
          // is applied.
          const Layout::Targets& t = node.targets;
          thread_local std::vector<double> marginal;
          marginal.assign(t.local_dim, 0.0);
          for (std::size_t a = 0; a < t.local_dim; ++a)
            marginal[a] = target_weight(psi, t, a);
          for (std::size_t i = 0; i < count; ++i) {
            for (std::size_t a = 0; a < t.local_dim; ++a)
              w[i] += std::norm(node.meas_ops[i].diag(a)) * marginal[a];
            total += w[i];
          }
          pick = sample_index(w, total, *rng);
          apply(node.meas_ops[pick], t, psi);
          psi /= std::sqrt(w[pick]);
        } else {
          thread_local std::vector<Vector> branches;
          if (branches.size() < count) branches.resize(count);
          for (std::size_t i = 0; i < count; ++i) {
            branches[i] = psi;
            apply(node.meas_ops[i], node.targets, branches[i]);
            total += (w[i] = branches[i].squaredNorm());
          }
          pick = sample_index(w, total, *rng);
          psi = branches[pick] / std::sqrt(w[pick]);
        }
        probability *= w[pick] / total;
        label = node.labels[pick];
        if (keep_record) record.emplace_back(node.meas_name, label);
        return pick;
      };
      int label = 0;
      if (node.kind == Node::Kind::Branch) {
        const std::size_t pick = measure(label);
        run(node.children[pick], psi);
        return;
      }
      for (long k = 0;; ++k) {
        measure(label);
        if (label == 0) return;
        if (k >= k_max)
          throw Error(ErrorKind::ShotBudgetExceeded,
                      "loop exceeded " + std::to_string(k_max) +
                          " iterations in one shot");
        ++loop_iterations;
        run(node.children[0], psi);
      }
    }
  }
}

}  // namespace qwd
