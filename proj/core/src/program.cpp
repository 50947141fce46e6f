#include "qwd/program.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "qwd/layout.hpp"

namespace qwd {

const char* keyword(MatrixKind kind) {
  switch (kind) {
    case MatrixKind::Gate: return "gate";
    case MatrixKind::Density: return "density";
    case MatrixKind::Observable: return "obs";
  }
  return "?";
}

const Matrix* MeasDecl::op(int label) const {
  for (std::size_t i = 0; i < labels.size(); ++i)
    if (labels[i] == label) return &ops[i];
  return nullptr;
}

namespace stmt {

Statement skip() { return Statement{}; }

Statement init(const std::string& reg) {
  Statement s;
  s.kind = StmtKind::Init;
  s.registers = {reg};
  return s;
}

Statement init_density(const std::string& density,
                       std::vector<std::string> regs) {
  Statement s;
  s.kind = StmtKind::InitDensity;
  s.name = density;
  s.registers = std::move(regs);
  return s;
}

Statement unitary(const std::string& gate, std::vector<std::string> regs) {
  Statement s;
  s.kind = StmtKind::Unitary;
  s.name = gate;
  s.registers = std::move(regs);
  return s;
}

Statement rot(const std::string& param, const std::string& density,
              std::vector<std::string> regs) {
  Statement s;
  s.kind = StmtKind::ParamUnitary;
  s.param = param;
  s.name = density;
  s.registers = std::move(regs);
  return s;
}

Statement seq(std::vector<Statement> items) {
  Statement s;
  s.kind = StmtKind::Seq;
  for (auto& item : items) {
    if (item.kind == StmtKind::Seq) {
      for (auto& c : item.children) s.children.push_back(std::move(c));
    } else {
      s.children.push_back(std::move(item));
    }
  }
  if (s.children.empty()) return skip();
  if (s.children.size() == 1) return std::move(s.children.front());
  return s;
}

Statement if_meas(const std::string& meas, std::vector<std::string> regs,
                  std::vector<std::pair<int, Statement>> branches) {
  Statement s;
  s.kind = StmtKind::IfMeas;
  s.name = meas;
  s.registers = std::move(regs);
  for (auto& [label, branch] : branches) {
    s.labels.push_back(label);
    s.children.push_back(std::move(branch));
  }
  return s;
}

Statement while_loop(const std::string& meas, std::vector<std::string> regs,
                     Statement body) {
  Statement s;
  s.kind = StmtKind::While;
  s.name = meas;
  s.registers = std::move(regs);
  s.children.push_back(std::move(body));
  return s;
}

Statement eul(const std::string& param, const std::string& density,
              std::vector<std::string> regs) {
  Statement s = rot(param, density, std::move(regs));
  s.kind = StmtKind::Eul;
  return s;
}

}  // namespace stmt

bool structurally_equal(const Statement& a, const Statement& b) {
  if (a.kind != b.kind || a.name != b.name || a.param != b.param ||
      a.registers != b.registers || a.labels != b.labels ||
      a.children.size() != b.children.size())
    return false;
  for (std::size_t i = 0; i < a.children.size(); ++i)
    if (!structurally_equal(a.children[i], b.children[i])) return false;
  return true;
}

bool structurally_equal(const Program& a, const Program& b) {
  if (a.registers.size() != b.registers.size() ||
      a.params.size() != b.params.size() ||
      a.matrices.size() != b.matrices.size() ||
      a.measurements.size() != b.measurements.size())
    return false;
  for (std::size_t i = 0; i < a.registers.size(); ++i)
    if (a.registers[i].name != b.registers[i].name ||
        a.registers[i].dim != b.registers[i].dim)
      return false;
  for (std::size_t i = 0; i < a.params.size(); ++i)
    if (a.params[i].name != b.params[i].name ||
        a.params[i].index != b.params[i].index)
      return false;
  for (std::size_t i = 0; i < a.matrices.size(); ++i) {
    const auto& x = a.matrices[i];
    const auto& y = b.matrices[i];
    if (x.name != y.name || x.kind != y.kind || x.registers != y.registers ||
        x.value.rows() != y.value.rows() || x.value.cols() != y.value.cols() ||
        x.value != y.value)
      return false;
  }
  for (std::size_t i = 0; i < a.measurements.size(); ++i) {
    const auto& x = a.measurements[i];
    const auto& y = b.measurements[i];
    if (x.name != y.name || x.labels != y.labels || x.ops.size() != y.ops.size())
      return false;
    for (std::size_t k = 0; k < x.ops.size(); ++k)
      if (x.ops[k].rows() != y.ops[k].rows() || x.ops[k] != y.ops[k])
        return false;
  }
  return structurally_equal(a.body, b.body);
}

const Register* Program::find_register(const std::string& name) const {
  for (const auto& r : registers)
    if (r.name == name) return &r;
  return nullptr;
}

int Program::register_index(const std::string& name) const {
  for (std::size_t i = 0; i < registers.size(); ++i)
    if (registers[i].name == name) return static_cast<int>(i);
  return -1;
}

const MatrixDecl* Program::find_matrix(const std::string& name) const {
  for (const auto& m : matrices)
    if (m.name == name) return &m;
  return nullptr;
}

const MatrixDecl* Program::find_matrix(const std::string& name,
                                       MatrixKind kind) const {
  const MatrixDecl* m = find_matrix(name);
  return (m && m->kind == kind) ? m : nullptr;
}

const MeasDecl* Program::find_measurement(const std::string& name) const {
  for (const auto& m : measurements)
    if (m.name == name) return &m;
  return nullptr;
}

const Param* Program::find_param(const std::string& name) const {
  for (const auto& p : params)
    if (p.name == name) return &p;
  return nullptr;
}

std::vector<int> Program::dims() const {
  std::vector<int> out;
  for (const auto& r : registers) out.push_back(r.dim);
  return out;
}

std::size_t Program::dimension() const {
  std::size_t d = 1;
  for (const auto& r : registers) d *= static_cast<std::size_t>(r.dim);
  return d;
}

std::size_t Program::dimension_of(const std::vector<std::string>& regs) const {
  std::size_t d = 1;
  for (const auto& name : regs) {
    const Register* r = find_register(name);
    if (!r) throw Error(ErrorKind::UndeclaredName, "register '" + name + "'");
    d *= static_cast<std::size_t>(r->dim);
  }
  return d;
}

namespace {

bool name_taken(const Program& p, const std::string& name) {
  return p.find_register(name) || p.find_param(name) || p.find_matrix(name) ||
         p.find_measurement(name);
}

void require_fresh(const Program& p, const std::string& name) {
  if (name_taken(p, name))
    throw Error(ErrorKind::DuplicateName, "'" + name + "' declared twice");
}

}  // namespace

Program& Program::add_register(const std::string& name, int dim) {
  require_fresh(*this, name);
  registers.push_back({name, dim, {}});
  return *this;
}

Program& Program::add_param(const std::string& name) {
  require_fresh(*this, name);
  params.push_back({name, static_cast<int>(params.size()), {}});
  return *this;
}

Program& Program::add_matrix(const std::string& name, MatrixKind kind,
                             Matrix value, std::vector<std::string> regs) {
  require_fresh(*this, name);
  matrices.push_back({name, kind, std::move(value), std::move(regs), {}});
  return *this;
}

Program& Program::add_measurement(const std::string& name,
                                  std::vector<int> labels,
                                  std::vector<Matrix> ops) {
  require_fresh(*this, name);
  measurements.push_back({name, std::move(labels), std::move(ops), {}});
  return *this;
}

// ---------------------------------------------------------------------------
// Validation

namespace {

class Validator {
 public:
  explicit Validator(const Program& p) : p_(p) {}

  ValidationReport run() {
    check_declarations();
    check_statement(p_.body, "body");
    return std::move(report_);
  }

 private:
  void fail(ErrorKind kind, std::string message, std::string path,
            SourceSpan span) {
    report_.errors.push_back(
        {kind, std::move(message), std::move(path), span});
  }

  void check_declarations() {
    std::set<std::string> names;
    auto claim = [&](const std::string& name, const std::string& path,
                     SourceSpan span) {
      if (!names.insert(name).second)
        fail(ErrorKind::DuplicateName, "'" + name + "' declared twice", path,
             span);
    };
    for (const auto& r : p_.registers) {
      const std::string path = "var " + r.name;
      claim(r.name, path, r.span);
      if (r.dim < 2)
        fail(ErrorKind::InvalidProgram, "register dimension must be >= 2",
             path, r.span);
    }
    if (p_.registers.empty())
      fail(ErrorKind::InvalidProgram, "program declares no registers",
           "program", {});
    for (std::size_t i = 0; i < p_.params.size(); ++i) {
      const auto& prm = p_.params[i];
      claim(prm.name, "param " + prm.name, prm.span);
      if (prm.index != static_cast<int>(i))
        fail(ErrorKind::InvalidProgram, "parameter indices must be dense",
             "param " + prm.name, prm.span);
    }
    bool sizes_ok = true;
    for (const auto& r : p_.registers) sizes_ok = sizes_ok && r.dim >= 2;
    double log_dim = 0;
    for (const auto& r : p_.registers) log_dim += std::log(std::max(r.dim, 1));
    if (log_dim > std::log(static_cast<double>(p_.dim_cap)) + 1e-12 ||
        (sizes_ok && p_.dimension() > p_.dim_cap))
      fail(ErrorKind::DimensionCapExceeded,
           "total dimension exceeds cap " + std::to_string(p_.dim_cap),
           "program", {});

    for (const auto& m : p_.matrices) {
      const std::string path = std::string(keyword(m.kind)) + " " + m.name;
      claim(m.name, path, m.span);
      if (!la::is_square(m.value)) {
        fail(ErrorKind::DimMismatch, "matrix must be square and non-empty",
             path, m.span);
        continue;
      }
      switch (m.kind) {
        case MatrixKind::Gate:
          if (!la::is_unitary(m.value))
            fail(ErrorKind::NonUnitaryGate, "U^dagger U != I", path, m.span);
          break;
        case MatrixKind::Density:
          if (!la::is_density(m.value))
            fail(ErrorKind::NonDensitySigma, "not PSD with unit trace", path,
                 m.span);
          break;
        case MatrixKind::Observable: {
          if (!la::is_hermitian(m.value))
            fail(ErrorKind::NonHermitianObservable, "not Hermitian", path,
                 m.span);
          std::size_t expected = 0;
          if (m.registers.empty()) {
            expected = sizes_ok ? p_.dimension() : 0;
          } else if (check_register_list(m.registers, path, m.span)) {
            expected = p_.dimension_of(m.registers);
          }
          if (expected && static_cast<std::size_t>(m.value.rows()) != expected)
            fail(ErrorKind::DimMismatch,
                 "observable has dimension " + std::to_string(m.value.rows()) +
                     ", expected " + std::to_string(expected),
                 path, m.span);
          break;
        }
      }
    }
    for (const auto& m : p_.measurements) {
      const std::string path = "meas " + m.name;
      claim(m.name, path, m.span);
      if (m.ops.empty() || m.ops.size() != m.labels.size()) {
        fail(ErrorKind::IncompleteMeasurement, "no outcomes", path, m.span);
        continue;
      }
      std::set<int> seen;
      bool shapes_ok = true;
      for (std::size_t k = 0; k < m.ops.size(); ++k) {
        if (m.labels[k] < 0 || !seen.insert(m.labels[k]).second)
          fail(ErrorKind::InvalidProgram,
               "outcome labels must be distinct nonnegative integers", path,
               m.span);
        if (!la::is_square(m.ops[k]) || m.ops[k].rows() != m.ops[0].rows())
          shapes_ok = false;
      }
      if (!shapes_ok) {
        fail(ErrorKind::DimMismatch, "measurement operators differ in shape",
             path, m.span);
        continue;
      }
      Matrix sum = Matrix::Zero(m.ops[0].rows(), m.ops[0].cols());
      for (const auto& op : m.ops) sum += op.adjoint() * op;
      if (la::max_abs(sum - la::identity(sum.rows())) > kMatrixTol)
        fail(ErrorKind::IncompleteMeasurement, "sum of M^dagger M != I", path,
             m.span);
    }
  }

  bool check_register_list(const std::vector<std::string>& regs,
                           const std::string& path, SourceSpan span) {
    bool ok = !regs.empty();
    if (regs.empty())
      fail(ErrorKind::InvalidProgram, "empty register list", path, span);
    std::set<std::string> seen;
    for (const auto& r : regs) {
      if (!p_.find_register(r)) {
        fail(ErrorKind::UndeclaredName, "register '" + r + "'", path, span);
        ok = false;
      } else if (!seen.insert(r).second) {
        fail(ErrorKind::InvalidProgram, "register '" + r + "' repeated", path,
             span);
        ok = false;
      } else if (p_.find_register(r)->dim < 2) {
        ok = false;
      }
    }
    return ok;
  }

  void check_operator_dim(const Matrix& m, const std::vector<std::string>& regs,
                          const std::string& what, const std::string& path,
                          SourceSpan span) {
    const std::size_t expected = p_.dimension_of(regs);
    if (static_cast<std::size_t>(m.rows()) != expected)
      fail(ErrorKind::DimMismatch,
           what + " has dimension " + std::to_string(m.rows()) +
               " but targets have dimension " + std::to_string(expected),
           path, span);
  }

  void check_density_use(const Statement& s, const std::string& path) {
    const MatrixDecl* d = p_.find_matrix(s.name);
    if (!d) {
      fail(ErrorKind::UndeclaredName, "density '" + s.name + "'", path, s.span);
    } else if (d->kind != MatrixKind::Density) {
      fail(ErrorKind::NonDensitySigma,
           "'" + s.name + "' is not declared as a density", path, s.span);
    } else if (check_register_list(s.registers, path, s.span)) {
      check_operator_dim(d->value, s.registers, "density '" + s.name + "'",
                         path, s.span);
    }
  }

  void check_statement(const Statement& s, const std::string& path) {
    switch (s.kind) {
      case StmtKind::Skip:
        break;
      case StmtKind::Init:
        if (s.registers.size() != 1)
          fail(ErrorKind::InvalidProgram, "init takes one register", path,
               s.span);
        else
          check_register_list(s.registers, path, s.span);
        break;
      case StmtKind::InitDensity:
        check_density_use(s, path);
        break;
      case StmtKind::Unitary: {
        const MatrixDecl* g = p_.find_matrix(s.name);
        if (!g) {
          fail(ErrorKind::UndeclaredName, "gate '" + s.name + "'", path,
               s.span);
        } else if (g->kind != MatrixKind::Gate) {
          fail(ErrorKind::NonUnitaryGate,
               "'" + s.name + "' is not declared as a gate", path, s.span);
        } else if (check_register_list(s.registers, path, s.span)) {
          check_operator_dim(g->value, s.registers, "gate '" + s.name + "'",
                             path, s.span);
        }
        break;
      }
      case StmtKind::ParamUnitary:
      case StmtKind::Eul:
        if (!p_.find_param(s.param))
          fail(ErrorKind::UndeclaredName, "parameter '" + s.param + "'", path,
               s.span);
        check_density_use(s, path);
        break;
      case StmtKind::Seq:
        for (std::size_t i = 0; i < s.children.size(); ++i)
          check_statement(s.children[i], path + ".seq[" + std::to_string(i) + "]");
        break;
      case StmtKind::IfMeas: {
        const MeasDecl* m = check_measurement_use(s, path);
        if (m) {
          std::set<int> covered;
          for (int label : s.labels) {
            if (!m->op(label))
              fail(ErrorKind::InvalidProgram,
                   "branch for undeclared outcome " + std::to_string(label),
                   path, s.span);
            if (!covered.insert(label).second)
              fail(ErrorKind::InvalidProgram,
                   "duplicate branch " + std::to_string(label), path, s.span);
          }
          for (int label : m->labels)
            if (!covered.count(label))
              fail(ErrorKind::InvalidProgram,
                   "no branch for outcome " + std::to_string(label), path,
                   s.span);
        }
        for (std::size_t i = 0; i < s.children.size(); ++i)
          check_statement(s.children[i],
                          path + ".if[" + std::to_string(s.labels.at(i)) + "]");
        break;
      }
      case StmtKind::While: {
        const MeasDecl* m = check_measurement_use(s, path);
        if (m) {
          std::vector<int> labels = m->labels;
          std::sort(labels.begin(), labels.end());
          if (labels != std::vector<int>{0, 1})
            fail(ErrorKind::InvalidProgram,
                 "loop guard '" + s.name + "' must have outcomes {0,1}", path,
                 s.span);
        }
        if (s.children.size() != 1)
          fail(ErrorKind::InvalidProgram, "while needs exactly one body", path,
               s.span);
        else
          check_statement(s.children[0], path + ".while.body");
        break;
      }
    }
  }

  const MeasDecl* check_measurement_use(const Statement& s,
                                        const std::string& path) {
    const MeasDecl* m = p_.find_measurement(s.name);
    if (!m) {
      fail(ErrorKind::UndeclaredName, "measurement '" + s.name + "'", path,
           s.span);
      return nullptr;
    }
    if (check_register_list(s.registers, path, s.span) && !m->ops.empty())
      check_operator_dim(m->ops[0], s.registers, "measurement '" + s.name + "'",
                         path, s.span);
    return m;
  }

  const Program& p_;
  ValidationReport report_;
};

}  // namespace

ValidationReport validate(const Program& program) {
  return Validator(program).run();
}

void require_valid(const Program& program) {
  ValidationReport report = validate(program);
  if (!report.ok()) {
    const Diagnostic& d = report.errors.front();
    throw Error(d.kind, d.message, d.path, d.span);
  }
}

Matrix embed(const Program& program, const Matrix& op,
             const std::vector<std::string>& regs) {
  std::vector<int> idx;
  for (const auto& r : regs) {
    int i = program.register_index(r);
    if (i < 0) throw Error(ErrorKind::UndeclaredName, "register '" + r + "'");
    idx.push_back(i);
  }
  Layout layout(program.dims());
  Layout::Targets t = layout.targets(idx);
  if (static_cast<std::size_t>(op.rows()) != t.local_dim)
    throw Error(ErrorKind::DimMismatch, "operator does not match registers");
  const std::size_t d = layout.dimension();
  Matrix full = Matrix::Zero(d, d);
  for (std::size_t base : t.bases)
    for (std::size_t a = 0; a < t.local_dim; ++a)
      for (std::size_t b = 0; b < t.local_dim; ++b)
        full(base + t.offsets[a], base + t.offsets[b]) = op(a, b);
  return full;
}

Matrix observable_matrix(const Program& program, const std::string& name) {
  const MatrixDecl* o = program.find_matrix(name, MatrixKind::Observable);
  if (!o) throw Error(ErrorKind::UndeclaredName, "observable '" + name + "'");
  if (o->registers.empty()) return o->value;
  return embed(program, o->value, o->registers);
}

// ---------------------------------------------------------------------------
// Static counts

int running_count(const Statement& s, const std::string& param) {
  switch (s.kind) {
    case StmtKind::ParamUnitary:
      return s.param == param ? 1 : 0;
    case StmtKind::Seq: {
      int total = 0;
      for (const auto& c : s.children) total += running_count(c, param);
      return total;
    }
    case StmtKind::IfMeas: {
      int best = 0;
      for (const auto& c : s.children)
        best = std::max(best, running_count(c, param));
      return best;
    }
    case StmtKind::While:
      return running_count(s.body(), param);
    default:
      return 0;
  }
}

int running_count(const Program& program, const std::string& param) {
  return running_count(program.body, param);
}

int loop_count(const Statement& s) {
  switch (s.kind) {
    case StmtKind::Seq:
    case StmtKind::IfMeas: {
      int total = 0;
      for (const auto& c : s.children) total += loop_count(c);
      return total;
    }
    case StmtKind::While:
      return 1 + loop_count(s.body());
    default:
      return 0;
  }
}

int loop_count(const Program& program) { return loop_count(program.body); }

namespace {
template <typename Pred>
void collect(const Statement& s, Pred pred,
             std::vector<const Statement*>& out) {
  if (pred(s)) out.push_back(&s);
  for (const auto& c : s.children) collect(c, pred, out);
}
}  // namespace

std::vector<const Statement*> collect_loops(const Statement& s) {
  std::vector<const Statement*> out;
  collect(s, [](const Statement& x) { return x.kind == StmtKind::While; }, out);
  return out;
}

std::vector<const Statement*> collect_occurrences(const Statement& s,
                                                  const std::string& param) {
  std::vector<const Statement*> out;
  collect(
      s,
      [&](const Statement& x) {
        return x.kind == StmtKind::ParamUnitary && x.param == param;
      },
      out);
  return out;
}

// ---------------------------------------------------------------------------
// Generator rewriting

DensityForm hamiltonian_to_density(const Matrix& h) {
  if (!la::is_hermitian(h))
    throw Error(ErrorKind::InvalidArgument, "Hamiltonian must be Hermitian");
  la::HermitianEigen eig = la::eigh(h);
  const double lo = eig.values.minCoeff();
  const double hi = eig.values.maxCoeff();
  const double scale_ref = std::max(1.0, std::max(std::abs(lo), std::abs(hi)));
  if (hi - lo <= 1e-12 * scale_ref)
    throw Error(ErrorKind::DegenerateHamiltonian,
                "H is a multiple of the identity");
  Matrix shifted = h - lo * la::identity(h.rows());
  const double tr = la::real_trace(shifted);
  DensityForm out;
  out.sigma = shifted / tr;
  out.sigma = 0.5 * (out.sigma + out.sigma.adjoint());
  out.scale = tr;
  return out;
}

Matrix PauliRotation::generator() const {
  const Matrix delta = la::pauli(axis);
  switch (kind) {
    case PauliRotationKind::Single:
      return 0.5 * delta;
    case PauliRotationKind::Controlled: {
      Matrix one = Matrix::Zero(2, 2);
      one(1, 1) = 1.0;
      return 0.5 * la::kron(one, delta);
    }
    case PauliRotationKind::Double:
      return 0.5 * la::kron(delta, delta);
  }
  return delta;
}

DensityForm pauli_to_density(const PauliRotation& gate) {
  if (gate.axis != 'X' && gate.axis != 'Y' && gate.axis != 'Z')
    throw Error(ErrorKind::UnsupportedGate,
                std::string("unsupported rotation axis '") + gate.axis + "'");
  return hamiltonian_to_density(gate.generator());
}

PauliRotation pauli_rotation(const std::string& label) {
  auto axis_ok = [](char c) { return c == 'X' || c == 'Y' || c == 'Z'; };
  if (label.size() == 2 && label[0] == 'R' && axis_ok(label[1]))
    return {PauliRotationKind::Single, label[1]};
  if (label.size() == 3 && label[0] == 'C' && label[1] == 'R' &&
      axis_ok(label[2]))
    return {PauliRotationKind::Controlled, label[2]};
  if (label.size() == 3 && label[0] == 'R' && axis_ok(label[1]) &&
      label[1] == label[2])
    return {PauliRotationKind::Double, label[1]};
  throw Error(ErrorKind::UnsupportedGate, "'" + label + "' is not a Pauli rotation");
}

}  // namespace qwd
