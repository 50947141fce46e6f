#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "qwd/errors.hpp"
#include "qwd/linalg.hpp"

namespace qwd {

struct Register {
  std::string name;
  int dim = 2;
  SourceSpan span;
};

struct Param {
  std::string name;
  int index = 0;
  SourceSpan span;
};

enum class MatrixKind { Gate, Density, Observable };

const char* keyword(MatrixKind kind);

struct MatrixDecl {
  std::string name;
  MatrixKind kind = MatrixKind::Gate;
  Matrix value;
  // Observables may be bound to a register list; empty means the whole space.
  std::vector<std::string> registers;
  SourceSpan span;
};

struct MeasDecl {
  std::string name;
  std::vector<int> labels;
  std::vector<Matrix> ops;
  SourceSpan span;

  const Matrix* op(int label) const;
};

enum class StmtKind {
  Skip,
  Init,         // q := |0>
  InitDensity,  // setd sigma [q..]
  Unitary,      // U[q..]
  ParamUnitary, // rot(theta, sigma)[q..]  == exp(-i theta sigma)
  Seq,
  IfMeas,
  While,        // guard outcome 1 continues, 0 exits
  Eul,          // differentiation site marker inserted by autodiff
};

struct Statement {
  StmtKind kind = StmtKind::Skip;
  std::string name;   // gate / density / measurement name
  std::string param;  // ParamUnitary, Eul
  std::vector<std::string> registers;
  std::vector<Statement> children;  // Seq items, IfMeas branches, While body
  std::vector<int> labels;          // IfMeas outcome label per child
  SourceSpan span;

  const Statement& body() const { return children.front(); }
};

namespace stmt {
Statement skip();
Statement init(const std::string& reg);
Statement init_density(const std::string& density, std::vector<std::string> regs);
Statement unitary(const std::string& gate, std::vector<std::string> regs);
Statement rot(const std::string& param, const std::string& density,
              std::vector<std::string> regs);
Statement seq(std::vector<Statement> items);
Statement if_meas(const std::string& meas, std::vector<std::string> regs,
                  std::vector<std::pair<int, Statement>> branches);
Statement while_loop(const std::string& meas, std::vector<std::string> regs,
                     Statement body);
Statement eul(const std::string& param, const std::string& density,
              std::vector<std::string> regs);
}  // namespace stmt

// Structural equality ignoring source spans. Matrices compare exactly.
bool structurally_equal(const Statement& a, const Statement& b);

struct Program {
  std::vector<Register> registers;
  std::vector<Param> params;
  std::vector<MatrixDecl> matrices;
  std::vector<MeasDecl> measurements;
  Statement body;
  std::size_t dim_cap = 4096;

  const Register* find_register(const std::string& name) const;
  int register_index(const std::string& name) const;
  const MatrixDecl* find_matrix(const std::string& name) const;
  const MatrixDecl* find_matrix(const std::string& name, MatrixKind kind) const;
  const MeasDecl* find_measurement(const std::string& name) const;
  const Param* find_param(const std::string& name) const;

  std::vector<int> dims() const;
  std::size_t dimension() const;  // product of register dims
  std::size_t dimension_of(const std::vector<std::string>& regs) const;

  // Adds declarations; throw DuplicateName on clashes.
  Program& add_register(const std::string& name, int dim);
  Program& add_param(const std::string& name);
  Program& add_matrix(const std::string& name, MatrixKind kind, Matrix value,
                      std::vector<std::string> registers = {});
  Program& add_measurement(const std::string& name, std::vector<int> labels,
                           std::vector<Matrix> ops);
};

bool structurally_equal(const Program& a, const Program& b);

struct Diagnostic {
  ErrorKind kind;
  std::string message;
  std::string path;
  SourceSpan span;
};

struct ValidationReport {
  std::vector<Diagnostic> errors;
  bool ok() const { return errors.empty(); }
};

ValidationReport validate(const Program& program);
// Throws the first diagnostic as an Error when the program is invalid.
void require_valid(const Program& program);

// Full-space observable matrix for a declared observable.
Matrix observable_matrix(const Program& program, const std::string& name);
// Embeds an operator acting on `regs` (in the listed order) into the full space.
Matrix embed(const Program& program, const Matrix& op,
             const std::vector<std::string>& regs);

int running_count(const Statement& s, const std::string& param);
int running_count(const Program& program, const std::string& param);
int loop_count(const Statement& s);
int loop_count(const Program& program);

// Paths of all While statements, in program order.
std::vector<const Statement*> collect_loops(const Statement& s);
// ParamUnitary sites for `param`, in program order.
std::vector<const Statement*> collect_occurrences(const Statement& s,
                                                  const std::string& param);

struct DensityForm {
  Matrix sigma;
  double scale = 1.0;
};

DensityForm hamiltonian_to_density(const Matrix& h);

enum class PauliRotationKind { Single, Controlled, Double };

struct PauliRotation {
  PauliRotationKind kind = PauliRotationKind::Single;
  char axis = 'X';
  Matrix generator() const;  // H with gate = exp(-i theta H)
};

DensityForm pauli_to_density(const PauliRotation& gate);
// Parses labels like "RX", "CRZ", "RXX".
PauliRotation pauli_rotation(const std::string& label);

}  // namespace qwd
