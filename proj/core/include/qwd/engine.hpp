#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "qwd/layout.hpp"
#include "qwd/linalg.hpp"
#include "qwd/program.hpp"

namespace qwd {

// Operator on a target register list, stored densely and, when mostly zero,
// also as per-row nonzero lists.
struct LocalOp {
  Matrix dense;
  std::vector<std::vector<std::pair<int, cplx>>> rows;
  Vector diag;  // set when the operator is diagonal
  bool sparse = false;
  bool diagonal = false;

  LocalOp() = default;
  explicit LocalOp(Matrix m);
  std::size_t dim() const { return static_cast<std::size_t>(dense.rows()); }
  // Multiply-adds per local row when applied.
  double row_cost() const;
};

// Operators acting on a target set.
void apply_left(const LocalOp& op, const Layout::Targets& t, Matrix& rho);
void apply_right_adjoint(const LocalOp& op, const Layout::Targets& t,
                         Matrix& rho);  // rho <- rho op^dagger
void conjugate(const LocalOp& op, const Layout::Targets& t, Matrix& rho);
void apply(const LocalOp& op, const Layout::Targets& t, Vector& psi);
// rho <- tr_t(rho) (x) sigma on t.
void replace_targets(const Matrix& sigma, const Layout::Targets& t,
                     Matrix& rho);

// Counter-based randomness: the stream for shot i depends only on (seed, i).
std::uint64_t mix_key(std::uint64_t seed, std::uint64_t shot);

class Rng {
 public:
  explicit Rng(std::uint64_t key) : engine_(key) {}
  static Rng for_shot(std::uint64_t seed, std::uint64_t shot) {
    return Rng(mix_key(seed, shot));
  }
  double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(engine_); }
  double normal() { return std::normal_distribution<double>(0.0, 1.0)(engine_); }
  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

// Index of a sampled category from nonnegative weights summing to `total`.
std::size_t sample_index(const std::vector<double>& weights, double total,
                         Rng& rng);

// A program compiled against concrete parameter values.
struct Node {
  enum class Kind { Skip, Unitary, Prepare, Branch, Loop, Seq, Site };
  Kind kind = Kind::Skip;
  Layout::Targets targets;
  LocalOp op;                    // Unitary
  Matrix sigma;                  // Prepare: state placed on targets
  RealVector sigma_weights;      // Prepare: eigen-decomposition of sigma
  Matrix sigma_vectors;
  std::string meas_name;         // Branch, Loop
  std::vector<int> labels;       // Branch outcome labels (Loop: {0,1})
  std::vector<LocalOp> meas_ops; // parallel to labels
  std::vector<Node> children;    // Seq items, Branch arms, Loop body
  int site = -1;                 // Site: index in program order
  const Statement* source = nullptr;
};

class Executable {
 public:
  Executable(const Program& program, const std::vector<double>& theta);
  Executable(const Executable&) = delete;
  Executable& operator=(const Executable&) = delete;

  const Program& program() const { return *program_; }
  const Layout& layout() const { return layout_; }
  const Node& root() const { return root_; }
  const std::vector<const Node*>& sites() const { return sites_; }
  // Compiled node for a source statement (nullptr if absent).
  const Node* find(const Statement* source) const;
  Layout::Targets targets(const std::vector<std::string>& regs) const;

 private:
  Node compile(const Statement& s, const std::vector<double>& theta);
  // Merges `second` into the unitary `first` when that is cheaper to apply.
  bool fuse_into(Node& first, const Node& second) const;
  const Program* program_;
  Layout layout_;
  Node root_;
  std::vector<const Node*> sites_;
  std::size_t site_count_ = 0;
};

// Bundle of partial density matrices evolved by the same linear maps. Empty
// matrices stand for zero. `mass_slot[i]` marks slots whose trace counts as
// still-running probability mass for loop truncation.
struct Slots {
  std::vector<Matrix> m;
  std::vector<char> mass_slot;

  explicit Slots(std::size_t n = 1) : m(n), mass_slot(n, 1) {}
  double mass() const;
  void add(const Slots& other);
};

struct DensityRun {
  double tol_mass = 1e-10;
  long k_max = 1000000;
  std::function<void(const Node&, Slots&)> on_site;
  // Outputs.
  double residual = 0.0;
  Slots dropped{0};
  double worst_drop_ratio = 0.0;  // last-iteration mass ratio at truncation

  void run(const Node& node, Slots& state);
};

struct PureRun {
  long k_max = 1000000;
  Rng* rng = nullptr;
  std::function<void(const Node&, Vector&, PureRun&)> on_site;
  bool keep_record = true;
  // Outputs.
  std::vector<std::pair<std::string, int>> record;
  double probability = 1.0;
  long loop_iterations = 0;

  void run(const Node& node, Vector& psi);
};

}  // namespace qwd
