#include "oracle.hpp"

#include <functional>
#include <map>
#include <regex>

#include <Eigen/Eigenvalues>
#include <Eigen/SparseCore>

namespace qwd::testing {

namespace {

std::vector<int> digits_of(std::size_t index, const std::vector<int>& dims) {
  std::vector<int> d(dims.size());
  for (int r = static_cast<int>(dims.size()) - 1; r >= 0; --r) {
    d[r] = static_cast<int>(index % dims[r]);
    index /= dims[r];
  }
  return d;
}

std::vector<int> reg_indices(const Program& p, const std::vector<std::string>& names) {
  std::vector<int> out;
  for (const auto& n : names)
    for (std::size_t i = 0; i < p.registers.size(); ++i)
      if (p.registers[i].name == n) out.push_back(static_cast<int>(i));
  return out;
}

const Matrix& decl(const Program& p, const std::string& name) {
  for (const auto& m : p.matrices)
    if (m.name == name) return m.value;
  throw std::runtime_error("oracle: unknown matrix " + name);
}

const MeasDecl& meas(const Program& p, const std::string& name) {
  for (const auto& m : p.measurements)
    if (m.name == name) return m;
  throw std::runtime_error("oracle: unknown measurement " + name);
}

const Matrix& meas_op(const MeasDecl& m, int label) {
  for (std::size_t i = 0; i < m.labels.size(); ++i)
    if (m.labels[i] == label) return m.ops[i];
  throw std::runtime_error("oracle: unknown label");
}

// Embedded Kraus operators are mostly zeros; a sparse view keeps the direct
// sums affordable on the case-study dimensions.
Matrix sandwich(const Matrix& k, const Matrix& rho) {
  const Eigen::SparseMatrix<cplx> ks = k.sparseView();
  const Matrix left = ks * rho;
  return left * Eigen::SparseMatrix<cplx>(ks.adjoint());
}

struct Evaluator {
  const Program& p;
  const std::vector<double>& theta;
  std::vector<int> dims;
  double tol;

  // Embeddings are rebuilt per loop iteration otherwise; key by source
  // statement and slot.
  mutable std::map<std::pair<const Statement*, int>, Matrix> cache;

  Matrix full(const Matrix& op, const std::vector<std::string>& regs) const {
    return oracle_embed(op, reg_indices(p, regs), dims);
  }
  const Matrix& full_cached(const Statement& s, int slot, const Matrix& op) const {
    auto key = std::make_pair(&s, slot);
    auto it = cache.find(key);
    if (it == cache.end()) it = cache.emplace(key, full(op, s.registers)).first;
    return it->second;
  }

  mutable std::map<const Statement*, std::vector<Eigen::SparseMatrix<cplx>>> kraus_cache;

  // Kraus operators |v_k><n| sqrt(lambda_k) of "discard and prepare sigma".
  Matrix prepare(const Statement& s, const Matrix& sigma, const Matrix& rho) const {
    auto it = kraus_cache.find(&s);
    if (it == kraus_cache.end()) {
      std::vector<Eigen::SparseMatrix<cplx>> ks;
      Eigen::SelfAdjointEigenSolver<Matrix> es(sigma);
      const Eigen::Index k = sigma.rows();
      for (Eigen::Index e = 0; e < k; ++e) {
        const double lam = es.eigenvalues()(e);
        if (lam <= 0) continue;
        for (Eigen::Index n = 0; n < k; ++n) {
          Matrix local = Matrix::Zero(k, k);
          local.col(n) = std::sqrt(lam) * es.eigenvectors().col(e);
          ks.push_back(full(local, s.registers).sparseView());
        }
      }
      it = kraus_cache.emplace(&s, std::move(ks)).first;
    }
    Matrix out = Matrix::Zero(rho.rows(), rho.cols());
    for (const auto& k : it->second) {
      const Matrix left = k * rho;
      out += left * Eigen::SparseMatrix<cplx>(k.adjoint());
    }
    return out;
  }

  Matrix run(const Statement& s, const Matrix& rho) const {
    switch (s.kind) {
      case StmtKind::Skip:
      case StmtKind::Eul:
        return rho;
      case StmtKind::Init: {
        const int d = dims[reg_indices(p, s.registers)[0]];
        Matrix zero = Matrix::Zero(d, d);
        zero(0, 0) = 1.0;
        return prepare(s, zero, rho);
      }
      case StmtKind::InitDensity:
        return prepare(s, decl(p, s.name), rho);
      case StmtKind::Unitary:
        return sandwich(full_cached(s, 0, decl(p, s.name)), rho);
      case StmtKind::ParamUnitary: {
        int index = -1;
        for (const auto& q : p.params)
          if (q.name == s.param) index = q.index;
        return sandwich(full_cached(s, 0, oracle_expm(decl(p, s.name), theta.at(index))), rho);
      }
      case StmtKind::Seq: {
        Matrix cur = rho;
        for (const auto& c : s.children) cur = run(c, cur);
        return cur;
      }
      case StmtKind::IfMeas: {
        const MeasDecl& m = meas(p, s.name);
        Matrix out = Matrix::Zero(rho.rows(), rho.cols());
        for (std::size_t i = 0; i < s.children.size(); ++i)
          out += run(s.children[i],
                     sandwich(full_cached(s, static_cast<int>(i), meas_op(m, s.labels[i])), rho));
        return out;
      }
      case StmtKind::While: {
        const MeasDecl& m = meas(p, s.name);
        const Matrix m0 = full(meas_op(m, 0), s.registers);
        const Matrix m1 = full(meas_op(m, 1), s.registers);
        Matrix out = Matrix::Zero(rho.rows(), rho.cols());
        Matrix cur = rho;
        for (long k = 0; k < 1000000; ++k) {
          out += sandwich(m0, cur);
          cur = run(s.body(), sandwich(m1, cur));
          if (cur.trace().real() < tol) break;
        }
        return out;
      }
    }
    return rho;
  }
};

}  // namespace

Matrix oracle_embed(const Matrix& op, const std::vector<int>& regs,
                    const std::vector<int>& dims) {
  std::size_t total = 1;
  for (int d : dims) total *= static_cast<std::size_t>(d);
  std::vector<bool> target(dims.size(), false);
  for (int r : regs) target[r] = true;
  Matrix out = Matrix::Zero(total, total);
  for (std::size_t i = 0; i < total; ++i) {
    const auto di = digits_of(i, dims);
    for (std::size_t j = 0; j < total; ++j) {
      const auto dj = digits_of(j, dims);
      bool same_rest = true;
      for (std::size_t r = 0; r < dims.size() && same_rest; ++r)
        if (!target[r] && di[r] != dj[r]) same_rest = false;
      if (!same_rest) continue;
      Eigen::Index a = 0, b = 0;
      for (int r : regs) {
        a = a * dims[r] + di[r];
        b = b * dims[r] + dj[r];
      }
      out(i, j) = op(a, b);
    }
  }
  return out;
}

Matrix oracle_expm(const Matrix& h, double t) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(h);
  Vector phases(h.rows());
  for (Eigen::Index i = 0; i < h.rows(); ++i)
    phases(i) = std::exp(cplx(0.0, -t * es.eigenvalues()(i)));
  return es.eigenvectors() * phases.asDiagonal() * es.eigenvectors().adjoint();
}

Matrix oracle_evaluate(const Program& program, const std::vector<double>& theta,
                       const Matrix& rho, double tol) {
  std::vector<int> dims;
  for (const auto& r : program.registers) dims.push_back(r.dim);
  Evaluator ev{program, theta, dims, tol};
  return ev.run(program.body, rho);
}

double oracle_expectation(const Program& program, const std::vector<double>& theta,
                          const Matrix& rho, const Matrix& observable, double tol) {
  return (observable * oracle_evaluate(program, theta, rho, tol)).trace().real();
}

double oracle_derivative(const Program& program, const std::vector<double>& theta,
                         int index, const Matrix& rho, const Matrix& observable,
                         double h) {
  std::vector<double> up = theta, down = theta;
  up[index] += h;
  down[index] -= h;
  return (oracle_expectation(program, up, rho, observable) -
          oracle_expectation(program, down, rho, observable)) /
         (2 * h);
}

double sandwich_derivative_oracle(const ChannelSandwich& sw, const Matrix& rho,
                                  double theta) {
  auto channel = [](const std::vector<Matrix>& kraus, const Matrix& x) {
    Matrix out = Matrix::Zero(x.rows(), x.cols());
    for (const auto& k : kraus) out += k * x * k.adjoint();
    return out;
  };
  const Eigen::Index n = sw.dim();
  const Eigen::Index s = sw.sigma.rows();
  const Eigen::Index rest = n / s;
  Matrix h = Matrix::Zero(n, n);
  for (Eigen::Index a = 0; a < s; ++a)
    for (Eigen::Index b = 0; b < s; ++b)
      for (Eigen::Index r = 0; r < rest; ++r) h(a * rest + r, b * rest + r) = sw.sigma(a, b);
  const Matrix u = oracle_expm(h, theta);
  const Matrix inner = u * channel(sw.pre, rho) * u.adjoint();
  const Matrix d = cplx(0.0, -1.0) * (h * inner - inner * h);
  return (sw.observable * channel(sw.post, d)).trace().real();
}

int text_running_count(const Program& program, const std::string& param) {
  const std::string text = format(program.body);
  const std::regex pattern("rot\\(\\s*" + param + "\\s*,");
  return static_cast<int>(std::distance(
      std::sregex_iterator(text.begin(), text.end(), pattern), std::sregex_iterator()));
}

int text_loop_count(const Program& program) {
  const std::string text = format(program.body);
  const std::regex pattern("\\bwhile\\b");
  return static_cast<int>(std::distance(
      std::sregex_iterator(text.begin(), text.end(), pattern), std::sregex_iterator()));
}

}  // namespace qwd::testing
