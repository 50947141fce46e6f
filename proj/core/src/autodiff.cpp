#include "qwd/autodiff.hpp"

#include <cmath>
#include <functional>
#include <limits>

#include <json.hpp>

#include "qwd/parser.hpp"

namespace qwd {

using nlohmann::json;

const char* to_string(Backend backend) {
  return backend == Backend::Commutator ? "commutator" : "param-shift";
}

Backend backend_from_string(const std::string& name) {
  if (name == "commutator") return Backend::Commutator;
  if (name == "param-shift") return Backend::ParamShift;
  throw Error(ErrorKind::InvalidArgument, "unknown backend '" + name + "'");
}

namespace {

Statement insert_sites(const Statement& s, const std::string& param) {
  switch (s.kind) {
    case StmtKind::ParamUnitary:
      if (s.param == param) {
        Statement marker = stmt::eul(s.param, s.name, s.registers);
        marker.span = s.span;
        Statement pair;
        pair.kind = StmtKind::Seq;
        pair.span = s.span;
        pair.children = {marker, s};
        return pair;
      }
      return s;
    case StmtKind::Seq: {
      std::vector<Statement> items;
      for (const auto& c : s.children) items.push_back(insert_sites(c, param));
      Statement out = stmt::seq(std::move(items));
      out.span = s.span;
      return out;
    }
    case StmtKind::IfMeas:
    case StmtKind::While: {
      Statement out = s;
      for (auto& c : out.children) c = insert_sites(c, param);
      return out;
    }
    default:
      return s;
  }
}

std::vector<DiffSite> describe_sites(const Program& transformed) {
  std::vector<DiffSite> sites;
  std::function<void(const Statement&)> walk = [&](const Statement& s) {
    if (s.kind == StmtKind::Eul)
      sites.push_back({static_cast<int>(sites.size()), s.name, s.registers, 1.0});
    for (const auto& c : s.children) walk(c);
  };
  walk(transformed.body);
  return sites;
}

DiffProgram make_diff(const Program& program, const std::string& param,
                      Backend backend, const MuDistribution& mu) {
  require_valid(program);
  if (!program.find_param(param))
    throw Error(ErrorKind::UndeclaredName, "parameter '" + param + "'");
  DiffProgram d{program, program, param, backend, mu, {}};
  d.program.body = insert_sites(program.body, param);
  d.sites = describe_sites(d.program);
  return d;
}

// Generator scale 2r if sigma is a Pauli-rotation density (+-P + I)/2 or
// (+-P(x)P + I)/4, otherwise nullopt.
std::optional<double> pauli_scale(const Matrix& sigma) {
  const char axes[] = {'X', 'Y', 'Z'};
  for (char a : axes)
    for (double sign : {1.0, -1.0}) {
      if (sigma.rows() == 2 &&
          la::max_abs(sigma - (sign * la::pauli(a) + la::identity(2)) / 2.0) < 1e-9)
        return 1.0;
      if (sigma.rows() == 4) {
        Matrix pp = la::kron(la::pauli(a), la::pauli(a));
        if (la::max_abs(sigma - (sign * pp + la::identity(4)) / 4.0) < 1e-9)
          return 0.5;
      }
    }
  return std::nullopt;
}

}  // namespace

Statement strip_sites(const Statement& s) {
  if (s.kind == StmtKind::Seq) {
    std::vector<Statement> items;
    for (const auto& c : s.children)
      if (c.kind != StmtKind::Eul) items.push_back(strip_sites(c));
    Statement out = stmt::seq(std::move(items));
    out.span = s.span;
    return out;
  }
  if (s.kind == StmtKind::Eul) return stmt::skip();
  Statement out = s;
  for (auto& c : out.children) c = strip_sites(c);
  return out;
}

DiffProgram transform_commutator(const Program& program, const std::string& param,
                                 const MuDistribution& mu) {
  return make_diff(program, param, Backend::Commutator, mu);
}

DiffProgram transform_param_shift(const Program& program, const std::string& param,
                                  const MuDistribution& mu) {
  DiffProgram d = make_diff(program, param, Backend::ParamShift, mu);
  for (auto& site : d.sites) {
    const Matrix& sigma = program.find_matrix(site.density)->value;
    auto scale = pauli_scale(sigma);
    if (!scale)
      throw Error(ErrorKind::UnsupportedOccurrence,
                  "occurrence " + std::to_string(site.index) + " uses density '" +
                      site.density + "', which is not a Pauli-rotation generator");
    site.generator_scale = *scale;
  }
  return d;
}

double shot_weight(Backend backend, std::optional<long> fired_index, int z,
                   const MuDistribution& mu, double generator_scale) {
  if (!fired_index) return 0.0;
  const double m = mu.mu(*fired_index);
  if (backend == Backend::Commutator) return 2.0 * z / m;
  return generator_scale * z / m;
}

std::string DiffProgram::qprog() const { return format(program); }

std::string DiffProgram::sidecar_json() const {
  json j;
  j["format"] = "qwd-diff/1";
  j["param"] = param;
  j["backend"] = to_string(backend);
  j["mu"] = {{"s", mu.s()}, {"normalizer", mu.normalizer()}, {"exact", mu.exact()}};
  json sites_json = json::array();
  for (const auto& s : sites)
    sites_json.push_back({{"index", s.index},
                          {"density", s.density},
                          {"registers", s.registers},
                          {"generator_scale", s.generator_scale}});
  j["sites"] = sites_json;
  j["ancillas"] = {
      {"counter", "classical integer j, occurrences passed before firing"},
      {"fired", "classical flag; set once, later sites are inert"},
      {"coin", backend == Backend::Commutator
                   ? "classical uniform z in {+1,-1}"
                   : "ancilla qubit A, H; controlled U(0)/U(pi); H; measured in Z"},
      {"copy", backend == Backend::Commutator
                   ? "fresh copy of sigma per firing, coupled by exp(-i z pi/4 SWAP), traced out"
                   : "none"}};
  j["weight"] = backend == Backend::Commutator ? "2*z/mu(j)" : "generator_scale*z/mu(j)";
  return j.dump(2);
}

DiffProgram load_diff_program(const std::string& qprog_text,
                              const std::string& sidecar_text) {
  json j = json::parse(sidecar_text);
  if (j.value("format", "") != "qwd-diff/1")
    throw Error(ErrorKind::InvalidArgument, "sidecar is not qwd-diff/1");
  Program transformed = parse(qprog_text);
  Program base = transformed;
  base.body = strip_sites(transformed.body);
  const double s = j["mu"]["s"].get<double>();
  MuDistribution mu = j["mu"].value("exact", true)
                          ? MuDistribution(s)
                          : MuDistribution::with_normalizer(
                                s, j["mu"]["normalizer"].get<double>());
  DiffProgram d = make_diff(base, j["param"].get<std::string>(),
                            backend_from_string(j["backend"].get<std::string>()), mu);
  const auto& sites = j["sites"];
  if (sites.size() != d.sites.size())
    throw Error(ErrorKind::InvalidArgument, "sidecar site count mismatch");
  for (std::size_t i = 0; i < d.sites.size(); ++i)
    d.sites[i].generator_scale = sites[i]["generator_scale"].get<double>();
  return d;
}

// ---------------------------------------------------------------------------
// Execution

std::vector<Matrix> coupling_kraus(const Matrix& sigma, double alpha, int z) {
  const Eigen::Index d = sigma.rows();
  la::HermitianEigen eig = la::eigh(sigma);
  const double c = std::cos(alpha), s = std::sin(alpha) * z;
  std::vector<Matrix> out;
  for (Eigen::Index k = 0; k < d; ++k) {
    const double lam = eig.values(k);
    if (lam <= 1e-15) continue;
    const Vector sk = eig.vectors.col(k);
    for (Eigen::Index m = 0; m < d; ++m) {
      // <m|_copy (cos a I - i z sin a SWAP) |s_k>_copy, acting on the block.
      Matrix K = c * sk(m) * la::identity(d);
      K.col(m) += -kI * s * sk;
      out.push_back(std::sqrt(lam) * K);
    }
  }
  return out;
}

DiffExecutable::DiffExecutable(const DiffProgram& diff,
                               const std::vector<double>& theta)
    : diff_(&diff), exe_(diff.program, theta) {
  for (const Node* node : exe_.sites()) {
    SiteOps ops;
    const DiffSite& site = diff.sites.at(node->site);
    ops.scale = site.generator_scale;
    if (diff.backend == Backend::Commutator) {
      for (const auto& K : coupling_kraus(node->sigma, M_PI / 4, +1))
        ops.plus.emplace_back(K);
      for (const auto& K : coupling_kraus(node->sigma, M_PI / 4, -1))
        ops.minus.emplace_back(K);
    } else {
      la::HermitianEigen eig = la::eigh(node->sigma);
      const double hi = eig.values.maxCoeff(), lo = eig.values.minCoeff();
      const double center = (hi + lo) / 2, r = (hi - lo) / 2;
      const Eigen::Index d = node->sigma.rows();
      Matrix delta = (node->sigma - center * la::identity(d)) / r;
      ops.k0 = LocalOp(0.5 * (la::identity(d) - kI * delta));
      ops.k1 = LocalOp(0.5 * (la::identity(d) + kI * delta));
    }
    ops_.push_back(std::move(ops));
  }
}

namespace {

// Samples one Kraus branch on a pure state; returns the branch index.
std::size_t sample_kraus(const std::vector<const LocalOp*>& ops,
                         const Layout::Targets& t, Vector& psi, Rng& rng) {
  thread_local std::vector<Vector> branches;
  thread_local std::vector<double> w;
  if (branches.size() < ops.size()) branches.resize(ops.size());
  w.assign(ops.size(), 0.0);
  double total = 0;
  for (std::size_t i = 0; i < ops.size(); ++i) {
    branches[i] = psi;
    apply(*ops[i], t, branches[i]);
    total += (w[i] = branches[i].squaredNorm());
  }
  const std::size_t pick = sample_index(w, total, rng);
  psi = branches[pick] / std::sqrt(w[pick]);
  return pick;
}

}  // namespace

DiffExecutable::Shot DiffExecutable::run_shot(Vector& psi, Rng& rng,
                                              long k_max) const {
  Shot shot;
  PureRun run;
  run.k_max = k_max;
  run.rng = &rng;
  run.keep_record = false;
  const DiffProgram& d = *diff_;
  run.on_site = [&](const Node& node, Vector& state, PureRun&) {
    if (shot.fired) return;
    const long j = ++shot.occurrences;
    if (rng.uniform() >= d.mu.b(j)) return;
    shot.fired = true;
    shot.j = j;
    const SiteOps& ops = ops_[node.site];
    if (d.backend == Backend::Commutator) {
      shot.z = rng.uniform() < 0.5 ? +1 : -1;
      const auto& list = shot.z > 0 ? ops.plus : ops.minus;
      std::vector<const LocalOp*> ptrs;
      for (const auto& k : list) ptrs.push_back(&k);
      sample_kraus(ptrs, node.targets, state, rng);
    } else {
      const std::size_t pick = sample_kraus({&ops.k0, &ops.k1}, node.targets, state, rng);
      shot.z = pick == 0 ? +1 : -1;
    }
    shot.weight = shot_weight(d.backend, j, shot.z, d.mu, ops.scale);
  };
  run.run(exe_.root(), psi);
  psi /= psi.norm();
  shot.loop_iterations = run.loop_iterations;
  return shot;
}

// ---------------------------------------------------------------------------
// Exact evaluation over the classical firing record

DiffExpectation exact_diff_expectation(const DiffProgram& diff,
                                       const std::vector<double>& theta,
                                       const DensityState& rho,
                                       const Matrix& observable,
                                       const TruncationPolicy& policy,
                                       long j_max) {
  check_state(diff.base, rho);
  if (j_max < 1) throw Error(ErrorKind::InvalidArgument, "J_max must be >= 1");
  DiffExecutable dx(diff, theta);
  const std::size_t J = static_cast<std::size_t>(j_max);
  // Slots: [0, J) unfired with counter c (base-path measure), J: counter past
  // J_max, then fired mass F0, weighted F1 = sum w rho, F2 = sum w^2 rho.
  const std::size_t kBeyond = J, kF0 = J + 1, kF1 = J + 2, kF2 = J + 3;
  Slots state(J + 4);
  state.mass_slot[kF1] = state.mass_slot[kF2] = 0;
  state.m[0] = rho.matrix;
  double beyond_occurrences = 0;

  DensityRun run;
  run.tol_mass = policy.tol_mass;
  run.k_max = policy.k_max;
  run.on_site = [&](const Node& node, Slots& s) {
    if (s.m[kBeyond].size()) beyond_occurrences += la::real_trace(s.m[kBeyond]);
    const auto& ops = dx.site_ops(node.site);
    for (std::size_t c = J; c-- > 0;) {
      if (!s.m[c].size()) continue;
      Matrix base = std::move(s.m[c]);
      s.m[c] = Matrix();
      const long j = static_cast<long>(c) + 1;
      const double mu_j = diff.mu.mu(j);
      Matrix plus = Matrix::Zero(base.rows(), base.cols());
      Matrix minus = plus;
      double g = 2.0;
      if (diff.backend == Backend::Commutator) {
        for (const auto& K : ops.plus) {
          Matrix x = 0.5 * base;
          conjugate(K, node.targets, x);
          plus += x;
        }
        for (const auto& K : ops.minus) {
          Matrix x = 0.5 * base;
          conjugate(K, node.targets, x);
          minus += x;
        }
      } else {
        g = ops.scale;
        plus = base;
        conjugate(ops.k0, node.targets, plus);
        minus = base;
        conjugate(ops.k1, node.targets, minus);
      }
      // Fired at j with probability mu(j) (coin split already in plus/minus);
      // the weight is g z / mu(j).
      Matrix both = plus + minus;
      auto put = [&](std::size_t slot, const Matrix& add) {
        if (s.m[slot].size()) s.m[slot] += add; else s.m[slot] = add;
      };
      put(kF0, mu_j * both);
      put(kF1, g * (plus - minus));
      put(kF2, (g * g / mu_j) * both);
      if (c + 1 < J)
        s.m[c + 1] = std::move(base);
      else
        put(kBeyond, base);
    }
  };
  run.run(dx.executable().root(), state);

  const double norm_o = la::spectral_norm(observable);
  const Matrix o2 = observable * observable;
  DiffExpectation out;
  if (state.m[kF1].size()) out.value = (observable * state.m[kF1]).trace().real();
  if (state.m[kF2].size()) out.second_moment = (o2 * state.m[kF2]).trace().real();
  if (state.m[kF0].size()) out.fired_mass = la::real_trace(state.m[kF0]);
  out.beyond_mass = beyond_occurrences;

  double g_max = 2.0;
  for (const auto& s : diff.sites) g_max = std::max(g_max, s.generator_scale);
  double bound = g_max * norm_o * beyond_occurrences;
  // Mass dropped by loop truncation: fired parts contribute at most
  // ||O|| ||F1||_1; unfired parts could still fire at later occurrences, whose
  // count is estimated from the geometric decay observed at truncation.
  const Slots& dropped = run.dropped;
  if (dropped.m.size() > kF1 && dropped.m[kF1].size())
    bound += norm_o * la::trace_norm_hermitian(dropped.m[kF1]);
  double unfired = 0;
  for (std::size_t c = 0; c <= kBeyond && c < dropped.m.size(); ++c)
    if (dropped.m[c].size()) unfired += la::real_trace(dropped.m[c]);
  if (unfired > 0) {
    const double rc = std::max(1, running_count(diff.base, diff.param));
    const double ratio = run.worst_drop_ratio;
    bound += ratio < 1 ? g_max * norm_o * unfired * rc / (1 - ratio)
                       : std::numeric_limits<double>::infinity();
  }
  out.error_bound = bound;
  return out;
}

}  // namespace qwd
