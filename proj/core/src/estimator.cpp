#include "qwd/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

#include <Eigen/Eigenvalues>
#include <json.hpp>

namespace qwd {

using nlohmann::json;

ShotMode shot_mode_from_string(const std::string& name) {
  if (name == "faithful") return ShotMode::Faithful;
  if (name == "rao") return ShotMode::Rao;
  throw Error(ErrorKind::InvalidArgument, "unknown shot mode '" + name + "'");
}

std::string GradEstimate::to_json() const {
  json j;
  j["format"] = "qwd-report/1";
  j["kind"] = "gradient";
  j["mean"] = mean;
  j["std_error"] = std_error;
  j["shots"] = shots;
  j["fired_fraction"] = fired_fraction;
  j["sample_variance"] = sample_variance;
  return j.dump(2);
}

std::string VarianceReport::to_json() const {
  json j;
  j["format"] = "qwd-report/1";
  j["kind"] = "variance";
  j["second_moment_bound"] = second_moment_bound;
  j["fourth_moment_bound"] = fourth_moment_bound;
  j["epsilon"] = epsilon;
  j["N_epsilon"] = N_epsilon;
  j["planned_shots"] = planned_shots;
  j["method"] = method;
  j["pilot_shots"] = pilot_shots;
  j["pilot_estimate"] = pilot_estimate;
  j["pilot_std_error"] = pilot_std_error;
  j["variance_input"] = variance_input;
  j["running_count"] = running_count;
  j["loop_count"] = loop_count;
  j["observable_norm"] = observable_norm;
  return j.dump(2);
}

// ---------------------------------------------------------------------------
// Shot sampling

ObservableSampler::ObservableSampler(const Matrix& o) : o_(o) {
  if (!la::is_hermitian(o))
    throw Error(ErrorKind::NonHermitianObservable, "observable is not Hermitian");
  const Matrix off = o - Matrix(o.diagonal().asDiagonal());
  diagonal_ = la::max_abs(off) == 0.0;
  if (diagonal_) {
    values_ = o.diagonal().real();
  } else {
    la::HermitianEigen eig = la::eigh(o);
    values_ = eig.values;
    vectors_ = std::move(eig.vectors);
  }
}

double ObservableSampler::sample(const Vector& psi, Rng& rng) const {
  const Eigen::Index n = values_.size();
  std::vector<double> w(n);
  double total = 0;
  if (diagonal_) {
    for (Eigen::Index i = 0; i < n; ++i) total += (w[i] = std::norm(psi(i)));
  } else {
    const Vector amp = vectors_.adjoint() * psi;
    for (Eigen::Index i = 0; i < n; ++i) total += (w[i] = std::norm(amp(i)));
  }
  return values_(sample_index(w, total, rng));
}

double ObservableSampler::expect(const Vector& psi) const {
  if (diagonal_) {
    double v = 0;
    for (Eigen::Index i = 0; i < values_.size(); ++i) v += values_(i) * std::norm(psi(i));
    return v;
  }
  return psi.dot(o_ * psi).real();
}

std::vector<double> run_shots(long shots, std::uint64_t seed, unsigned workers,
                              const std::function<double(Rng&, long)>& shot) {
  if (shots < 1) throw Error(ErrorKind::InvalidArgument, "shots must be >= 1");
  std::vector<double> values(static_cast<std::size_t>(shots));
  if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
  workers = static_cast<unsigned>(std::min<long>(workers, shots));
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto chunk = [&](long begin, long end) {
    try {
      for (long i = begin; i < end; ++i) {
        Rng rng = Rng::for_shot(seed, static_cast<std::uint64_t>(i));
        values[i] = shot(rng, i);
      }
    } catch (...) {
      std::lock_guard<std::mutex> lock(failure_mutex);
      if (!failure) failure = std::current_exception();
    }
  };
  if (workers == 1) {
    chunk(0, shots);
  } else {
    std::vector<std::thread> pool;
    const long per = (shots + workers - 1) / workers;
    for (unsigned w = 0; w < workers; ++w) {
      const long begin = w * per, end = std::min(shots, begin + per);
      if (begin < end) pool.emplace_back(chunk, begin, end);
    }
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);
  return values;
}

namespace {

GradEstimate reduce(const std::vector<double>& values,
                    const std::vector<char>& fired) {
  GradEstimate g;
  g.shots = static_cast<long>(values.size());
  double sum = 0;
  for (double v : values) sum += v;
  g.mean = sum / g.shots;
  double ss = 0;
  for (double v : values) ss += (v - g.mean) * (v - g.mean);
  g.sample_variance = g.shots > 1 ? ss / (g.shots - 1) : 0.0;
  g.std_error = std::sqrt(g.sample_variance / g.shots);
  long count = 0;
  for (char f : fired) count += f;
  g.fired_fraction = static_cast<double>(count) / g.shots;
  return g;
}

GradEstimate sample_moment(const DiffProgram& diff,
                           const std::vector<double>& theta,
                           const DensityState& rho, const Matrix& observable,
                           const SamplingOptions& options, int power) {
  check_state(diff.program, rho);
  if (observable.rows() != rho.matrix.rows())
    throw Error(ErrorKind::DimMismatch, "observable dimension differs from state");
  DiffExecutable exe(diff, theta);
  PureSampler initial(rho);
  ObservableSampler obs(observable);
  const ShotMode mode = power == 1 ? options.mode : ShotMode::Faithful;
  std::vector<char> fired(static_cast<std::size_t>(std::max(options.shots, 1L)), 0);
  auto shot = [&](Rng& rng, long i) {
    Vector psi = initial.sample(rng);
    const DiffExecutable::Shot s = exe.run_shot(psi, rng, options.k_max);
    fired[i] = s.fired;
    if (!s.fired) return 0.0;
    if (mode == ShotMode::Rao) return s.weight * obs.expect(psi);
    const double o = obs.sample(psi, rng);
    return power == 1 ? s.weight * o : s.weight * s.weight * o * o;
  };
  return reduce(run_shots(options.shots, options.seed, options.workers, shot), fired);
}

}  // namespace

GradEstimate estimate_gradient(const DiffProgram& diff,
                               const std::vector<double>& theta,
                               const DensityState& rho, const Matrix& observable,
                               const SamplingOptions& options) {
  return sample_moment(diff, theta, rho, observable, options, 1);
}

GradEstimate estimate_second_moment(const DiffProgram& diff,
                                    const std::vector<double>& theta,
                                    const DensityState& rho,
                                    const Matrix& observable,
                                    const SamplingOptions& options) {
  return sample_moment(diff, theta, rho, observable, options, 2);
}

// ---------------------------------------------------------------------------
// Spectral leak rate

namespace {

constexpr double kUnitThreshold = 1.0 - 1e-9;

bool contains_loop(const Node& n) {
  if (n.kind == Node::Kind::Loop) return true;
  for (const auto& c : n.children)
    if (contains_loop(c)) return true;
  return false;
}

// One loop iteration X -> B(M1 X M1^dagger).
struct IterationMap {
  const Node& loop;
  std::size_t dim;

  Matrix operator()(const Matrix& x) const {
    Slots s;
    s.m[0] = x;
    conjugate(loop.meas_ops[1], loop.targets, s.m[0]);
    DensityRun run;
    run.run(loop.children[0], s);
    return s.m[0].size() ? s.m[0] : Matrix::Zero(dim, dim);
  }
};

Vector vec(const Matrix& m) { return Eigen::Map<const Vector>(m.data(), m.size()); }
Matrix unvec(const Vector& v, std::size_t d) {
  return Eigen::Map<const Matrix>(v.data(), d, d);
}

SpectralResult from_moduli(const std::vector<double>& moduli,
                           const std::vector<double>& residuals,
                           const std::string& method) {
  SpectralResult r;
  r.method = method;
  bool any = false;
  for (std::size_t i = 0; i < moduli.size(); ++i) {
    if (moduli[i] >= kUnitThreshold) {
      ++r.unit_eigencount;
    } else if (!any || moduli[i] > r.epsilon) {
      any = true;
      r.epsilon = moduli[i];
      r.residual = residuals[i];
    }
  }
  if (!any)
    throw Error(ErrorKind::AllUnitSpectrum,
                "every eigenvalue of the loop iteration map has unit modulus");
  return r;
}

SpectralResult dense_spectrum(const IterationMap& map) {
  const std::size_t d = map.dim, n = d * d;
  Matrix e(n, n);
  for (std::size_t b = 0; b < d; ++b)
    for (std::size_t a = 0; a < d; ++a) {
      Matrix x = Matrix::Zero(d, d);
      x(a, b) = 1.0;
      e.col(b * d + a) = vec(map(x));
    }
  Eigen::ComplexEigenSolver<Matrix> solver(e, true);
  const Vector lambda = solver.eigenvalues();
  const Matrix& v = solver.eigenvectors();
  std::vector<double> moduli(n), residuals(n);
  const double scale = std::max(1.0, e.norm());
  for (std::size_t i = 0; i < n; ++i) {
    moduli[i] = std::abs(lambda(i));
    residuals[i] = (e * v.col(i) - lambda(i) * v.col(i)).norm() / scale;
  }
  SpectralResult r = from_moduli(moduli, residuals, "dense");
  // The eigenvectors at the leading contracting modulus must be independent,
  // otherwise that eigenvalue sits in a nontrivial Jordan block.
  std::vector<Eigen::Index> lead;
  for (std::size_t i = 0; i < n; ++i)
    if (moduli[i] < kUnitThreshold && std::abs(moduli[i] - r.epsilon) < 1e-6)
      lead.push_back(static_cast<Eigen::Index>(i));
  if (r.epsilon > 1e-9) {
    Matrix block(n, lead.size());
    for (std::size_t k = 0; k < lead.size(); ++k) block.col(k) = v.col(lead[k]);
    Eigen::JacobiSVD<Matrix> svd(block);
    const double smallest = svd.singularValues().tail(1)(0);
    double worst = 0;
    for (auto i : lead) worst = std::max(worst, residuals[i]);
    if (worst > 1e-6 || smallest < 1e-6)
      throw Error(ErrorKind::NonDiagonalizable,
                  "loop iteration map is not diagonalizable at its leading "
                  "contracting eigenvalue");
    r.residual = worst;
  }
  return r;
}

// Ritz moduli and residual estimates of the leading m x m Hessenberg block.
void ritz(const Matrix& h, std::size_t m, double tail, std::vector<double>& moduli,
          std::vector<double>& residuals) {
  Eigen::ComplexEigenSolver<Matrix> solver(h.topLeftCorner(m, m), true);
  moduli.assign(m, 0.0);
  residuals.assign(m, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    moduli[i] = std::abs(solver.eigenvalues()(i));
    const Vector y = solver.eigenvectors().col(i);
    residuals[i] = tail * std::abs(y(m - 1)) / y.norm();
  }
}

SpectralResult arnoldi_spectrum(const IterationMap& map) {
  const std::size_t d = map.dim, n = d * d;
  const std::size_t budget_bytes = std::size_t(512) << 20;
  const std::size_t m_max =
      std::max<std::size_t>(8, std::min<std::size_t>({n, 300, budget_bytes / (16 * n)}));
  Rng rng(0x5eed5eedULL);
  Vector start(n);
  for (std::size_t i = 0; i < n; ++i) start(i) = cplx(rng.normal(), rng.normal());
  std::vector<Vector> q;
  q.push_back(start / start.norm());
  Matrix h = Matrix::Zero(m_max + 1, m_max);
  std::vector<double> moduli, residuals;
  double previous = -1.0;
  for (std::size_t m = 0; m < m_max; ++m) {
    Vector w = vec(map(unvec(q[m], d)));
    const double wnorm = w.norm();
    for (int pass = 0; pass < 2; ++pass)
      for (std::size_t i = 0; i <= m; ++i) {
        const cplx c = q[i].dot(w);
        h(i, m) += c;
        w -= c * q[i];
      }
    const double tail = w.norm();
    h(m + 1, m) = tail;
    if (tail <= 1e-8 * std::max(1.0, wnorm)) {
      // Invariant subspace: the Ritz values are exact eigenvalues.
      ritz(h, m + 1, 0.0, moduli, residuals);
      return from_moduli(moduli, residuals, "arnoldi");
    }
    // Stop once the leading contracting Ritz value is settled. Leading
    // eigenvalues may come in near-degenerate clusters whose Ritz values
    // wander at the 1e-7 level, hence the loose stability test.
    if (m + 1 >= 20 && (m + 1) % 5 == 0) {
      ritz(h, m + 1, tail, moduli, residuals);
      const SpectralResult r = from_moduli(moduli, residuals, "arnoldi");
      if (r.residual < 1e-10 && std::abs(r.epsilon - previous) < 1e-6) return r;
      previous = r.epsilon;
    }
    q.push_back(w / tail);
  }
  ritz(h, m_max, h(m_max, m_max - 1).real(), moduli, residuals);
  return from_moduli(moduli, residuals, "arnoldi");
}

}  // namespace

double fit_decay_rate(const std::vector<double>& masses, int from, int to) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int count = 0;
  for (int n = from; n <= to && n < static_cast<int>(masses.size()); ++n) {
    if (!(masses[n] > 0)) continue;
    const double y = std::log(masses[n]);
    sx += n;
    sy += y;
    sxx += double(n) * n;
    sxy += n * y;
    ++count;
  }
  if (count < 2) return 0.0;
  const double slope = (count * sxy - sx * sy) / (count * sxx - sx * sx);
  return std::exp(slope);
}

SpectralResult epsilon_spectral(const Program& program, const Statement& loop,
                                const std::vector<double>& theta,
                                SpectralMethod method) {
  if (loop.kind != StmtKind::While)
    throw Error(ErrorKind::InvalidArgument, "statement is not a while loop");
  Executable exe(program, theta);
  const Node* node = exe.find(&loop);
  if (!node) throw Error(ErrorKind::InvalidArgument, "loop is not part of program");
  const std::size_t d = program.dimension();
  if (contains_loop(node->children[0])) {
    const Matrix mixed = Matrix::Identity(d, d) / static_cast<double>(d);
    const auto masses =
        loop_term_masses(program, loop, theta, DensityState(mixed), 50);
    SpectralResult r;
    r.method = "decay-fit";
    r.epsilon = fit_decay_rate(masses, 5, 50);
    return r;
  }
  const IterationMap map{*node, d};
  if (method == SpectralMethod::Auto)
    method = d <= 16 ? SpectralMethod::Dense : SpectralMethod::Arnoldi;
  return method == SpectralMethod::Dense ? dense_spectrum(map) : arnoldi_spectrum(map);
}

// ---------------------------------------------------------------------------
// Moment bounds

namespace {

// Lazily extended partial sums of 1/mu(j)^p.
class InverseMuSums {
 public:
  InverseMuSums(const MuDistribution& mu, int power) : mu_(mu), power_(power) {
    sums_.push_back(0.0);
  }
  double operator()(long n) {
    while (static_cast<long>(sums_.size()) <= n) {
      const long j = static_cast<long>(sums_.size());
      sums_.push_back(sums_.back() + std::pow(1.0 / mu_.mu(j), power_));
    }
    return sums_[n];
  }

 private:
  const MuDistribution& mu_;
  int power_;
  std::vector<double> sums_;
};

double moment_series(double prefactor, int M1, int M2, const MuDistribution& mu,
                     double epsilon, int N, double tol, int power) {
  if (prefactor == 0.0) return 0.0;
  if (M1 < 0 || M2 < 0 || N < 1)
    throw Error(ErrorKind::InvalidArgument, "counts must be nonnegative and N >= 1");
  InverseMuSums S(mu, power);
  double total = 4.0 * S(M1);
  if (M2 == 0) return prefactor * total;
  if (!(epsilon > 0 && epsilon < 1))
    throw Error(ErrorKind::InvalidArgument, "epsilon must lie in (0, 1)");
  std::vector<double> terms{0.0};
  const long k_cap = 1000000;
  for (long k = 1; k <= k_cap; ++k) {
    const double growth = std::pow(double(k), M2 - 1) - 1.0;
    const double coef = M2 + (k - 1) * std::max(growth, 0.0);
    const double reach = std::pow(double(k + 1), M2) * M1 - 1.0;
    if (reach > 5e7)
      throw Error(ErrorKind::InvalidArgument, "moment series does not settle");
    const long e = (k - 1) / N;
    const double decay = 2.0 * std::pow(epsilon, e) + 2.0 * std::pow(epsilon, e - 1);
    const double term = coef * S(static_cast<long>(reach)) * decay;
    total += term;
    terms.push_back(term);
    if (k > 2 * N) {
      const double q = term / terms[k - N];
      if (q < 1.0 && N * term * q / (1.0 - q) < tol * total) break;
    }
  }
  return prefactor * total;
}

}  // namespace

double variance_bound_series(double M, int M1, int M2, const MuDistribution& mu,
                             double epsilon, int N_epsilon, double tol) {
  return moment_series(M * M, M1, M2, mu, epsilon, N_epsilon, tol, 1);
}

double fourth_moment_bound(double M, int M1, int M2, const MuDistribution& mu,
                           double epsilon, int N_epsilon, double tol) {
  return moment_series(4.0 * M * M, M1, M2, mu, epsilon, N_epsilon, tol, 3);
}

long plan_samples(double variance, double delta, double fail_prob) {
  if (!(delta > 0) || !(fail_prob > 0 && fail_prob < 1))
    throw Error(ErrorKind::InvalidArgument, "need delta > 0 and fail_prob in (0, 1)");
  const double x = std::max(variance, 0.0) / (delta * delta * fail_prob);
  // Absorb rounding in the quotient before taking the ceiling.
  const double n = std::ceil(x * (1.0 - 1e-12));
  return std::max(1L, static_cast<long>(n));
}

namespace {

VarianceReport bound_report(const DiffProgram& diff,
                            const std::vector<double>& theta,
                            const Matrix& observable) {
  VarianceReport r;
  r.running_count = running_count(diff.base, diff.param);
  r.loop_count = loop_count(diff.base);
  r.observable_norm = la::spectral_norm(observable);
  for (const Statement* loop : collect_loops(diff.base.body))
    r.epsilon =
        std::max(r.epsilon, epsilon_spectral(diff.base, *loop, theta).epsilon);
  r.N_epsilon = 1;
  r.second_moment_bound = variance_bound_series(
      r.observable_norm, r.running_count, r.loop_count, diff.mu, r.epsilon, 1);
  r.fourth_moment_bound = fourth_moment_bound(
      r.observable_norm, r.running_count, r.loop_count, diff.mu, r.epsilon, 1);
  return r;
}

}  // namespace

VarianceReport theoretical_plan(const DiffProgram& diff,
                                const std::vector<double>& theta,
                                const Matrix& observable, double delta,
                                double fail_prob) {
  VarianceReport r = bound_report(diff, theta, observable);
  r.method = "theoretical";
  r.variance_input = r.second_moment_bound;
  r.planned_shots = plan_samples(r.second_moment_bound, delta, fail_prob);
  return r;
}

VarianceReport empirical_plan(const DiffProgram& diff,
                              const std::vector<double>& theta,
                              const DensityState& rho, const Matrix& observable,
                              const PlanOptions& options) {
  VarianceReport r = bound_report(diff, theta, observable);
  r.method = "empirical";
  r.pilot_shots = options.margin_delta > 0
                      ? plan_samples(r.fourth_moment_bound, options.margin_delta,
                                     options.margin_fail)
                      : 1;
  if (options.max_pilot_shots > 0)
    r.pilot_shots = std::min(r.pilot_shots, options.max_pilot_shots);
  SamplingOptions s;
  s.shots = r.pilot_shots;
  s.seed = options.seed;
  s.k_max = options.k_max;
  const GradEstimate pilot = estimate_second_moment(diff, theta, rho, observable, s);
  r.pilot_estimate = pilot.mean;
  r.pilot_std_error = pilot.std_error;
  r.variance_input = pilot.mean + options.margin_delta;
  r.planned_shots = plan_samples(r.variance_input, options.delta, options.fail_prob);
  return r;
}

}  // namespace qwd
