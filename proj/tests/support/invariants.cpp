#include "invariants.hpp"

#include <cmath>
#include <sstream>

#include "generators.hpp"
#include "oracle.hpp"

namespace qwd::testing {

void PropertyResult::fail(int seed, const std::string& why) {
  if (failures++ == 0) first_failure = "seed " + std::to_string(seed) + ": " + why;
}

namespace {

std::string num(double x) {
  std::ostringstream s;
  s.precision(12);
  s << x;
  return s.str();
}

// Random program variants: one or two parameters, with or without branches.
RandomCase varied_case(std::uint64_t seed) {
  CaseOptions o;
  o.params = 1 + static_cast<int>(seed % 2);
  o.branches = (seed / 2) % 3 != 0;
  return random_loop_case(seed, o);
}

}  // namespace

PropertyResult check_trace_monotonicity(int cases, std::uint64_t seed) {
  PropertyResult r;
  for (int i = 0; i < cases; ++i, ++r.cases) {
    const std::uint64_t s = mix_key(seed, i);
    RandomCase c = varied_case(s);
    Rng rng(mix_key(s, 1));
    // Partial input density.
    const double scale = 0.1 + 0.9 * rng.uniform();
    const DensityState in(scale * c.rho.matrix);
    Program prefix = c.program;
    const auto items = c.program.body.children;
    double prev = in.trace_mass();
    bool ok = true;
    for (std::size_t k = 1; k <= items.size() && ok; ++k) {
      prefix.body = stmt::seq({items.begin(), items.begin() + static_cast<long>(k)});
      TruncationPolicy policy;
      policy.tol_mass = 1e-9;
      const EvalResult out = evaluate(prefix, c.theta, in, policy);
      const double t = out.state.trace_mass();
      if (t > prev + 1e-10 && t > in.trace_mass() + 1e-10) {
        r.fail(i, "trace grew from " + num(prev) + " to " + num(t));
        ok = false;
      } else if (t + out.residual < in.trace_mass() - 1e-9) {
        r.fail(i, "trace deficit " + num(in.trace_mass() - t) +
                      " exceeds residual " + num(out.residual));
        ok = false;
      } else if (!la::is_psd(out.state.matrix, 1e-9)) {
        r.fail(i, "output is not positive semidefinite");
        ok = false;
      }
      prev = t;
    }
  }
  return r;
}

PropertyResult check_branch_completeness(int cases, std::uint64_t seed) {
  PropertyResult r;
  for (int i = 0; i < cases; ++i, ++r.cases) {
    Rng rng(mix_key(seed, i));
    const int d = rng.uniform() < 0.5 ? 2 : 3;
    const int k = 2 + static_cast<int>(rng.uniform() * 3) % 3;
    const auto kraus = rnd::random_channel(d, k, rng);
    std::vector<int> labels;
    for (int j = 0; j < k; ++j) labels.push_back(2 * j + static_cast<int>(rng.uniform() * 2));
    Program p;
    p.add_register("q", d).add_register("f", k);
    p.add_measurement("D", labels, kraus);
    // Arm j writes j into the flag register f (which starts in |0>).
    std::vector<std::pair<int, Statement>> arms;
    for (int j = 0; j < k; ++j) {
      Matrix shift = Matrix::Zero(k, k);
      for (int x = 0; x < k; ++x) shift((x + j) % k, x) = 1.0;
      const std::string name = "X" + std::to_string(j);
      p.add_matrix(name, MatrixKind::Gate, shift);
      arms.push_back({labels[j], stmt::unitary(name, {"f"})});
    }
    p.body = stmt::if_meas("D", {"q"}, arms);
    if (!validate(p).ok()) {
      r.fail(i, "complete if-statement rejected");
      continue;
    }
    const Matrix rho_q = rnd::random_density(d, rng);
    Matrix f0 = Matrix::Zero(k, k);
    f0(0, 0) = 1.0;
    const DensityState in(la::kron(rho_q, f0));
    const Matrix out = evaluate(p, {}, in).state.matrix;
    double total = 0;
    bool ok = true;
    for (int j = 0; j < k && ok; ++j) {
      // Probability of arm j: mass of f = j.
      double got = 0;
      for (int x = 0; x < d; ++x) got += out(x * k + j, x * k + j).real();
      const double want = (kraus[j] * rho_q * kraus[j].adjoint()).trace().real();
      if (std::abs(got - want) > 1e-10) {
        r.fail(i, "branch " + std::to_string(j) + " mass " + num(got) + " vs " + num(want));
        ok = false;
      }
      total += got;
    }
    if (!ok) continue;
    if (std::abs(total - 1.0) > 1e-10) {
      r.fail(i, "branch masses sum to " + num(total));
      continue;
    }
    Program missing = p;
    const int drop = static_cast<int>(rng.uniform() * k) % k;
    missing.body.children.erase(missing.body.children.begin() + drop);
    missing.body.labels.erase(missing.body.labels.begin() + drop);
    if (validate(missing).ok()) {
      r.fail(i, "if-statement without arm for outcome " + std::to_string(labels[drop]) +
                    " accepted");
      continue;
    }
    Program broken = p;
    broken.measurements[0].ops[0] *= 1.01;
    const ValidationReport v = validate(broken);
    if (v.ok() || v.errors.front().kind != ErrorKind::IncompleteMeasurement)
      r.fail(i, "incomplete measurement accepted");
  }
  return r;
}

PropertyResult check_mu_normalization(int cases, std::uint64_t seed) {
  PropertyResult r;
  const long head = 20000;
  for (int i = 0; i < cases; ++i, ++r.cases) {
    Rng rng(mix_key(seed, i));
    // Cover the full range of s, with the default value as the first case.
    const double s = i == 0 ? 0.25 : 0.05 + 0.95 * rng.uniform();
    const MuDistribution mu(s);
    const double c = mu.normalizer();
    // Independent tail bracket: int_{N+1}^inf f <= sum_{n>N} f <= int_N^inf f,
    // with f(x) = 1/(x ln^{1+s}(x+e)) integrated numerically below.
    auto tail_integral = [s](double from) {
      // Substituting x = from * e^u gives int_0^inf from e^u f(from e^u) du.
      double sum = 0;
      const double du = 5e-3;
      const int steps = 40000;  // u up to exactly 200
      for (int k = 0; k < steps; ++k) {
        const double u = k * du;
        auto g = [&](double v) {
          const double x = from * std::exp(v);
          return x / (x * std::pow(std::log(x + M_E), 1.0 + s));
        };
        sum += du / 6 * (g(u) + 4 * g(u + du / 2) + g(u + du));
      }
      return sum;
    };
    double head_sum = 0;
    for (long n = head; n >= 1; --n)
      head_sum += 1.0 / (static_cast<double>(n) * std::pow(std::log(n + M_E), 1.0 + s));
    // Beyond x = from e^200 the integrand equals 1/(x ln^{1+s} x) to double
    // precision, whose integral is ln^{-s}(x)/s.
    auto far = [s](double from) { return std::pow(std::log(from) + 200.0, -s) / s; };
    const double lo = head_sum + tail_integral(head + 1.0) + far(head + 1.0);
    const double hi = head_sum + tail_integral(static_cast<double>(head)) + far(head);
    if (c < lo - 1e-7 * c || c > hi + 1e-7 * c) {
      r.fail(i, "s=" + num(s) + " normalizer " + num(c) + " outside [" + num(lo) + ", " +
                    num(hi) + "]");
      continue;
    }
    double survive = 1.0;
    bool ok = true;
    for (long j = 1; j <= 2000 && ok; ++j) {
      const double b = mu.b(j);
      if (!(b >= 0.0 && b <= 1.0)) {
        r.fail(i, "b(" + std::to_string(j) + ") = " + num(b));
        ok = false;
      }
      survive *= 1.0 - b;
      const double left = 1.0 - mu.cumulative(j);
      if (std::abs(survive - left) > 1e-12) {
        r.fail(i, "survival product " + num(survive) + " vs " + num(left));
        ok = false;
      }
    }
  }
  return r;
}

PropertyResult check_parser_round_trip(int cases, std::uint64_t seed) {
  PropertyResult r;
  for (int i = 0; i < cases; ++i, ++r.cases) {
    const std::uint64_t s = mix_key(seed, i);
    RandomCase c = varied_case(s);
    Program p = c.program;
    // Exercise observable declarations and init statements as well.
    p.add_matrix("O", MatrixKind::Observable, c.observable);
    Rng rng(mix_key(s, 2));
    p.add_matrix("Oa", MatrixKind::Observable, random_observable(p.registers[1].dim, rng),
                 {"a"});
    p.body.children.insert(p.body.children.begin(), stmt::init("a"));
    if (s % 3 == 0) {
      // Differential programs carry eul markers.
      p = transform_commutator(p, "theta").program;
    }
    const std::string text = format(p);
    Program back;
    try {
      back = parse(text);
    } catch (const std::exception& e) {
      r.fail(i, std::string("parse failed: ") + e.what());
      continue;
    }
    if (!structurally_equal(p, back))
      r.fail(i, "structure differs after round trip");
    else if (format(back) != text)
      r.fail(i, "formatting is not idempotent");
  }
  return r;
}

PropertyResult check_count_oracle(int cases, std::uint64_t seed) {
  PropertyResult r;
  for (int i = 0; i < cases; ++i, ++r.cases) {
    const std::uint64_t s = mix_key(seed, i);
    RandomCase c = varied_case(s);
    Program p = c.program;
    // Occasionally append a second loop to vary the loop count.
    if (s % 4 == 0) {
      const Statement& loop = c.program.body.children.back();
      const Statement& body_rot = loop.body().children[1];
      p.body.children.push_back(stmt::while_loop(
          "M", {"g"},
          stmt::seq({stmt::rot("theta", "s1", body_rot.registers),
                     stmt::init_density("guard", {"g"})})));
    }
    for (const auto& prm : p.params) {
      const int want = text_running_count(p, prm.name);
      const int got = running_count(p, prm.name);
      if (want != got)
        r.fail(i, "running_count(" + prm.name + ") = " + std::to_string(got) + ", text says " +
                      std::to_string(want));
    }
    if (loop_count(p) != text_loop_count(p))
      r.fail(i, "loop_count = " + std::to_string(loop_count(p)) + ", text says " +
                    std::to_string(text_loop_count(p)));
  }
  return r;
}

}  // namespace qwd::testing
