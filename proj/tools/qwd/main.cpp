// qwd: command-line front end. Every command prints one JSON object on
// stdout. Exit codes: 0 success, 1 usage, 2 validation, 3 runtime.

#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "qwd/qwd.hpp"

namespace {

using nlohmann::json;
using namespace qwd;

constexpr int kExitUsage = 1;
constexpr int kExitValidation = 2;
constexpr int kExitRuntime = 3;

json result(const std::string& kind) {
  return json{{"format", "qwd-result/1"}, {"kind", kind}};
}

json span_json(const SourceSpan& span) {
  return json{{"line", span.line}, {"column", span.column}, {"offset", span.offset}};
}

int fail(const std::string& kind, const std::string& message, int code,
         json extra = json::object()) {
  json out = result("error");
  out["error"] = extra;
  out["error"]["kind"] = kind;
  out["error"]["message"] = message;
  std::cout << out.dump(2) << std::endl;
  return code;
}

std::string read_text(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::InvalidArgument, "cannot read '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    std::size_t used = 0;
    double v = 0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != item.size())
      throw Error(ErrorKind::InvalidArgument, "not a number: '" + item + "'");
    out.push_back(v);
  }
  return out;
}

std::vector<double> theta_for(const Program& p, const std::string& text) {
  if (text.empty()) return std::vector<double>(p.params.size(), 0.0);
  std::vector<double> theta = parse_list(text);
  if (theta.size() != p.params.size())
    throw Error(ErrorKind::DimMismatch,
                "--theta has " + std::to_string(theta.size()) +
                    " values, program declares " + std::to_string(p.params.size()));
  return theta;
}

std::string default_observable(const Program& p, const std::string& name) {
  if (!name.empty()) return name;
  for (const auto& m : p.matrices)
    if (m.kind == MatrixKind::Observable) return m.name;
  throw Error(ErrorKind::UndeclaredName, "program declares no observable");
}

int param_index(const Program& p, const std::string& name) {
  const Param* prm = p.find_param(name);
  if (!prm) throw Error(ErrorKind::UndeclaredName, "parameter '" + name + "'");
  return prm->index;
}

Program load_program(const std::string& path) {
  Program p = parse_unchecked(read_text(path));
  const ValidationReport report = validate(p);
  if (!report.ok()) {
    const Diagnostic& d = report.errors.front();
    throw Error(d.kind, d.message, d.path, d.span);
  }
  return p;
}

// ---------------------------------------------------------------------------

struct CommonArgs {
  std::string file;
  std::string theta;
  std::string obs;
  double tol = 1e-10;
  long kmax = 1000000;
};

int cmd_parse(const CommonArgs& a) {
  Program p = parse_unchecked(read_text(a.file));
  const ValidationReport report = validate(p);
  if (!report.ok()) {
    json diags = json::array();
    for (const auto& d : report.errors)
      diags.push_back({{"kind", to_string(d.kind)},
                       {"message", d.message},
                       {"path", d.path},
                       {"span", span_json(d.span)}});
    const Diagnostic& first = report.errors.front();
    return fail(to_string(first.kind), first.message, kExitValidation,
                {{"path", first.path}, {"span", span_json(first.span)},
                 {"diagnostics", diags}});
  }
  json out = result("parse");
  out["ok"] = true;
  json regs = json::array();
  for (const auto& r : p.registers) regs.push_back({{"name", r.name}, {"dim", r.dim}});
  out["registers"] = regs;
  out["dimension"] = p.dimension();
  json params = json::array();
  json rc = json::object();
  for (const auto& prm : p.params) {
    params.push_back(prm.name);
    rc[prm.name] = running_count(p, prm.name);
  }
  out["params"] = params;
  out["running_count"] = rc;
  out["loop_count"] = loop_count(p);
  out["normalized"] = format(p);
  std::cout << out.dump(2) << std::endl;
  return 0;
}

int cmd_eval(const CommonArgs& a) {
  Program p = load_program(a.file);
  const std::vector<double> theta = theta_for(p, a.theta);
  const std::string obs = default_observable(p, a.obs);
  TruncationPolicy policy{a.tol, a.kmax};
  const DensityState rho = DensityState::zero(p);
  const EvalResult ev = evaluate(p, theta, rho, policy);
  const Matrix o = observable_matrix(p, obs);
  json out = result("eval");
  out["value"] = (o * ev.state.matrix).trace().real();
  out["error_bound"] = ev.residual * la::spectral_norm(o);
  out["residual"] = ev.residual;
  out["trace"] = ev.state.trace_mass();
  out["theta"] = theta;
  out["observable"] = obs;
  std::cout << out.dump(2) << std::endl;
  return 0;
}

struct GradArgs {
  std::string param = "theta";
  std::string method = "commutator";
  long shots = 100000;
  double mu_s = 0.25;
  std::uint64_t seed = 0;
  std::string mode = "faithful";
  double h = 1e-5;
  bool exact = false;
};

int cmd_grad(const CommonArgs& a, const GradArgs& g) {
  Program p = load_program(a.file);
  const std::vector<double> theta = theta_for(p, a.theta);
  const std::string obs = default_observable(p, a.obs);
  const Matrix o = observable_matrix(p, obs);
  const DensityState rho = DensityState::zero(p);
  TruncationPolicy policy{a.tol, a.kmax};
  json out = result("grad");
  out["method"] = g.method;
  out["param"] = g.param;
  out["theta"] = theta;
  out["observable"] = obs;
  if (g.method == "finite-diff") {
    const int k = param_index(p, g.param);
    std::vector<double> plus = theta, minus = theta;
    plus[k] += g.h;
    minus[k] -= g.h;
    const double fp = expectation(p, plus, rho, o, policy).value;
    const double fm = expectation(p, minus, rho, o, policy).value;
    out["mean"] = (fp - fm) / (2.0 * g.h);
    out["std_error"] = 0.0;
    out["shots"] = 0;
    out["step"] = g.h;
  } else {
    const MuDistribution mu(g.mu_s);
    const DiffProgram diff = g.method == "commutator"
                                 ? transform_commutator(p, g.param, mu)
                                 : g.method == "param-shift"
                                       ? transform_param_shift(p, g.param, mu)
                                       : throw Error(ErrorKind::InvalidArgument,
                                                     "unknown method '" + g.method + "'");
    SamplingOptions s;
    s.shots = g.shots;
    s.seed = g.seed;
    s.mode = shot_mode_from_string(g.mode);
    s.k_max = a.kmax;
    const GradEstimate est = estimate_gradient(diff, theta, rho, o, s);
    out["mean"] = est.mean;
    out["std_error"] = est.std_error;
    out["shots"] = est.shots;
    out["fired_fraction"] = est.fired_fraction;
    out["sample_variance"] = est.sample_variance;
    out["mode"] = g.mode;
    out["seed"] = g.seed;
    if (g.exact) {
      const DiffExpectation ex = exact_diff_expectation(diff, theta, rho, o, policy);
      out["exact"] = {{"value", ex.value}, {"error_bound", ex.error_bound}};
    }
  }
  std::cout << out.dump(2) << std::endl;
  return 0;
}

struct VarianceArgs {
  std::string param = "theta";
  bool empirical = false;
  double delta = 0.1;
  double fail = 0.1;
  double margin_delta = 30.0;
  double margin_fail = 0.1;
  long max_pilot = 0;
  double mu_s = 0.25;
  std::uint64_t seed = 0;
};

int cmd_variance(const CommonArgs& a, const VarianceArgs& v) {
  Program p = load_program(a.file);
  const std::vector<double> theta = theta_for(p, a.theta);
  const std::string obs = default_observable(p, a.obs);
  const Matrix o = observable_matrix(p, obs);
  const DiffProgram diff = transform_commutator(p, v.param, MuDistribution(v.mu_s));
  VarianceReport r;
  if (v.empirical) {
    PlanOptions opts;
    opts.delta = v.delta;
    opts.fail_prob = v.fail;
    opts.margin_delta = v.margin_delta;
    opts.margin_fail = v.margin_fail;
    opts.seed = v.seed;
    opts.max_pilot_shots = v.max_pilot;
    opts.k_max = a.kmax;
    r = empirical_plan(diff, theta, DensityState::zero(p), o, opts);
  } else {
    r = theoretical_plan(diff, theta, o, v.delta, v.fail);
  }
  json out = json::parse(r.to_json());
  out["result_format"] = "qwd-result/1";
  std::cout << out.dump(2) << std::endl;
  return 0;
}

struct OptimizeArgs {
  std::string demo;
  int steps = 60;
  double alpha = 0.1;
  std::uint64_t seed = 0;
  long shots = 0;
  double p = 0.01;
  std::string csv;
  std::string mode = "faithful";
  std::string direction = "min";
};

int cmd_optimize(const CommonArgs& a, const OptimizeArgs& o) {
  Objective objective;
  std::vector<double> theta0;
  long shots = o.shots;
  if (!o.demo.empty()) {
    CaseStudySpec spec;
    if (o.demo == "paa")
      spec = build_paa(o.p);
    else if (o.demo == "qw")
      spec = build_qw(o.seed);
    else if (o.demo == "rus")
      spec = build_rus(o.seed);
    else
      throw Error(ErrorKind::InvalidArgument, "unknown demo '" + o.demo + "'");
    objective = Objective::from(spec);
    theta0 = spec.theta0;
    if (shots == 0) shots = spec.recommended_shots;
  } else {
    if (a.file.empty())
      throw Error(ErrorKind::InvalidArgument, "optimize needs FILE or --demo");
    objective.program = load_program(a.file);
    const std::string obs = default_observable(objective.program, a.obs);
    objective.terms.push_back({DensityState::zero(objective.program),
                               observable_matrix(objective.program, obs), obs});
    objective.direction = o.direction == "max" ? Direction::Maximize : Direction::Minimize;
    theta0 = theta_for(objective.program, a.theta);
    if (shots == 0) shots = 10000;
  }
  if (!a.theta.empty() && !o.demo.empty()) theta0 = theta_for(objective.program, a.theta);
  OptimizeOptions opts;
  opts.steps = o.steps;
  opts.alpha = o.alpha;
  opts.seed = o.seed;
  opts.shots = shots;
  opts.mode = shot_mode_from_string(o.mode);
  opts.k_max = a.kmax;
  const RunRecord record = optimize(objective, theta0, opts);
  if (!o.csv.empty()) {
    std::ofstream csv(o.csv);
    if (!csv) throw Error(ErrorKind::InvalidArgument, "cannot write '" + o.csv + "'");
    csv << record.to_csv();
  }
  json out = json::parse(record.to_json());
  out["direction"] = to_string(objective.direction);
  out["combiner"] = to_string(objective.combiner);
  out["shots_per_estimate"] = shots;
  std::cout << out.dump(2) << std::endl;
  return 0;
}

struct DemoArgs {
  double theta = 0.0;
  long shots = 100000;
  std::uint64_t seed = 0;
  double mu_s = 0.25;
};

int cmd_demo_prob(const DemoArgs& d) {
  const GradEstimate eul = prob_demo_eul(d.theta, MuDistribution(d.mu_s), d.shots, d.seed);
  const GradEstimate fwd = prob_demo_forward(d.theta, d.shots, d.seed);
  json out = result("demo-prob");
  out["theta"] = d.theta;
  out["target"] = 2.0 * std::cos(d.theta);
  out["eul"] = json::parse(eul.to_json());
  out["forward"] = json::parse(fwd.to_json());
  std::cout << out.dump(2) << std::endl;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"qwd: simulate and differentiate parameterized quantum while-programs"};
  app.require_subcommand(1);

  CommonArgs common;
  GradArgs grad;
  VarianceArgs var;
  OptimizeArgs opt;
  DemoArgs demo;

  auto add_common = [&](CLI::App* sub, bool file_required) {
    auto* f = sub->add_option("file", common.file, "program file (.qprog)");
    if (file_required) f->required();
    sub->add_option("--theta", common.theta, "comma-separated parameter values");
    sub->add_option("--obs", common.obs, "observable name");
    sub->add_option("--tol", common.tol, "loop truncation mass tolerance");
    sub->add_option("--kmax", common.kmax, "loop iteration budget");
  };

  auto* parse_cmd = app.add_subcommand("parse", "parse and validate a program");
  parse_cmd->add_option("file", common.file, "program file")->required();

  auto* eval_cmd = app.add_subcommand("eval", "exact expectation value");
  add_common(eval_cmd, true);

  auto* grad_cmd = app.add_subcommand("grad", "estimate a partial derivative");
  add_common(grad_cmd, true);
  grad_cmd->add_option("--param", grad.param, "parameter to differentiate");
  grad_cmd->add_option("--method", grad.method, "commutator | param-shift | finite-diff")
      ->check(CLI::IsMember({"commutator", "param-shift", "finite-diff"}));
  grad_cmd->add_option("--shots", grad.shots)->check(CLI::PositiveNumber);
  grad_cmd->add_option("--mu-s", grad.mu_s)->check(CLI::Range(1e-6, 1.0));
  grad_cmd->add_option("--seed", grad.seed);
  grad_cmd->add_option("--mode", grad.mode)->check(CLI::IsMember({"faithful", "rao"}));
  grad_cmd->add_option("--fd-step", grad.h, "finite-difference step");
  grad_cmd->add_flag("--exact", grad.exact, "also report exact_diff_expectation");

  auto* var_cmd = app.add_subcommand("variance", "second-moment bounds and sample plan");
  add_common(var_cmd, true);
  var_cmd->add_option("--param", var.param);
  var_cmd->add_flag("--empirical", var.empirical);
  var_cmd->add_option("--delta", var.delta);
  var_cmd->add_option("--fail", var.fail);
  var_cmd->add_option("--margin-delta", var.margin_delta);
  var_cmd->add_option("--margin-fail", var.margin_fail);
  var_cmd->add_option("--max-pilot", var.max_pilot);
  var_cmd->add_option("--mu-s", var.mu_s)->check(CLI::Range(1e-6, 1.0));
  var_cmd->add_option("--seed", var.seed);

  auto* opt_cmd = app.add_subcommand("optimize", "Adam training over sampled gradients");
  add_common(opt_cmd, false);
  opt_cmd->add_option("--demo", opt.demo)->check(CLI::IsMember({"paa", "qw", "rus"}));
  opt_cmd->add_option("--steps", opt.steps)->check(CLI::NonNegativeNumber);
  opt_cmd->add_option("--alpha", opt.alpha);
  opt_cmd->add_option("--seed", opt.seed);
  opt_cmd->add_option("--shots", opt.shots, "shots per gradient estimate (0: case default)");
  opt_cmd->add_option("--p", opt.p, "PAA success probability");
  opt_cmd->add_option("--csv", opt.csv, "write the per-step trace as CSV");
  opt_cmd->add_option("--mode", opt.mode)->check(CLI::IsMember({"faithful", "rao"}));
  opt_cmd->add_option("--direction", opt.direction)->check(CLI::IsMember({"min", "max"}));

  auto* demo_cmd = app.add_subcommand("demo", "demonstrations");
  demo_cmd->require_subcommand(1);
  auto* prob_cmd = demo_cmd->add_subcommand("prob", "probabilistic-loop estimators");
  prob_cmd->add_option("--theta", demo.theta);
  prob_cmd->add_option("--shots", demo.shots)->check(CLI::PositiveNumber);
  prob_cmd->add_option("--seed", demo.seed);
  prob_cmd->add_option("--mu-s", demo.mu_s)->check(CLI::Range(1e-6, 1.0));

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail("UsageError", e.what(), kExitUsage);
  }

  try {
    if (*parse_cmd) return cmd_parse(common);
    if (*eval_cmd) return cmd_eval(common);
    if (*grad_cmd) return cmd_grad(common, grad);
    if (*var_cmd) return cmd_variance(common, var);
    if (*opt_cmd) return cmd_optimize(common, opt);
    if (*prob_cmd) return cmd_demo_prob(demo);
  } catch (const SyntaxError& e) {
    return fail(to_string(e.kind()), e.what(), kExitValidation,
                {{"span", span_json(e.span())}, {"expected", e.expected()}});
  } catch (const Error& e) {
    const bool validation = is_validation_error(e.kind());
    json extra = json::object();
    if (!e.path().empty()) extra["path"] = e.path();
    if (e.span().valid()) extra["span"] = span_json(e.span());
    return fail(to_string(e.kind()), e.what(),
                validation ? kExitValidation : kExitRuntime, extra);
  } catch (const std::exception& e) {
    return fail("RuntimeError", e.what(), kExitRuntime);
  }
  return kExitUsage;
}
