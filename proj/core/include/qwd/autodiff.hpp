#pragma once

#include <optional>
#include <string>
#include <vector>

#include "qwd/engine.hpp"
#include "qwd/mu.hpp"
#include "qwd/program.hpp"
#include "qwd/sim.hpp"

namespace qwd {

enum class Backend { Commutator, ParamShift };
const char* to_string(Backend backend);
Backend backend_from_string(const std::string& name);

struct DiffSite {
  int index = 0;
  std::string density;
  std::vector<std::string> registers;
  // Derivative weight factor g: 1 for the commutator backend; 2r for the
  // parameter-shift backend when sigma has eigenvalues c +- r.
  double generator_scale = 1.0;
};

// A differential program. `program` is the base program with an `eul` marker
// in front of every occurrence of `param`; the marker carries the classical
// counter / fired flag / coin logic and the firing block of the backend.
struct DiffProgram {
  Program base;
  Program program;
  std::string param;
  Backend backend = Backend::Commutator;
  MuDistribution mu;
  std::vector<DiffSite> sites;

  std::string qprog() const;
  std::string sidecar_json() const;  // format "qwd-diff/1"
};

DiffProgram load_diff_program(const std::string& qprog_text,
                              const std::string& sidecar_json);

DiffProgram transform_commutator(const Program& program, const std::string& param,
                                 const MuDistribution& mu = MuDistribution());
DiffProgram transform_param_shift(const Program& program, const std::string& param,
                                  const MuDistribution& mu = MuDistribution());

// Removes every `eul` marker.
Statement strip_sites(const Statement& s);

double shot_weight(Backend backend, std::optional<long> fired_index, int z,
                   const MuDistribution& mu, double generator_scale = 1.0);

// Compiled differential program for repeated shots.
class DiffExecutable {
 public:
  DiffExecutable(const DiffProgram& diff, const std::vector<double>& theta);

  struct Shot {
    bool fired = false;
    long j = 0;
    int z = 0;
    double weight = 0.0;
    long occurrences = 0;
    long loop_iterations = 0;
  };

  // Runs one shot from the normalized pure state `psi`, leaving the final
  // normalized state in `psi`.
  Shot run_shot(Vector& psi, Rng& rng, long k_max) const;

  const Executable& executable() const { return exe_; }
  const DiffProgram& diff() const { return *diff_; }

  struct SiteOps {
    std::vector<LocalOp> plus;   // commutator: Kraus ops of the coupling, z=+1
    std::vector<LocalOp> minus;  // z=-1
    LocalOp k0, k1;              // parameter shift: ancilla outcomes 0 / 1
    double scale = 1.0;
  };
  const SiteOps& site_ops(int site) const { return ops_[site]; }

 private:
  const DiffProgram* diff_;
  Executable exe_;
  std::vector<SiteOps> ops_;
};

// Kraus operators of rho -> tr_copy(e^{-i a z S}(rho (x) sigma)e^{i a z S}) on
// the sigma register block, obtained from the doubled-space coupling.
std::vector<Matrix> coupling_kraus(const Matrix& sigma, double alpha, int z);

struct DiffExpectation {
  double value = 0.0;          // tr((O_d (x) O) [[D(P)]] rho)
  double error_bound = 0.0;
  double second_moment = 0.0;  // tr((O_d^2 (x) O^2) [[D(P)]] rho)
  double fired_mass = 0.0;
  double beyond_mass = 0.0;    // occurrence mass past J_max (not enumerated)
};

DiffExpectation exact_diff_expectation(const DiffProgram& diff,
                                       const std::vector<double>& theta,
                                       const DensityState& rho,
                                       const Matrix& observable,
                                       const TruncationPolicy& policy = {},
                                       long j_max = 60);

}  // namespace qwd
