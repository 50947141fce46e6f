#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "qwd/program.hpp"
#include "qwd/sim.hpp"

namespace qwd {

enum class Direction { Minimize, Maximize };
enum class Combiner { Sum, MseToOne };

const char* to_string(Direction d);
const char* to_string(Combiner c);

struct ObjectiveTerm {
  DensityState rho;
  Matrix observable;
  std::string observable_name;
};

struct CaseStudySpec {
  std::string name;
  Program program;
  std::vector<ObjectiveTerm> inputs;
  std::vector<double> theta0;
  Direction direction = Direction::Minimize;
  Combiner combiner = Combiner::Sum;
  long recommended_shots = 10000;
};

// Parameterized amplitude amplification with success probability p.
CaseStudySpec build_paa(double p);
int paa_counter_dim(double p);
double paa_theta0(double p);

// Quantum walk on a 4x4 grid with a parameterized shift. theta0 is drawn
// uniformly from 2*pi*[0.1, 0.9] using `seed`.
CaseStudySpec build_qw(std::uint64_t seed = 0);
// Shift operators on (c_x, c_y, q_x, q_y), 64 x 64.
Matrix qw_shift_moving();
Matrix qw_shift_flip();
Matrix qw_shift(double theta1, double theta2);
Matrix qw_marking_coin();
Matrix qw_uniform_position();

// Repeat-until-success with Haar-random V1, V2 drawn from `seed`.
CaseStudySpec build_rus(std::uint64_t seed);
struct RusUnitaries {
  Matrix v1, v2, u;
};
RusUnitaries rus_unitaries(std::uint64_t seed);
Matrix rus_recovery(double theta1, double theta2, double theta3);

}  // namespace qwd
