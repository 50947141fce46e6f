#pragma once

// Seeded random instances for property and acceptance tests.

#include <cstdint>
#include <vector>

#include "qwd/qwd.hpp"

namespace qwd::testing {

struct RandomCase {
  Program program;
  DensityState rho;
  Matrix observable;
  std::vector<double> theta;
};

struct CaseOptions {
  int max_dim = 8;          // total dimension cap, guard qubit included
  double min_leak = 0.2;    // per-iteration exit probability lower bound
  int params = 1;           // 1 or 2 parameters
  bool branches = true;     // allow an if-statement in the loop body
};

// A program of the shape
//   setd guard[g]; U0[data]; [rot(theta, s0)[..]];
//   while M[g] = 1 do U1[data]; rot(theta, s1)[..]; [if D[a] ...]; setd guard[g] od
// with Haar-random gates and densities. The guard density has weight at
// least min_leak on |0>, so each iteration exits with at least that
// probability.
RandomCase random_loop_case(std::uint64_t seed, const CaseOptions& options = {});

// Channel sandwich with system dimension 2 or 4 and sigma on the leading
// factor.
struct SandwichCase {
  ChannelSandwich sw;
  Matrix rho;
  double theta = 0.0;
};
SandwichCase random_sandwich(std::uint64_t seed);

// Hermitian matrix with spectral norm 1.
Matrix random_observable(int d, Rng& rng);

}  // namespace qwd::testing
