#pragma once

#include <vector>

#include "qwd/engine.hpp"
#include "qwd/linalg.hpp"

namespace qwd::rnd {

Matrix ginibre(int rows, int cols, Rng& rng);
// Haar-distributed unitary: QR of a complex Gaussian matrix with the phases
// of R's diagonal moved into Q.
Matrix haar_unitary(int d, Rng& rng);
Vector haar_state(int d, Rng& rng);
Matrix random_density(int d, Rng& rng, int rank = 0);  // rank 0 = full
Matrix random_hermitian(int d, Rng& rng);
// Kraus list of a random channel (sum K^dagger K = I) with `count` operators.
std::vector<Matrix> random_channel(int d, int count, Rng& rng);

}  // namespace qwd::rnd
