#ifndef FDRELAY_RNG_HPP
#define FDRELAY_RNG_HPP

#include <cstdint>
#include <random>

#include "fdrelay/linalg.hpp"

namespace fdrelay {

/// Seedable random stream with a fixed, documented algorithm so that runs are
/// bit-reproducible for a given seed:
///
///  - uniform():   mt19937_64 output, top 53 bits mapped to [0, 1)
///  - gaussian():  Box-Muller on two uniforms; z0 = sqrt(-2 ln u1) * cos(2 pi u2)
///                 is returned first and the sine companion is cached for the
///                 next call (u1 is drawn as 1 - uniform() so it is never zero)
///  - complex_gaussian(v): CN(0, v); real then imaginary part, each N(0, v/2)
///  - matrices are filled column by column
///
/// Distinct streams for trials/workers are derived with derive_seed(), a
/// splitmix64 mix of the master seed and an index, never by sharing state.
class RandomStream {
  public:
    explicit RandomStream(std::uint64_t seed) : gen_(seed) {}

    double uniform();
    double gaussian();
    cxd complex_gaussian(double variance);

    /// rows x cols matrix of i.i.d. CN(0, variance) entries, column-major fill order.
    CMat complex_gaussian_matrix(Eigen::Index rows, Eigen::Index cols, double variance);

    /// Deterministic sub-seed derivation (splitmix64 of master ^ golden-ratio-scaled index).
    static std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index);

  private:
    std::mt19937_64 gen_;
    bool has_cached_ = false;
    double cached_ = 0.0;
};

}  // namespace fdrelay

#endif
