#include "fdrelay/rng.hpp"

#include <cmath>

namespace fdrelay {

double RandomStream::uniform() {
    // Top 53 bits give a double in [0, 1) on the 2^-53 grid.
    return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
}

double RandomStream::gaussian() {
    if (has_cached_) {
        has_cached_ = false;
        return cached_;
    }
    const double u1 = 1.0 - uniform();  // in (0, 1], keeps the log finite
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * M_PI * u2;
    cached_ = r * std::sin(theta);
    has_cached_ = true;
    return r * std::cos(theta);
}

cxd RandomStream::complex_gaussian(double variance) {
    const double s = std::sqrt(variance / 2.0);
    const double re = s * gaussian();
    const double im = s * gaussian();
    return {re, im};
}

CMat RandomStream::complex_gaussian_matrix(Eigen::Index rows, Eigen::Index cols,
                                           double variance) {
    CMat out(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j) {
        for (Eigen::Index i = 0; i < rows; ++i) {
            out(i, j) = complex_gaussian(variance);
        }
    }
    return out;
}

std::uint64_t RandomStream::derive_seed(std::uint64_t master, std::uint64_t index) {
    // splitmix64 finalizer applied to master xor a golden-ratio multiple of index+1.
    std::uint64_t z = master ^ ((index + 1) * 0x9E3779B97F4A7C15ULL);
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

}  // namespace fdrelay
