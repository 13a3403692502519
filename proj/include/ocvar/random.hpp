#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace ocvar {

using Rng = std::mt19937_64;

/// Independent stream derived from a master seed. Streams with different ids
/// never share state, so adding draws to one leaves the others untouched.
inline Rng make_stream(std::uint64_t master_seed, std::uint64_t stream_id) {
    std::seed_seq seq{static_cast<std::uint32_t>(master_seed),
                      static_cast<std::uint32_t>(master_seed >> 32),
                      static_cast<std::uint32_t>(stream_id),
                      static_cast<std::uint32_t>(stream_id >> 32), 0x5eedu};
    return Rng(seq);
}

inline double uniform01(Rng& rng) {
    return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

/// Flat Dirichlet(1) draw of the given dimension.
inline std::vector<double> dirichlet_flat(std::size_t dim, Rng& rng) {
    std::exponential_distribution<double> expo(1.0);
    std::vector<double> out(dim);
    double total = 0.0;
    for (auto& x : out) {
        x = expo(rng);
        total += x;
    }
    for (auto& x : out) x /= total;
    return out;
}

/// Index drawn from a probability vector (assumed normalized).
inline std::size_t sample_index(const std::vector<double>& probs, Rng& rng) {
    const double u = uniform01(rng);
    double acc = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        acc += probs[i];
        if (u < acc) return i;
    }
    // rounding left u above the final partial sum: take the last nonzero entry
    for (std::size_t i = probs.size(); i-- > 0;)
        if (probs[i] > 0.0) return i;
    return probs.size() - 1;
}

}  // namespace ocvar
