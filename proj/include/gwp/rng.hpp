#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <random>

namespace gwp {

using Rng = std::mt19937_64;

// splitmix64 mix step; used to derive independent stream seeds from one master seed
// so parallel loops can give every work item its own generator deterministically.
inline std::uint64_t mix_seed(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
    return mix_seed(mix_seed(seed) ^ mix_seed(stream + 0x517cc1b727220a95ull));
}

inline Rng make_rng(std::uint64_t seed, std::uint64_t stream = 0) {
    return Rng(derive_seed(seed, stream));
}

inline double rand_uniform(Rng& rng) {
    return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

inline double rand_normal(Rng& rng) {
    return std::normal_distribution<double>(0.0, 1.0)(rng);
}

inline Eigen::VectorXd normal_vector(Rng& rng, int n) {
    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i) v[i] = rand_normal(rng);
    return v;
}

}  // namespace gwp
