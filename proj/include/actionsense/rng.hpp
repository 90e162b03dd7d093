#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace actionsense {

inline uint64_t splitmix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// One global seed fans out to every stage that draws randomness:
// stage seed = splitmix64(global + role). Keeps a single --seed flag in
// control of split/init/shuffle/dropout while the streams stay independent.
enum class SeedRole : uint64_t {
    split = 1,
    init = 2,
    shuffle = 3,
    dropout = 4,
    fixtures = 5,
};

inline uint64_t derive_seed(uint64_t global_seed, SeedRole role) {
    return splitmix64(global_seed + static_cast<uint64_t>(role));
}

// Uniform double in [0,1). Raw-bit construction so sequences are identical
// across standard libraries (std::uniform_real_distribution is not).
inline double uniform_unit(std::mt19937_64& gen) {
    return static_cast<double>(gen() >> 11) * 0x1.0p-53;
}

inline double uniform_range(std::mt19937_64& gen, double lo, double hi) {
    return lo + (hi - lo) * uniform_unit(gen);
}

// Unbiased integer in [0, n) via rejection sampling.
inline uint64_t uniform_below(std::mt19937_64& gen, uint64_t n) {
    if (n == 0) return 0;
    const uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    uint64_t x;
    do {
        x = gen();
    } while (x >= limit);
    return x % n;
}

// Fisher-Yates with the portable integer draw above.
template <typename T>
void shuffle_in_place(std::vector<T>& v, std::mt19937_64& gen) {
    for (size_t i = v.size(); i > 1; --i) {
        const size_t j = static_cast<size_t>(uniform_below(gen, i));
        std::swap(v[i - 1], v[j]);
    }
}

} // namespace actionsense
