#pragma once

#include <cstdint>
#include <limits>

namespace qkd {

// Counter-friendly 64-bit generator (splitmix64). Construction is free, so a
// fresh stream can be derived per protocol round; results are then independent
// of worker count and iteration order.
class SplitMix64 {
public:
    using result_type = std::uint64_t;

    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<std::uint64_t>::max(); }

    result_type operator()() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // Uniform double in [0, 1).
    double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

    // Bernoulli draw.
    bool flip(double p) { return uniform() < p; }

private:
    std::uint64_t state_;
};

// Mixes a master seed with a stream index (e.g. a round index) into an
// independent stream seed.
inline std::uint64_t derive_stream_seed(std::uint64_t master, std::uint64_t index) {
    std::uint64_t z = master ^ (index + 0x9e3779b97f4a7c15ULL + (master << 6) + (master >> 2));
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline SplitMix64 substream(std::uint64_t master, std::uint64_t index) {
    return SplitMix64(derive_stream_seed(master, index));
}

} // namespace qkd
