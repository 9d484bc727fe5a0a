#pragma once

#include <cstdint>
#include <vector>

namespace cpl {

// splitmix64 finalizer; also used to derive independent stream seeds.
std::uint64_t mix64(std::uint64_t z);

// Maps (seed, a, b) to a stream seed. Episode i of epoch e draws from the
// stream derive_stream(seed, e, i) and from nothing else, so a resumed run
// replays the exact sequence a straight-through run would have seen.
std::uint64_t derive_stream(std::uint64_t seed, std::uint64_t a, std::uint64_t b);

// Deterministic generator with draws owned by this code end to end; episode
// streams and synthetic datasets must replay bit-exactly under a fixed seed.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64();

    // uniform in [0, 1)
    double next_double();

    // uniform in [lo, hi)
    double next_uniform(double lo, double hi);

    // standard normal via Box-Muller; the spare is cached
    double next_normal();

    // uniform integer in [0, n); n >= 1
    std::uint64_t next_below(std::uint64_t n);

private:
    std::uint64_t state_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

// First k positions of a Fisher-Yates pass over [0, n); k <= n.
std::vector<std::size_t> sample_without_replacement(Rng& rng, std::size_t n, std::size_t k);

// Seeded permutation of [0, n).
std::vector<std::size_t> shuffled_indices(Rng& rng, std::size_t n);

} // namespace cpl
