// rng.hpp - deterministic, splittable random streams for Monte Carlo runs
//
// Reproducibility contract: every stochastic operation takes a 64-bit master
// seed and derives independent streams with derive_stream(master, stream_id).
// Stream contents depend only on (master, stream_id), never on thread count
// or evaluation order, so parallel runs are bit-identical to serial ones.
#pragma once

#include <bit>
#include <cstdint>
#include <cmath>
#include <functional>
#include <numbers>
#include <thread>
#include <vector>

namespace sqclock {

// SplitMix64; used to expand seeds into generator state.
struct SplitMix64 {
    std::uint64_t state;

    explicit SplitMix64(std::uint64_t seed) : state(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }
};

// xoshiro256++ with a Box-Muller Gaussian. State is a value; copies are
// independent replays.
class RandomStream {
  public:
    RandomStream() { seed_state(0); }

    // Counter-based splitting rule: stream k of master seed m is seeded by
    // SplitMix64(m ^ ((k + 1) * 0x9E3779B97F4A7C15)).
    static RandomStream derive(std::uint64_t master, std::uint64_t stream_id) {
        RandomStream r;
        r.seed_state(master ^ ((stream_id + 1) * 0x9E3779B97F4A7C15ULL));
        return r;
    }

    std::uint64_t next_u64() {
        const std::uint64_t result = std::rotl(s_[0] + s_[3], 23) + s_[0];
        const std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = std::rotl(s_[3], 45);
        return result;
    }

    // Uniform in [0, 1).
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Uniform in (0, 1]; safe as a log() argument.
    double uniform_pos() {
        return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
    }

    // Standard normal via Box-Muller; second deviate is cached.
    double gaussian() {
        if (has_cached_) {
            has_cached_ = false;
            return cached_;
        }
        const double u1 = uniform_pos();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 2.0 * std::numbers::pi * u2;
        cached_ = r * std::sin(theta);
        has_cached_ = true;
        return r * std::cos(theta);
    }

    // Number of successes in n fair coin flips, via 64-bit popcounts.
    double binomial_half(double n) {
        auto flips = static_cast<std::uint64_t>(n);
        std::uint64_t successes = 0;
        while (flips >= 64) {
            successes += static_cast<std::uint64_t>(std::popcount(next_u64()));
            flips -= 64;
        }
        if (flips > 0) {
            const std::uint64_t mask = (~0ULL) >> (64 - flips);
            successes += static_cast<std::uint64_t>(std::popcount(next_u64() & mask));
        }
        return static_cast<double>(successes);
    }

    bool coin() { return (next_u64() >> 63) != 0; }

  private:
    void seed_state(std::uint64_t seed) {
        SplitMix64 sm(seed);
        for (auto& word : s_) {
            word = sm.next();
        }
        if ((s_[0] | s_[1] | s_[2] | s_[3]) == 0) {
            s_[0] = 1;  // xoshiro state must not be all-zero
        }
        has_cached_ = false;
    }

    std::uint64_t s_[4] = {1, 2, 3, 4};
    double cached_ = 0.0;
    bool has_cached_ = false;
};

// Runs fn(i) for i in [0, n) over at most n_threads workers. Each index must
// be independent (typically: derive its own stream, write its own slot), so
// results cannot depend on the partitioning.
inline void parallel_for(std::size_t n, int n_threads,
                         const std::function<void(std::size_t)>& fn) {
    if (n == 0) {
        return;
    }
    if (n_threads <= 1 || n == 1) {
        for (std::size_t i = 0; i < n; ++i) {
            fn(i);
        }
        return;
    }
    const std::size_t workers =
        std::min<std::size_t>(static_cast<std::size_t>(n_threads), n);
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&, w]() {
            for (std::size_t i = w; i < n; i += workers) {
                fn(i);
            }
        });
    }
    for (auto& t : pool) {
        t.join();
    }
}

}  // namespace sqclock
