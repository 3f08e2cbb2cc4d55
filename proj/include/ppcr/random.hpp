#pragma once

#include <cstdint>
#include <random>

namespace ppcr {

/// SplitMix64 finalizer; used to derive independent per-replication seeds.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// One random stream. Replication r of a run seeded with `master` always
/// uses RandomStream::derive(master, r), whichever thread executes it.
class RandomStream {
public:
    explicit RandomStream(std::uint64_t seed) : engine_(splitmix64(seed)) {}

    static RandomStream derive(std::uint64_t master, std::uint64_t index) {
        return RandomStream(splitmix64(master) ^ splitmix64(index + 0x632be59bd9b4e019ULL));
    }

    double normal() { return normal_(engine_); }

    /// Uniform on the open interval (0, 1).
    double uniform_open() {
        double u = 0.0;
        do {
            u = std::generate_canonical<double, 53>(engine_);
        } while (u <= 0.0 || u >= 1.0);
        return u;
    }

    /// Uniform on [low, high).
    double uniform(double low, double high) {
        return low + (high - low) * std::generate_canonical<double, 53>(engine_);
    }

    std::mt19937_64& engine() { return engine_; }

private:
    std::mt19937_64 engine_;
    std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace ppcr
