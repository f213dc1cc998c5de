#pragma once

#include <cstdint>

namespace sosgap {

/// Counter-based generator: the i-th output of stream s under key k is a pure
/// function of (k, s, i), so split streams are reproducible regardless of the
/// order in which they are consumed.
class CounterRng {
public:
    explicit CounterRng(std::uint64_t key, std::uint64_t stream = 0) :
        _key(key), _stream(mix(stream + 0x9e3779b97f4a7c15ULL))
    {
    }

    auto next() -> std::uint64_t
    {
        return mix(_key ^ mix(_stream + 0xbf58476d1ce4e5b9ULL * ++_counter));
    }

    /// Uniform integer in [0, bound); bound must be positive.
    auto below(std::uint64_t bound) -> std::uint64_t
    {
        // Lemire's multiply-shift with rejection of the biased low range.
        auto x = next();
        auto m = static_cast<unsigned __int128>(x) * bound;
        auto low = static_cast<std::uint64_t>(m);
        if (low < bound) {
            auto threshold = -bound % bound;
            while (low < threshold) {
                x = next();
                m = static_cast<unsigned __int128>(x) * bound;
                low = static_cast<std::uint64_t>(m);
            }
        }
        return static_cast<std::uint64_t>(m >> 64);
    }

    auto uniform01() -> double
    {
        return static_cast<double>(next() >> 11) * 0x1.0p-53;
    }

    auto split(std::uint64_t child) const -> CounterRng
    {
        return CounterRng{mix(_key ^ (_stream + child)), child};
    }

    auto counter() const -> std::uint64_t { return _counter; }

private:
    static constexpr auto mix(std::uint64_t z) -> std::uint64_t
    {
        // splitmix64 finaliser
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    std::uint64_t _key;
    std::uint64_t _stream;
    std::uint64_t _counter = 0;
};

} // namespace sosgap
