#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace fpl {

// mt19937_64 with hand-rolled mappings. std::* distributions are
// implementation-defined, so they are avoided anywhere reproducibility is
// part of the contract.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t next() { return gen_(); }

    // [0, 1)
    double uniform() {
        return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
    }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // [0, n)
    std::uint64_t bounded(std::uint64_t n) {
        // rejection sampling keeps the mapping exact
        const std::uint64_t limit = ~std::uint64_t{0} - ~std::uint64_t{0} % n;
        std::uint64_t v;
        do {
            v = gen_();
        } while (v >= limit);
        return v % n;
    }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::swap(v[i - 1], v[bounded(i)]);
        }
    }

private:
    std::mt19937_64 gen_;
};

}  // namespace fpl
