#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "treerel/types.hpp"

namespace treerel {

// mt19937_64 with hand-rolled uniform mapping so draws do not depend on the
// standard library's distribution implementation.
class Rng {
  public:
    explicit Rng(uint64_t seed) : engine_(seed) {}

    uint64_t next_u64() { return engine_(); }

    // uniform in [0, 1) with 53 random bits
    double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    // uniform integer in [0, n)
    uint64_t below(uint64_t n) { return next_u64() % n; }

    void fill_uniform(Matrix& m, double lo, double hi) {
        for (Index i = 0; i < m.rows(); ++i)
            for (Index j = 0; j < m.cols(); ++j) m(i, j) = uniform(lo, hi);
    }

    void fill_uniform(Vector& v, double lo, double hi) {
        for (Index i = 0; i < v.size(); ++i) v(i) = uniform(lo, hi);
    }

    // Fisher-Yates
    template <typename T>
    void shuffle(std::vector<T>& xs) {
        for (size_t i = xs.size(); i > 1; --i) std::swap(xs[i - 1], xs[below(i)]);
    }

  private:
    std::mt19937_64 engine_;
};

}  // namespace treerel
