#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <vector>

namespace fairml {

// Dense row-major matrix, the working representation for encoded features.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

    double& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
    const double* row(std::size_t r) const { return data.data() + r * cols; }
    double* row(std::size_t r) { return data.data() + r * cols; }
};

inline double sigmoid(double z) {
    if (z >= 0.0) {
        return 1.0 / (1.0 + std::exp(-z));
    }
    double e = std::exp(z);
    return e / (1.0 + e);
}

// log(1 + exp(z)) without overflow.
inline double log1p_exp(double z) {
    if (z > 0.0) return z + std::log1p(std::exp(-z));
    return std::log1p(std::exp(z));
}

// splitmix64: counter-based generator used where draws must be addressable
// by row index (post-processing mixer) rather than sequential.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

// Uniform in [0, 1) from (seed, counter) without shared state.
inline double counter_uniform01(std::uint64_t seed, std::uint64_t counter) {
    std::uint64_t z = splitmix64(seed ^ splitmix64(counter + 1));
    return static_cast<double>(z >> 11) * 0x1.0p-53;
}

namespace detail {

// Error-free transforms. Node statistics in the tree learner are accumulated
// as unevaluated double-double sums of exact products, so that an integer
// weight k on a row and k physical copies of the row produce bit-identical
// sums, and so the per-feature reduction order cannot leak into results.
struct Dd {
    double hi = 0.0;
    double lo = 0.0;

    static Dd two_sum(double a, double b) {
        double s = a + b;
        double bb = s - a;
        double err = (a - (s - bb)) + (b - bb);
        return {s, err};
    }

    static Dd two_prod(double a, double b) {
        double p = a * b;
        double err = std::fma(a, b, -p);
        return {p, err};
    }

    void add(double x) {
        Dd t = two_sum(hi, x);
        lo += t.lo;
        hi = t.hi;
        renorm();
    }

    void add(const Dd& x) {
        Dd t = two_sum(hi, x.hi);
        lo += t.lo + x.lo;
        hi = t.hi;
        renorm();
    }

    void add_prod(double a, double b) { add(two_prod(a, b)); }

    Dd minus(const Dd& x) const {
        Dd r = *this;
        r.add(Dd{-x.hi, -x.lo});
        return r;
    }

    void renorm() {
        Dd t = two_sum(hi, lo);
        hi = t.hi;
        lo = t.lo;
    }

    double value() const { return hi + lo; }
};

} // namespace detail

} // namespace fairml
