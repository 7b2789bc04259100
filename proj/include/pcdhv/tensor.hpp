#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace pcdhv {

#ifdef PCDHV_REAL_FLOAT
using Real = float;
#else
using Real = double;
#endif

struct ShapeError : std::runtime_error {
    explicit ShapeError(const std::string& msg) : std::runtime_error(msg) {}
};

struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

struct NumericError : std::runtime_error {
    explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

// Dense row-major tensor, layout H x W x C (batch leading when rank 4).
struct Tensor {
    std::vector<int> dims;
    std::vector<Real> data;

    Tensor() = default;
    explicit Tensor(std::vector<int> d) : dims(std::move(d)) {
        data.assign(static_cast<size_t>(count(dims)), Real(0));
    }
    Tensor(std::vector<int> d, std::vector<Real> v) : dims(std::move(d)), data(std::move(v)) {
        if (static_cast<long long>(data.size()) != count(dims))
            throw ShapeError("tensor data length does not match dims");
    }

    static long long count(const std::vector<int>& d) {
        long long n = 1;
        for (int e : d) {
            if (e < 1) throw ShapeError("tensor extent < 1");
            n *= e;
        }
        return n;
    }

    static Tensor zeros(std::vector<int> d) { return Tensor(std::move(d)); }
    static Tensor full(std::vector<int> d, Real v) {
        Tensor t(std::move(d));
        std::fill(t.data.begin(), t.data.end(), v);
        return t;
    }

    int rank() const { return static_cast<int>(dims.size()); }
    long long size() const { return static_cast<long long>(data.size()); }

    int h() const { return dims.at(0); }
    int w() const { return dims.at(1); }
    int c() const { return dims.size() > 2 ? dims.at(2) : 1; }

    Real& at(int y, int x, int ch) { return data[(static_cast<size_t>(y) * dims[1] + x) * dims[2] + ch]; }
    Real at(int y, int x, int ch) const { return data[(static_cast<size_t>(y) * dims[1] + x) * dims[2] + ch]; }

    Real& at(int i, int j) { return data[static_cast<size_t>(i) * dims[1] + j]; }
    Real at(int i, int j) const { return data[static_cast<size_t>(i) * dims[1] + j]; }

    bool same_dims(const Tensor& o) const { return dims == o.dims; }
};

inline Tensor random_uniform(std::vector<int> dims, std::mt19937_64& rng, Real lo = Real(-1), Real hi = Real(1)) {
    Tensor t(std::move(dims));
    // plain 53-bit uniform; avoids distribution objects so streams stay portable
    for (auto& v : t.data) {
        double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
        v = lo + static_cast<Real>(u) * (hi - lo);
    }
    return t;
}

inline Tensor random_gaussian(std::vector<int> dims, std::mt19937_64& rng, Real stddev) {
    Tensor t(std::move(dims));
    // Box-Muller on explicit uniforms, deterministic across library versions
    size_t i = 0;
    while (i < t.data.size()) {
        double u1 = (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
        double u2 = static_cast<double>(rng() >> 11) * 0x1.0p-53;
        double r = std::sqrt(-2.0 * std::log(u1));
        t.data[i++] = static_cast<Real>(r * std::cos(6.283185307179586 * u2) * stddev);
        if (i < t.data.size()) t.data[i++] = static_cast<Real>(r * std::sin(6.283185307179586 * u2) * stddev);
    }
    return t;
}

}  // namespace pcdhv
