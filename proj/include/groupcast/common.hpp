#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace groupcast {

// Sentinel for unobserved values. Serialized as null in all file formats.
inline constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();

inline bool is_missing(double v) { return std::isnan(v); }

// Thrown for invalid inputs and contract violations; maps to exit code 1
// at the CLI boundary unless it is a ConfigError.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& what) : Error(what) {}
};

// Row-major dense matrix of doubles. Missing entries hold kMissing.
class Matrix {
public:
    Matrix() = default;
    Matrix(int rows, int cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(static_cast<size_t>(rows) * cols, fill) {}

    int rows() const { return rows_; }
    int cols() const { return cols_; }
    bool empty() const { return data_.empty(); }

    double& at(int r, int c) { return data_[static_cast<size_t>(r) * cols_ + c]; }
    double at(int r, int c) const { return data_[static_cast<size_t>(r) * cols_ + c]; }

    double* row_ptr(int r) { return data_.data() + static_cast<size_t>(r) * cols_; }
    const double* row_ptr(int r) const { return data_.data() + static_cast<size_t>(r) * cols_; }

    std::vector<double> col(int c) const {
        std::vector<double> out(rows_);
        for (int r = 0; r < rows_; ++r) out[static_cast<size_t>(r)] = at(r, c);
        return out;
    }

    std::vector<double>& data() { return data_; }
    const std::vector<double>& data() const { return data_; }

private:
    int rows_ = 0;
    int cols_ = 0;
    std::vector<double> data_;
};

// Deterministic RNG. mt19937_64 has a fully specified sequence, and the
// distributions below are implemented here rather than with std::*_distribution
// (whose output is implementation-defined), so a seed pins the byte-exact
// stream on every platform.
class Rng {
public:
    explicit Rng(uint64_t seed) : state_(seed) {}

    uint64_t next_u64() { return state_(); }

    // Uniform in [0, 1) with 53 random bits.
    double uniform() {
        return static_cast<double>(state_() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Inclusive bounds.
    int64_t uniform_int(int64_t lo, int64_t hi) {
        const uint64_t span = static_cast<uint64_t>(hi - lo) + 1;
        // Rejection sampling keeps the draw unbiased.
        const uint64_t limit = std::numeric_limits<uint64_t>::max() - std::numeric_limits<uint64_t>::max() % span;
        uint64_t x = state_();
        while (x >= limit) x = state_();
        return lo + static_cast<int64_t>(x % span);
    }

    double normal(double mu = 0.0, double sigma = 1.0) {
        if (has_spare_) {
            has_spare_ = false;
            return mu + sigma * spare_;
        }
        // Box-Muller; 1-u avoids log(0).
        const double u = 1.0 - uniform();
        const double r = std::sqrt(-2.0 * std::log(u));
        const double theta = 2.0 * M_PI * uniform();
        spare_ = r * std::sin(theta);
        has_spare_ = true;
        return mu + sigma * r * std::cos(theta);
    }

    bool bernoulli(double p) { return uniform() < p; }

    // Index draw from unnormalized weights.
    int categorical(const std::vector<double>& weights) {
        double total = 0.0;
        for (double w : weights) total += w;
        double r = uniform() * total;
        for (size_t i = 0; i < weights.size(); ++i) {
            r -= weights[i];
            if (r < 0.0) return static_cast<int>(i);
        }
        return static_cast<int>(weights.size()) - 1;
    }

    // Derive an independent stream; splitmix64 decorrelates related keys.
    static uint64_t mix(uint64_t a, uint64_t b) {
        uint64_t z = a + 0x9e3779b97f4a7c15ULL * (b + 1);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

private:
    std::mt19937_64 state_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace groupcast
