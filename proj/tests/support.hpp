// Shared fixtures and independent reference implementations for the tests.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include <unistd.h>

#include "depthjitter/image.hpp"
#include "depthjitter/water_params.hpp"

namespace testsupport {

using depthjitter::DepthMap;
using depthjitter::ImageBuffer;
using depthjitter::Rgb;
using depthjitter::WaterParams;

inline ImageBuffer random_image(std::mt19937_64& rng, std::size_t w, std::size_t h, double lo = 0.0,
                                double hi = 1.0) {
    std::uniform_real_distribution<double> u(lo, hi);
    std::vector<double> v(w * h * 3);
    for (auto& x : v) x = u(rng);
    return ImageBuffer(w, h, std::move(v));
}

inline DepthMap random_depth(std::mt19937_64& rng, std::size_t w, std::size_t h, double lo, double hi) {
    std::uniform_real_distribution<double> u(lo, hi);
    std::vector<double> v(w * h);
    for (auto& x : v) x = u(rng);
    return DepthMap(w, h, std::move(v));
}

inline WaterParams random_params(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> b(0.05, 0.4);
    std::uniform_real_distribution<double> k(0.02, 0.3);
    return WaterParams({b(rng), b(rng), b(rng)}, {k(rng), k(rng), k(rng)}, {k(rng), k(rng), k(rng)});
}

inline double max_abs_diff(const ImageBuffer& a, const ImageBuffer& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.data().size(); ++i) m = std::max(m, std::abs(a.data()[i] - b.data()[i]));
    return m;
}

// ---------------------------------------------------------------------------
// Reference formulas, written straight from the image formation model.

inline double oracle_forward(double J, double z, double B, double beta, double gamma) {
    return J * std::exp(-beta * z) + B * (1.0 - std::exp(-gamma * z));
}

inline double oracle_restore(double I, double z, double B, double beta, double gamma) {
    return (I - B * (1.0 - std::exp(-gamma * z))) / std::exp(-beta * z);
}

/// Jitter as two explicit steps: restore at z, then render at the shifted depth.
inline double oracle_jitter(double I, double z, double dz, double floor, double B, double beta, double gamma) {
    const double zm = std::max(z + dz, floor);
    return oracle_forward(oracle_restore(I, z, B, beta, gamma), zm, B, beta, gamma);
}

inline double oracle_variance(const std::vector<double>& v) {
    long double mean = 0.0L;
    for (double x : v) mean += x;
    mean /= static_cast<long double>(v.size());
    long double ss = 0.0L;
    for (double x : v) ss += (x - mean) * (x - mean);
    return static_cast<double>(ss / static_cast<long double>(v.size()));
}

inline double oracle_quantile(std::vector<double> v, double q) {
    std::sort(v.begin(), v.end());
    const double h = static_cast<double>(v.size() - 1) * q;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

/// One-sample Kolmogorov-Smirnov statistic against U(lo, hi).
inline double ks_uniform(std::vector<double> v, double lo, double hi) {
    std::sort(v.begin(), v.end());
    const double n = static_cast<double>(v.size());
    double d = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        const double f = (v[i] - lo) / (hi - lo);
        d = std::max({d, f - static_cast<double>(i) / n, static_cast<double>(i + 1) / n - f});
    }
    return d;
}

/// Asymptotic 1% critical value of the KS statistic.
inline double ks_critical_1pct(std::size_t n) { return 1.628 / std::sqrt(static_cast<double>(n)); }

// ---------------------------------------------------------------------------

/// Fresh scratch directory removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        path_ = std::filesystem::temp_directory_path() /
                ("depthjitter_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter()++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    static int& counter() {
        static int c = 0;
        return c;
    }
    std::filesystem::path path_;
};

}  // namespace testsupport
