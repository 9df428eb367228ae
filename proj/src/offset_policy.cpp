#include "depthjitter/offset_policy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace depthjitter::offset_policy {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

void require_finite_nonnegative(double v, const char* what) {
    if (!std::isfinite(v) || v < 0.0) {
        throw Error(ErrorCode::InvalidArgument, std::string(what) + " must be finite and >= 0");
    }
}

}  // namespace

double compute_variance(const DepthMap& depth) {
    const auto z = depth.data();
    if (z.empty()) throw Error(ErrorCode::EmptyInput, "depth map is empty");
    // Welford's running update.
    double mean = 0.0;
    double m2 = 0.0;
    std::size_t n = 0;
    for (double v : z) {
        if (!std::isfinite(v)) throw Error(ErrorCode::NonFinite, "depth map contains a non-finite value");
        ++n;
        const double delta = v - mean;
        mean += delta / static_cast<double>(n);
        m2 += delta * (v - mean);
    }
    return std::max(0.0, m2 / static_cast<double>(n));
}

double quantile_linear(std::span<const double> values, double q) {
    if (values.empty()) throw Error(ErrorCode::EmptyInput, "quantile of an empty list");
    if (!(q >= 0.0 && q <= 1.0)) throw Error(ErrorCode::InvalidArgument, "quantile must lie in [0,1]");
    for (double v : values) {
        if (!std::isfinite(v)) throw Error(ErrorCode::NonFinite, "quantile input contains a non-finite value");
    }
    std::vector<double> work(values.begin(), values.end());
    const double h = static_cast<double>(work.size() - 1) * q;
    const auto lo_index = static_cast<std::size_t>(std::floor(h));
    const double frac = h - static_cast<double>(lo_index);

    auto lo_it = work.begin() + static_cast<std::ptrdiff_t>(lo_index);
    std::nth_element(work.begin(), lo_it, work.end());
    const double lo = *lo_it;
    if (lo_index + 1 >= work.size()) return lo;
    const double hi = *std::min_element(lo_it + 1, work.end());
    return lo + frac * (hi - lo);
}

double compute_threshold(std::span<const double> variances) {
    if (variances.empty()) throw Error(ErrorCode::EmptyInput, "no variances to threshold");
    for (double v : variances) require_finite_nonnegative(v, "depth variance");
    return quantile_linear(variances, 0.25);
}

VarianceClass classify(double variance, double tau) {
    return variance >= tau ? VarianceClass::High : VarianceClass::Low;
}

const char* to_string(VarianceClass cls) {
    return cls == VarianceClass::High ? "high" : "low";
}

void OffsetPolicy::validate() const {
    auto finite = [](double v) { return std::isfinite(v); };
    if (!finite(alpha_scale) || alpha_scale < 0.0 || !finite(beta_scale) || beta_scale < 0.0) {
        throw Error(ErrorCode::InvalidArgument, "offset scale factors must be finite and >= 0");
    }
    if (!finite(range_lo) || !finite(range_hi) || range_lo > range_hi) {
        throw Error(ErrorCode::InvalidArgument, "fixed offset range must satisfy lo <= hi");
    }
    if (!finite(tau) || tau < 0.0) {
        throw Error(ErrorCode::InvalidArgument, "variance threshold must be finite and >= 0");
    }
}

std::uint64_t hash_id(const std::string& image_id) {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (unsigned char ch : image_id) {
        h ^= ch;
        h *= 0x100000001B3ULL;
    }
    return h;
}

StreamRng::StreamRng(const SeedSpec& seed)
    : key_(splitmix64(splitmix64(splitmix64(seed.global_seed) ^ hash_id(seed.image_id)) ^
                      seed.variant)) {}

std::uint64_t StreamRng::next_u64() { return splitmix64(key_ + 0x632BE59BD9B4E019ULL * counter_++); }

double StreamRng::next_unit() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double StreamRng::uniform(double lo, double hi) {
    const double v = lo + (hi - lo) * next_unit();
    return std::min(v, hi);
}

OffsetInterval offset_interval(const OffsetPolicy& policy, VarianceClass cls,
                               double depth_min, double depth_max) {
    policy.validate();
    if (policy.mode == PolicyMode::FixedRange) return {policy.range_lo, policy.range_hi};
    if (cls == VarianceClass::Low) return {0.0, 0.0};
    if (!std::isfinite(depth_min) || !std::isfinite(depth_max) || depth_min < 0.0 ||
        depth_min > depth_max) {
        throw Error(ErrorCode::InvalidArgument, "depth bounds must satisfy 0 <= min <= max");
    }
    const OffsetInterval interval{-policy.alpha_scale * depth_min, policy.beta_scale * depth_max};
    if (interval.lo > interval.hi) {
        throw Error(ErrorCode::InvalidArgument, "offset interval is inverted after scaling");
    }
    return interval;
}

double sample_offset(const OffsetPolicy& policy, VarianceClass cls, double depth_min,
                     double depth_max, const SeedSpec& seed) {
    const OffsetInterval interval = offset_interval(policy, cls, depth_min, depth_max);
    if (policy.mode == PolicyMode::Adaptive && cls == VarianceClass::Low) return 0.0;
    StreamRng rng(seed);
    return rng.uniform(interval.lo, interval.hi);
}

DepthBounds depth_bounds(const DepthMap& depth, bool robust) {
    const auto z = depth.data();
    if (z.empty()) throw Error(ErrorCode::EmptyInput, "depth map is empty");
    if (robust) return {quantile_linear(z, 0.01), quantile_linear(z, 0.99)};
    const auto [lo, hi] = std::minmax_element(z.begin(), z.end());
    return {*lo, *hi};
}

}  // namespace depthjitter::offset_policy
