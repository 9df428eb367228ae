#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "depthjitter/image.hpp"

namespace depthjitter::offset_policy {

/// Population variance (divide by N) of all depth values, in m^2.
double compute_variance(const DepthMap& depth);

/**
 * Quantile with linear interpolation between closest ranks: for sorted values
 * x[0..n-1] and h = (n-1)q, returns x[floor h] + (h - floor h)(x[floor h + 1] - x[floor h]).
 */
double quantile_linear(std::span<const double> values, double q);

/// First quartile of the per-image variance distribution; throws EmptyInput on an empty list.
double compute_threshold(std::span<const double> variances);

enum class VarianceClass { High, Low };

/// High iff variance >= tau.
VarianceClass classify(double variance, double tau);

const char* to_string(VarianceClass cls);

enum class PolicyMode { Adaptive, FixedRange };

struct OffsetPolicy {
    PolicyMode mode = PolicyMode::Adaptive;
    double alpha_scale = 0.5;  ///< shallow-side scale on the image's minimum depth
    double beta_scale = 0.2;   ///< deep-side scale on the image's maximum depth
    double range_lo = -4.0;    ///< meters, fixed-range mode
    double range_hi = 15.0;    ///< meters, fixed-range mode
    double tau = 0.0;          ///< m^2, adaptive variance threshold

    void validate() const;
};

/// Identifies one random stream: (global seed, image id, variant index).
struct SeedSpec {
    std::uint64_t global_seed = 0;
    std::string image_id;
    std::uint64_t variant = 0;
};

/// Counter-based generator keyed only by a SeedSpec, so draws never depend on
/// processing order or worker count.
class StreamRng {
public:
    explicit StreamRng(const SeedSpec& seed);

    std::uint64_t next_u64();
    /// Uniform in [0,1) with 53 bits of resolution.
    double next_unit();
    /// Uniform in [lo,hi]; returns lo when lo == hi.
    double uniform(double lo, double hi);

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

/// FNV-1a over the bytes of the id.
std::uint64_t hash_id(const std::string& image_id);

/// Interval the offset is drawn from for a given classification and depth bounds.
struct OffsetInterval {
    double lo = 0.0;
    double hi = 0.0;
};

OffsetInterval offset_interval(const OffsetPolicy& policy, VarianceClass cls,
                               double depth_min, double depth_max);

/// Draws the depth offset in meters. Adaptive low-variance images get exactly 0.
double sample_offset(const OffsetPolicy& policy, VarianceClass cls, double depth_min,
                     double depth_max, const SeedSpec& seed);

struct DepthBounds {
    double min = 0.0;
    double max = 0.0;
};

/// Exact min/max, or the 1st/99th percentiles when `robust` is set.
DepthBounds depth_bounds(const DepthMap& depth, bool robust = false);

}  // namespace depthjitter::offset_policy
