#pragma once

#include <cstddef>
#include <vector>

#include "depthjitter/image.hpp"
#include "depthjitter/water_params.hpp"

namespace depthjitter::uifm {

/// I = J e^(-beta z) + B (1 - e^(-gamma z)), per pixel and channel.
ImageBuffer forward_render(const ImageBuffer& radiance, const DepthMap& depth,
                           const WaterParams& params, const ClampPolicy& clamp = {});

/// J = (I - B (1 - e^(-gamma z))) e^(beta z). Throws NonFinite when e^(beta z) overflows.
ImageBuffer restore(const ImageBuffer& observed, const DepthMap& depth,
                    const WaterParams& params, const ClampPolicy& clamp = {});

struct JitterResult {
    ImageBuffer image;
    DepthMap depth;
    std::size_t floored_pixels = 0;  ///< pixels whose shifted depth hit the depth floor
    std::size_t clamped_pixels = 0;  ///< pixels with at least one channel clamped to [0,1]
    std::size_t clipped_pixels = 0;  ///< pixels affected by either of the above
};

/**
 * Re-renders an observed image as if every pixel sat `offset` meters further
 * away (closer for negative offsets).
 *
 * The shifted depth is z_m = max(z + offset, clamp.depth_floor) and each value
 * becomes (I - B(1 - e^(-gamma z))) e^(-beta (z_m - z)) + B(1 - e^(-gamma z_m)).
 * Returns the modified image together with the modified depth map.
 */
JitterResult depth_jitter(const ImageBuffer& observed, const DepthMap& depth,
                          const WaterParams& params, double offset,
                          const ClampPolicy& clamp = {});

struct ProfileRow {
    double depth;
    Rgb intensity;
};

/// Evaluates the forward model for a single radiance at `samples` evenly spaced depths.
std::vector<ProfileRow> intensity_profile(const WaterParams& params, const Rgb& radiance,
                                          double depth_lo, double depth_hi,
                                          std::size_t samples);

}  // namespace depthjitter::uifm
