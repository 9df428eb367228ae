#include "depthjitter/uifm.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace depthjitter::uifm {

namespace {

constexpr std::size_t kC = ImageBuffer::kChannels;

// Slack for rounding noise before a value counts as out of gamut.
constexpr double kGamutSlack = 1e-12;

void check_inputs(const ImageBuffer& image, const DepthMap& depth, const ClampPolicy& clamp) {
    clamp.validate();
    require_same_size(image, depth);
    for (double v : image.data()) {
        if (!std::isfinite(v)) throw Error(ErrorCode::NonFinite, "image contains a non-finite value");
    }
    validate_depth(depth);
}

[[noreturn]] void throw_overflow(std::size_t pixel, std::size_t width, double value) {
    throw Error(ErrorCode::Overflow, "value " + std::to_string(value) + " at pixel (" +
                                         std::to_string(pixel % width) + "," +
                                         std::to_string(pixel / width) + ") leaves [0,1]");
}

[[noreturn]] void throw_non_finite(std::size_t pixel, std::size_t width) {
    throw Error(ErrorCode::NonFinite,
                "non-finite result at pixel (" + std::to_string(pixel % width) + "," +
                    std::to_string(pixel / width) + "); depth too large for these parameters");
}

/// Applies the clamp policy to one pixel in place. Returns true if any channel was clamped.
bool apply_clamp(double* px, ClampMode mode, std::size_t pixel, std::size_t width) {
    bool clamped = false;
    for (std::size_t c = 0; c < kC; ++c) {
        double& v = px[c];
        if (!std::isfinite(v)) throw_non_finite(pixel, width);
        if (v >= 0.0 && v <= 1.0) continue;
        switch (mode) {
            case ClampMode::None:
                break;
            case ClampMode::ClampToUnit:
                v = std::clamp(v, 0.0, 1.0);
                clamped = true;
                break;
            case ClampMode::ErrorOnOverflow:
                if (v < -kGamutSlack || v > 1.0 + kGamutSlack) throw_overflow(pixel, width, v);
                v = std::clamp(v, 0.0, 1.0);
                break;
        }
    }
    return clamped;
}

}  // namespace

ImageBuffer forward_render(const ImageBuffer& radiance, const DepthMap& depth,
                           const WaterParams& params, const ClampPolicy& clamp) {
    check_inputs(radiance, depth, clamp);
    const auto& B = params.veiling();
    const auto& beta = params.attenuation();
    const auto& gamma = params.backscatter();

    ImageBuffer out(radiance.width(), radiance.height());
    const auto in = radiance.data();
    auto dst = out.data();
    const auto z = depth.data();
    for (std::size_t p = 0; p < z.size(); ++p) {
        for (std::size_t c = 0; c < kC; ++c) {
            const std::size_t i = p * kC + c;
            dst[i] = in[i] * std::exp(-beta[c] * z[p]) + B[c] * (1.0 - std::exp(-gamma[c] * z[p]));
        }
        apply_clamp(&dst[p * kC], clamp.mode, p, radiance.width());
    }
    return out;
}

ImageBuffer restore(const ImageBuffer& observed, const DepthMap& depth,
                    const WaterParams& params, const ClampPolicy& clamp) {
    check_inputs(observed, depth, clamp);
    const auto& B = params.veiling();
    const auto& beta = params.attenuation();
    const auto& gamma = params.backscatter();

    ImageBuffer out(observed.width(), observed.height());
    const auto in = observed.data();
    auto dst = out.data();
    const auto z = depth.data();
    for (std::size_t p = 0; p < z.size(); ++p) {
        for (std::size_t c = 0; c < kC; ++c) {
            const std::size_t i = p * kC + c;
            dst[i] = (in[i] - B[c] * (1.0 - std::exp(-gamma[c] * z[p]))) * std::exp(beta[c] * z[p]);
        }
        apply_clamp(&dst[p * kC], clamp.mode, p, observed.width());
    }
    return out;
}

JitterResult depth_jitter(const ImageBuffer& observed, const DepthMap& depth,
                          const WaterParams& params, double offset, const ClampPolicy& clamp) {
    check_inputs(observed, depth, clamp);
    if (!std::isfinite(offset)) {
        throw Error(ErrorCode::InvalidArgument, "depth offset must be finite");
    }
    const auto& B = params.veiling();
    const auto& beta = params.attenuation();
    const auto& gamma = params.backscatter();

    // Unfloored pixels share z_m - z_p = offset, so the attenuation factor and the
    // backscatter shift e^(-gamma*offset) are per-channel constants.
    Rgb shared_attenuation{};
    Rgb shared_shift{};
    for (std::size_t c = 0; c < kC; ++c) {
        shared_attenuation[c] = std::exp(-beta[c] * offset);
        shared_shift[c] = std::exp(-gamma[c] * offset);
    }

    JitterResult result{ImageBuffer(observed.width(), observed.height()),
                        DepthMap(depth.width(), depth.height())};
    const auto in = observed.data();
    const auto z = depth.data();
    auto dst = result.image.data();
    auto z_out = result.depth.data();
    const std::size_t width = observed.width();

    for (std::size_t p = 0; p < z.size(); ++p) {
        const double zp = z[p];
        double zm = zp + offset;
        const bool floored = zm < clamp.depth_floor;
        if (floored) zm = clamp.depth_floor;
        z_out[p] = zm;

        for (std::size_t c = 0; c < kC; ++c) {
            const std::size_t i = p * kC + c;
            const double backscatter_orig = std::exp(-gamma[c] * zp);
            double attenuation;
            double backscatter_mod;
            if (floored) {
                attenuation = std::exp(-beta[c] * (zm - zp));
                backscatter_mod = std::exp(-gamma[c] * zm);
            } else {
                attenuation = shared_attenuation[c];
                backscatter_mod = backscatter_orig * shared_shift[c];
            }
            dst[i] = (in[i] - B[c] * (1.0 - backscatter_orig)) * attenuation +
                     B[c] * (1.0 - backscatter_mod);
        }
        const bool clamped = apply_clamp(&dst[p * kC], clamp.mode, p, width);
        result.floored_pixels += floored;
        result.clamped_pixels += clamped;
        result.clipped_pixels += (floored || clamped);
    }
    return result;
}

std::vector<ProfileRow> intensity_profile(const WaterParams& params, const Rgb& radiance,
                                          double depth_lo, double depth_hi,
                                          std::size_t samples) {
    if (!std::isfinite(depth_lo) || !std::isfinite(depth_hi) || depth_lo > depth_hi ||
        depth_lo < 0.0) {
        throw Error(ErrorCode::InvalidArgument, "depth range must satisfy 0 <= lo <= hi");
    }
    if (samples < 2) {
        throw Error(ErrorCode::InvalidArgument, "profile needs at least 2 samples");
    }
    const auto& B = params.veiling();
    const auto& beta = params.attenuation();
    const auto& gamma = params.backscatter();

    std::vector<ProfileRow> rows;
    rows.reserve(samples);
    const double step = (depth_hi - depth_lo) / static_cast<double>(samples - 1);
    for (std::size_t k = 0; k < samples; ++k) {
        const double z = (k + 1 == samples) ? depth_hi : depth_lo + step * static_cast<double>(k);
        ProfileRow row{z, {}};
        for (std::size_t c = 0; c < kC; ++c) {
            row.intensity[c] =
                radiance[c] * std::exp(-beta[c] * z) + B[c] * (1.0 - std::exp(-gamma[c] * z));
        }
        rows.push_back(row);
    }
    return rows;
}

}  // namespace depthjitter::uifm
