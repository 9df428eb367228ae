#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "depthjitter/image.hpp"
#include "depthjitter/water_params.hpp"

namespace depthjitter::estimation {

struct EstimationConfig {
    std::size_t n_bins = 10;
    double dark_fraction = 0.02;
    double log_floor = 1e-4;
    int max_iterations = 200;
    double step_tolerance = 1e-8;
    /// Bins with fewer pixels are skipped; 0 selects max(10, ceil(1/dark_fraction)).
    std::size_t min_bin_pixels = 0;
    /// Minimum max(z) - min(z) in meters; 0 leaves the check to the binning stage.
    double min_depth_spread = 0.0;
    /// Upper bound on pixels used for the final model residual.
    std::size_t residual_samples = 65536;

    void validate() const;
};

struct DepthBin {
    double lo = 0.0;
    double hi = 0.0;
    std::size_t pixel_count = 0;
    bool used = false;
    Rgb dark_value{};         ///< mean of the darkest pixels, per channel
    Rgb dark_depth{};         ///< mean depth of those same pixels, per channel
    Rgb mean_log_residual{};  ///< mean ln(I - backscatter); filled in by estimate_params

    double center() const { return 0.5 * (lo + hi); }
};

struct DepthBinStats {
    std::vector<double> edges;  ///< n_bins + 1 strictly increasing edges
    std::vector<DepthBin> bins;

    std::size_t used_bins() const;
};

/// Equal-width depth bins over [min z, max z] with the mean of the darkest
/// `dark_fraction` of each bin's pixels per channel. Throws InsufficientBins
/// when fewer than 4 bins have enough pixels.
DepthBinStats bin_dark_pixels(const ImageBuffer& observed, const DepthMap& depth,
                              std::size_t n_bins, double dark_fraction,
                              std::size_t min_bin_pixels = 0);

struct BackscatterFit {
    Rgb veiling{};
    Rgb backscatter{};
    Rgb residual{};  ///< RMS of the per-bin fit, per channel
    std::array<int, 3> iterations{};
    std::array<bool, 3> converged{};
    /// False when the curve is saturated over the data and gamma is only weakly constrained.
    std::array<bool, 3> backscatter_identified{};
};

/**
 * Fits b(z) = B (1 - e^(-gamma z)) per channel to the dark-pixel curve with a
 * damped Gauss-Newton (Levenberg-Marquardt) solve on (logit B, log gamma), so
 * B stays in (0,1) and gamma stays positive without clipping.
 *
 * Default start: B from the farthest used bin, gamma = 0.1/m.
 */
BackscatterFit fit_backscatter(const DepthBinStats& stats,
                               const std::optional<WaterParams>& init = std::nullopt,
                               const EstimationConfig& cfg = {});

struct AttenuationFit {
    Rgb attenuation{};
    Rgb residual{};  ///< RMS of the log-linear regression, per channel
    std::array<std::size_t, 3> valid_pixels{};
    std::array<bool, 3> slope_positive{};  ///< false when beta had to be floored
};

/// Smallest attenuation reported when the regression slope is not negative.
inline constexpr double kMinFittedAttenuation = 1e-6;

/// Regresses ln(I - B(1 - e^(-gamma z))) on z over pixels where the
/// backscatter-subtracted signal exceeds the log floor; beta is minus the slope.
AttenuationFit fit_attenuation(const ImageBuffer& observed, const DepthMap& depth,
                               const Rgb& veiling, const Rgb& backscatter,
                               const EstimationConfig& cfg = {});

struct FitReport {
    WaterParams params;
    double backscatter_residual = 0.0;
    double attenuation_residual = 0.0;
    /// RMS of I - render(clamp01(restore(I))) over a pixel subsample: the part of
    /// the observation no radiance in [0,1] explains under the fitted parameters.
    double final_residual = 0.0;
    int iterations = 0;
    bool converged = false;
    BackscatterFit backscatter{};
    AttenuationFit attenuation{};
    DepthBinStats bins{};
    std::vector<std::string> warnings{};
};

/// Runs binning, backscatter fit and attenuation fit; stage errors propagate.
FitReport estimate_params(const ImageBuffer& observed, const DepthMap& depth,
                          const EstimationConfig& cfg = {});

/// Number of estimation-stage entry points invoked in this process.
std::uint64_t estimation_call_count();

// ---------------------------------------------------------------------------
// Synthetic scenes

struct DepthFieldSpec {
    enum class Kind { RowRamp, Constant, Terrain };
    Kind kind = Kind::RowRamp;
    double near = 1.0;  ///< meters
    double far = 12.0;  ///< meters
};

struct RadianceSpec {
    enum class Kind { Constant, UniformRandom, Source };
    Kind kind = Kind::UniformRandom;
    Rgb value{1.0, 1.0, 1.0};  ///< Constant
    double lo = 0.1;           ///< UniformRandom
    double hi = 0.9;           ///< UniformRandom
    double black_fraction = 0.04;  ///< UniformRandom: probability of a J = 0 (shadow) pixel
    std::optional<ImageBuffer> source;  ///< Source
};

struct SyntheticSpec {
    std::size_t width = 128;
    std::size_t height = 128;
    DepthFieldSpec depth;
    RadianceSpec radiance;
    enum class Noise { Additive, Relative };
    /// Gaussian noise on the observation: sigma in intensity units (Additive) or
    /// as a fraction of each value (Relative). Results are clamped to [0,1].
    double noise_sigma = 0.0;
    Noise noise = Noise::Additive;
    std::uint64_t seed = 0;
};

struct SyntheticScene {
    ImageBuffer observed;
    DepthMap depth;
    ImageBuffer radiance;
};

/// Deterministic (observed, depth) pair built with forward_render.
SyntheticScene generate_synthetic(const WaterParams& params, const SyntheticSpec& spec);

}  // namespace depthjitter::estimation
