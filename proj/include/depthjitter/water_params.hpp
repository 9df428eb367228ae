#pragma once

#include <array>

namespace depthjitter {

using Rgb = std::array<double, 3>;

/// Per-channel water parameters of the formation model.
///
/// `veiling` is the background light B_c, `attenuation` the direct-signal
/// decay rate beta_c (1/m), `backscatter` the veiling saturation rate gamma_c (1/m).
class WaterParams {
public:
    static constexpr double kMinCoefficient = 1e-9;

    /// Validates on construction; throws Error(InvalidArgument) on violation.
    WaterParams(const Rgb& veiling, const Rgb& attenuation, const Rgb& backscatter);

    const Rgb& veiling() const noexcept { return veiling_; }
    const Rgb& attenuation() const noexcept { return attenuation_; }
    const Rgb& backscatter() const noexcept { return backscatter_; }

    bool operator==(const WaterParams&) const = default;

private:
    Rgb veiling_;
    Rgb attenuation_;
    Rgb backscatter_;
};

enum class ClampMode {
    ClampToUnit,      ///< clamp every output value into [0,1]
    ErrorOnOverflow,  ///< throw Error(Overflow) when a value leaves [0,1]
    None,             ///< pass values through untouched (analysis and tests)
};

struct ClampPolicy {
    static constexpr double kDefaultDepthFloor = 0.01;

    ClampMode mode = ClampMode::ClampToUnit;
    double depth_floor = kDefaultDepthFloor;  ///< meters, minimum modified depth

    void validate() const;

    static ClampPolicy unclamped(double depth_floor = 0.0) {
        return {ClampMode::None, depth_floor};
    }
};

}  // namespace depthjitter
