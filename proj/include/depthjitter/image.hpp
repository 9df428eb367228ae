#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "depthjitter/error.hpp"

namespace depthjitter {

/**
 * Three channel (R,G,B) linear-light image, row-major, interleaved.
 *
 * Values are stored in double precision; the formation model amplifies
 * rounding error by e^(beta*z) on restore, which single precision storage
 * cannot absorb at the depths we care about.
 */
class ImageBuffer {
public:
    static constexpr std::size_t kChannels = 3;

    ImageBuffer() = default;
    ImageBuffer(std::size_t width, std::size_t height, double fill = 0.0);
    ImageBuffer(std::size_t width, std::size_t height, std::vector<double> data);

    std::size_t width() const noexcept { return width_; }
    std::size_t height() const noexcept { return height_; }
    std::size_t pixel_count() const noexcept { return width_ * height_; }
    bool empty() const noexcept { return data_.empty(); }

    double& at(std::size_t x, std::size_t y, std::size_t c) {
        return data_[(y * width_ + x) * kChannels + c];
    }
    double at(std::size_t x, std::size_t y, std::size_t c) const {
        return data_[(y * width_ + x) * kChannels + c];
    }

    std::span<double> data() noexcept { return data_; }
    std::span<const double> data() const noexcept { return data_; }

    bool operator==(const ImageBuffer&) const = default;

private:
    std::size_t width_ = 0;
    std::size_t height_ = 0;
    std::vector<double> data_;
};

/// Per-pixel scene depth in meters, row-major, single channel.
class DepthMap {
public:
    DepthMap() = default;
    DepthMap(std::size_t width, std::size_t height, double fill = 0.0);
    DepthMap(std::size_t width, std::size_t height, std::vector<double> data);

    std::size_t width() const noexcept { return width_; }
    std::size_t height() const noexcept { return height_; }
    std::size_t pixel_count() const noexcept { return width_ * height_; }
    bool empty() const noexcept { return data_.empty(); }

    double& at(std::size_t x, std::size_t y) { return data_[y * width_ + x]; }
    double at(std::size_t x, std::size_t y) const { return data_[y * width_ + x]; }

    std::span<double> data() noexcept { return data_; }
    std::span<const double> data() const noexcept { return data_; }

    bool operator==(const DepthMap&) const = default;

private:
    std::size_t width_ = 0;
    std::size_t height_ = 0;
    std::vector<double> data_;
};

/// Throws DimensionMismatch unless the image and depth map share a size.
void require_same_size(const ImageBuffer& image, const DepthMap& depth);

/// Throws NonFinite if any depth value is NaN/inf, InvalidArgument if negative.
void validate_depth(const DepthMap& depth);

}  // namespace depthjitter
