#include <cmath>
#include <string>

#include "depthjitter/error.hpp"
#include "depthjitter/image.hpp"
#include "depthjitter/water_params.hpp"

namespace depthjitter {

std::string_view to_string(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::InvalidArgument: return "invalid_argument";
        case ErrorCode::DimensionMismatch: return "dimension_mismatch";
        case ErrorCode::NonFinite: return "non_finite";
        case ErrorCode::Overflow: return "overflow";
        case ErrorCode::EmptyInput: return "empty_input";
        case ErrorCode::InsufficientBins: return "insufficient_bins";
        case ErrorCode::InsufficientPixels: return "insufficient_pixels";
        case ErrorCode::DegenerateDepth: return "degenerate_depth";
        case ErrorCode::DecodeError: return "decode_error";
        case ErrorCode::IoError: return "io_error";
        case ErrorCode::MissingRecord: return "missing_record";
    }
    return "unknown";
}

namespace {

void require_nonzero_size(std::size_t width, std::size_t height) {
    if (width == 0 || height == 0) {
        throw Error(ErrorCode::InvalidArgument, "image dimensions must be at least 1x1");
    }
}

}  // namespace

ImageBuffer::ImageBuffer(std::size_t width, std::size_t height, double fill)
    : width_(width), height_(height), data_(width * height * kChannels, fill) {
    require_nonzero_size(width, height);
}

ImageBuffer::ImageBuffer(std::size_t width, std::size_t height, std::vector<double> data)
    : width_(width), height_(height), data_(std::move(data)) {
    require_nonzero_size(width, height);
    if (data_.size() != width * height * kChannels) {
        throw Error(ErrorCode::DimensionMismatch,
                    "image data length " + std::to_string(data_.size()) + " does not match " +
                        std::to_string(width) + "x" + std::to_string(height) + "x3");
    }
}

DepthMap::DepthMap(std::size_t width, std::size_t height, double fill)
    : width_(width), height_(height), data_(width * height, fill) {
    require_nonzero_size(width, height);
}

DepthMap::DepthMap(std::size_t width, std::size_t height, std::vector<double> data)
    : width_(width), height_(height), data_(std::move(data)) {
    require_nonzero_size(width, height);
    if (data_.size() != width * height) {
        throw Error(ErrorCode::DimensionMismatch,
                    "depth data length " + std::to_string(data_.size()) + " does not match " +
                        std::to_string(width) + "x" + std::to_string(height));
    }
}

void require_same_size(const ImageBuffer& image, const DepthMap& depth) {
    if (image.width() != depth.width() || image.height() != depth.height()) {
        throw Error(ErrorCode::DimensionMismatch,
                    "image is " + std::to_string(image.width()) + "x" +
                        std::to_string(image.height()) + " but depth map is " +
                        std::to_string(depth.width()) + "x" + std::to_string(depth.height()));
    }
}

void validate_depth(const DepthMap& depth) {
    for (double z : depth.data()) {
        if (!std::isfinite(z)) {
            throw Error(ErrorCode::NonFinite, "depth map contains a non-finite value");
        }
        if (z < 0.0) {
            throw Error(ErrorCode::InvalidArgument, "depth map contains a negative depth");
        }
    }
}

WaterParams::WaterParams(const Rgb& veiling, const Rgb& attenuation, const Rgb& backscatter)
    : veiling_(veiling), attenuation_(attenuation), backscatter_(backscatter) {
    static constexpr const char* kNames[] = {"R", "G", "B"};
    for (std::size_t c = 0; c < 3; ++c) {
        const std::string ch = kNames[c];
        if (!std::isfinite(veiling_[c]) || veiling_[c] <= 0.0 || veiling_[c] >= 1.0) {
            throw Error(ErrorCode::InvalidArgument,
                        "veiling light " + ch + " must lie strictly inside (0,1)");
        }
        if (!std::isfinite(attenuation_[c]) || attenuation_[c] < kMinCoefficient) {
            throw Error(ErrorCode::InvalidArgument,
                        "attenuation " + ch + " must be finite and positive");
        }
        if (!std::isfinite(backscatter_[c]) || backscatter_[c] < kMinCoefficient) {
            throw Error(ErrorCode::InvalidArgument,
                        "backscatter " + ch + " must be finite and positive");
        }
    }
}

void ClampPolicy::validate() const {
    if (!std::isfinite(depth_floor) || depth_floor < 0.0) {
        throw Error(ErrorCode::InvalidArgument, "depth floor must be finite and >= 0");
    }
}

}  // namespace depthjitter
