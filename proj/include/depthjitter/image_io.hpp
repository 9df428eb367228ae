#pragma once

#include <cstddef>
#include <filesystem>

#include "depthjitter/image.hpp"

namespace depthjitter::io {

/// How stored RGB values map to the linear light the model works in.
enum class ColorSpace { Srgb, Linear };

double srgb_to_linear(double encoded);
double linear_to_srgb(double linear);

/// Reads an 8- or 16-bit RGB PNG. Alpha, grayscale and palette files are rejected.
ImageBuffer read_png_rgb(const std::filesystem::path& path, ColorSpace space);

/// Writes an RGB PNG with 8 or 16 bits per channel. Values are clamped to [0,1]
/// before quantization. The encoder carries no timestamps, so output bytes are
/// a function of the pixels alone.
void write_png_rgb(const std::filesystem::path& path, const ImageBuffer& image,
                   ColorSpace space, int bit_depth = 8);

enum class DepthFormat { Png16, TiffF32 };

struct DepthDecodeSpec {
    DepthFormat format = DepthFormat::Png16;
    double scale = 0.001;  ///< meters per stored unit
    double offset = 0.0;   ///< meters added after scaling

    void validate() const;
};

/// depth = raw * scale + offset. Throws DecodeError on format mismatch, NaN or negative depth.
DepthMap decode_depth(const std::filesystem::path& path, const DepthDecodeSpec& spec);

/// Inverse of the png16 decode. Returns the number of pixels saturated at 0 or 65535.
std::size_t write_depth_png16(const std::filesystem::path& path, const DepthMap& depth,
                              double scale, double offset = 0.0);

/// Single-channel IEEE float32 TIFF of raw values (depth / scale - offset is not applied).
void write_tiff_f32(const std::filesystem::path& path, std::size_t width, std::size_t height,
                    const float* values);

}  // namespace depthjitter::io
