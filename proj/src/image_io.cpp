#include "depthjitter/image_io.hpp"

#include <png.h>
#include <tiffio.h>

#include <algorithm>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

namespace depthjitter::io {

namespace fs = std::filesystem;

double srgb_to_linear(double encoded) {
    return encoded <= 0.04045 ? encoded / 12.92 : std::pow((encoded + 0.055) / 1.055, 2.4);
}

double linear_to_srgb(double linear) {
    return linear <= 0.0031308 ? linear * 12.92 : 1.055 * std::pow(linear, 1.0 / 2.4) - 0.055;
}

namespace {

struct FileCloser {
    void operator()(std::FILE* f) const { std::fclose(f); }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr open_file(const fs::path& path, const char* mode) {
    FilePtr f(std::fopen(path.c_str(), mode));
    if (!f) {
        throw Error(ErrorCode::IoError, "cannot open " + path.string() + ": " + std::strerror(errno));
    }
    return f;
}

// ---------------------------------------------------------------------------
// PNG. libpng reports errors by longjmp; every object that outlives a jump is
// heap allocated before setjmp and only touched through a pointer afterwards.

struct PngErrorSink {
    char message[256] = {};
};

void png_error_fn(png_structp png, png_const_charp msg) {
    auto* sink = static_cast<PngErrorSink*>(png_get_error_ptr(png));
    std::snprintf(sink->message, sizeof(sink->message), "%s", msg);
    png_longjmp(png, 1);
}

void png_warning_fn(png_structp, png_const_charp) {}

struct RawPng {
    std::size_t width = 0;
    std::size_t height = 0;
    int bit_depth = 0;
    int color_type = 0;
    std::vector<png_byte> bytes;
    std::vector<png_bytep> rows;
    PngErrorSink errors;
};

/// Decodes rows without transforms. Returns false with rp->errors set on failure.
bool read_png_raw(std::FILE* fp, RawPng* rp) {
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &rp->errors, png_error_fn,
                                             png_warning_fn);
    if (!png) return false;
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        return false;
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        return false;
    }
    png_init_io(png, fp);
    png_read_info(png, info);
    rp->width = png_get_image_width(png, info);
    rp->height = png_get_image_height(png, info);
    rp->bit_depth = png_get_bit_depth(png, info);
    rp->color_type = png_get_color_type(png, info);
    if (png_get_interlace_type(png, info) != PNG_INTERLACE_NONE) png_set_interlace_handling(png);
    png_read_update_info(png, info);
    const std::size_t stride = png_get_rowbytes(png, info);
    rp->bytes.resize(stride * rp->height);
    rp->rows.resize(rp->height);
    for (std::size_t y = 0; y < rp->height; ++y) rp->rows[y] = rp->bytes.data() + y * stride;
    png_read_image(png, rp->rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    return true;
}

std::unique_ptr<RawPng> load_png(const fs::path& path) {
    auto fp = open_file(path, "rb");
    png_byte signature[8];
    if (std::fread(signature, 1, 8, fp.get()) != 8 || png_sig_cmp(signature, 0, 8) != 0) {
        throw Error(ErrorCode::DecodeError, path.string() + " is not a PNG file");
    }
    std::rewind(fp.get());
    auto raw = std::make_unique<RawPng>();
    if (!read_png_raw(fp.get(), raw.get())) {
        throw Error(ErrorCode::DecodeError,
                    "failed to decode " + path.string() + ": " + raw->errors.message);
    }
    return raw;
}

double sample_at(const RawPng& raw, std::size_t y, std::size_t index) {
    const png_byte* row = raw.rows[y];
    if (raw.bit_depth == 16) {
        return static_cast<double>((row[2 * index] << 8) | row[2 * index + 1]) / 65535.0;
    }
    return static_cast<double>(row[index]) / 255.0;
}

struct RawPngWrite {
    std::size_t width = 0;
    std::size_t height = 0;
    int bit_depth = 8;
    int color_type = PNG_COLOR_TYPE_RGB;
    std::vector<png_byte> bytes;
    std::vector<png_bytep> rows;
    PngErrorSink errors;
};

bool write_png_raw(std::FILE* fp, RawPngWrite* wp) {
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &wp->errors, png_error_fn,
                                              png_warning_fn);
    if (!png) return false;
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        return false;
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        return false;
    }
    png_init_io(png, fp);
    png_set_compression_level(png, 6);
    png_set_IHDR(png, info, static_cast<png_uint_32>(wp->width), static_cast<png_uint_32>(wp->height),
                 wp->bit_depth, wp->color_type, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
                 PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    png_write_image(png, wp->rows.data());
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
    return true;
}

void store_png(const fs::path& path, RawPngWrite& wp) {
    const int channels = wp.color_type == PNG_COLOR_TYPE_RGB ? 3 : 1;
    const std::size_t stride = wp.width * static_cast<std::size_t>(channels) * (wp.bit_depth / 8);
    wp.rows.resize(wp.height);
    for (std::size_t y = 0; y < wp.height; ++y) wp.rows[y] = wp.bytes.data() + y * stride;
    auto fp = open_file(path, "wb");
    if (!write_png_raw(fp.get(), &wp)) {
        throw Error(ErrorCode::IoError, "failed to encode " + path.string() + ": " + wp.errors.message);
    }
    if (std::fflush(fp.get()) != 0) {
        throw Error(ErrorCode::IoError, "failed to write " + path.string());
    }
}

void put_sample(png_byte* dst, int bit_depth, unsigned value) {
    if (bit_depth == 16) {
        dst[0] = static_cast<png_byte>(value >> 8);
        dst[1] = static_cast<png_byte>(value & 0xFF);
    } else {
        dst[0] = static_cast<png_byte>(value);
    }
}

// ---------------------------------------------------------------------------
// TIFF

void silence_libtiff() {
    static std::once_flag once;
    std::call_once(once, [] {
        TIFFSetErrorHandler(nullptr);
        TIFFSetWarningHandler(nullptr);
    });
}

struct TiffCloser {
    void operator()(TIFF* t) const { TIFFClose(t); }
};
using TiffPtr = std::unique_ptr<TIFF, TiffCloser>;

std::vector<double> read_tiff_f32(const fs::path& path, std::size_t& width, std::size_t& height) {
    silence_libtiff();
    if (!fs::exists(path)) throw Error(ErrorCode::IoError, "cannot open " + path.string());
    TiffPtr tif(TIFFOpen(path.c_str(), "r"));
    if (!tif) throw Error(ErrorCode::DecodeError, path.string() + " is not a readable TIFF file");

    std::uint32_t w = 0, h = 0;
    std::uint16_t bits = 0, samples = 1, format = SAMPLEFORMAT_UINT;
    TIFFGetField(tif.get(), TIFFTAG_IMAGEWIDTH, &w);
    TIFFGetField(tif.get(), TIFFTAG_IMAGELENGTH, &h);
    TIFFGetFieldDefaulted(tif.get(), TIFFTAG_BITSPERSAMPLE, &bits);
    TIFFGetFieldDefaulted(tif.get(), TIFFTAG_SAMPLESPERPIXEL, &samples);
    TIFFGetFieldDefaulted(tif.get(), TIFFTAG_SAMPLEFORMAT, &format);
    if (bits != 32 || samples != 1 || format != SAMPLEFORMAT_IEEEFP) {
        throw Error(ErrorCode::DecodeError,
                    path.string() + " is not a single-channel float32 TIFF");
    }
    if (TIFFIsTiled(tif.get())) {
        throw Error(ErrorCode::DecodeError, path.string() + ": tiled TIFF is not supported");
    }
    if (w == 0 || h == 0) throw Error(ErrorCode::DecodeError, path.string() + " has no pixels");

    width = w;
    height = h;
    std::vector<double> values(static_cast<std::size_t>(w) * h);
    std::vector<float> line(w);
    for (std::uint32_t y = 0; y < h; ++y) {
        if (TIFFReadScanline(tif.get(), line.data(), y, 0) < 0) {
            throw Error(ErrorCode::DecodeError, path.string() + ": truncated scanline " + std::to_string(y));
        }
        std::copy(line.begin(), line.end(), values.begin() + static_cast<std::ptrdiff_t>(y) * w);
    }
    return values;
}

}  // namespace

ImageBuffer read_png_rgb(const fs::path& path, ColorSpace space) {
    const auto raw = load_png(path);
    if (raw->color_type != PNG_COLOR_TYPE_RGB || (raw->bit_depth != 8 && raw->bit_depth != 16)) {
        throw Error(ErrorCode::DecodeError,
                    path.string() + " must be an 8- or 16-bit RGB PNG without alpha");
    }
    ImageBuffer image(raw->width, raw->height);
    auto data = image.data();
    for (std::size_t y = 0; y < raw->height; ++y) {
        for (std::size_t i = 0; i < raw->width * 3; ++i) {
            const double v = sample_at(*raw, y, i);
            data[y * raw->width * 3 + i] = space == ColorSpace::Srgb ? srgb_to_linear(v) : v;
        }
    }
    return image;
}

void write_png_rgb(const fs::path& path, const ImageBuffer& image, ColorSpace space, int bit_depth) {
    if (bit_depth != 8 && bit_depth != 16) {
        throw Error(ErrorCode::InvalidArgument, "PNG bit depth must be 8 or 16");
    }
    RawPngWrite wp;
    wp.width = image.width();
    wp.height = image.height();
    wp.bit_depth = bit_depth;
    wp.color_type = PNG_COLOR_TYPE_RGB;
    const std::size_t bytes_per_sample = static_cast<std::size_t>(bit_depth / 8);
    const double max_value = bit_depth == 16 ? 65535.0 : 255.0;
    const auto data = image.data();
    wp.bytes.resize(data.size() * bytes_per_sample);
    for (std::size_t i = 0; i < data.size(); ++i) {
        double v = std::clamp(data[i], 0.0, 1.0);
        if (space == ColorSpace::Srgb) v = linear_to_srgb(v);
        const auto q = static_cast<unsigned>(std::lround(std::clamp(v, 0.0, 1.0) * max_value));
        put_sample(&wp.bytes[i * bytes_per_sample], bit_depth, q);
    }
    store_png(path, wp);
}

void DepthDecodeSpec::validate() const {
    if (!std::isfinite(scale) || scale <= 0.0) {
        throw Error(ErrorCode::InvalidArgument, "depth scale must be finite and > 0");
    }
    if (!std::isfinite(offset)) throw Error(ErrorCode::InvalidArgument, "depth offset must be finite");
}

DepthMap decode_depth(const fs::path& path, const DepthDecodeSpec& spec) {
    spec.validate();
    std::size_t width = 0;
    std::size_t height = 0;
    std::vector<double> raw;
    switch (spec.format) {
        case DepthFormat::Png16: {
            const auto png = load_png(path);
            if (png->color_type != PNG_COLOR_TYPE_GRAY || png->bit_depth != 16) {
                throw Error(ErrorCode::DecodeError, path.string() + " is not a 16-bit grayscale PNG");
            }
            width = png->width;
            height = png->height;
            raw.resize(width * height);
            for (std::size_t y = 0; y < height; ++y) {
                const png_byte* row = png->rows[y];
                for (std::size_t x = 0; x < width; ++x) {
                    raw[y * width + x] = static_cast<double>((row[2 * x] << 8) | row[2 * x + 1]);
                }
            }
            break;
        }
        case DepthFormat::TiffF32:
            raw = read_tiff_f32(path, width, height);
            break;
    }

    for (std::size_t i = 0; i < raw.size(); ++i) {
        if (!std::isfinite(raw[i])) {
            throw Error(ErrorCode::DecodeError, path.string() + ": non-finite depth at pixel (" +
                                                    std::to_string(i % width) + "," +
                                                    std::to_string(i / width) + ")");
        }
        raw[i] = raw[i] * spec.scale + spec.offset;
        if (raw[i] < 0.0) {
            throw Error(ErrorCode::DecodeError, path.string() + ": negative decoded depth at pixel (" +
                                                    std::to_string(i % width) + "," +
                                                    std::to_string(i / width) + ")");
        }
    }
    return DepthMap(width, height, std::move(raw));
}

std::size_t write_depth_png16(const fs::path& path, const DepthMap& depth, double scale, double offset) {
    DepthDecodeSpec{DepthFormat::Png16, scale, offset}.validate();
    RawPngWrite wp;
    wp.width = depth.width();
    wp.height = depth.height();
    wp.bit_depth = 16;
    wp.color_type = PNG_COLOR_TYPE_GRAY;
    const auto z = depth.data();
    wp.bytes.resize(z.size() * 2);
    std::size_t saturated = 0;
    for (std::size_t i = 0; i < z.size(); ++i) {
        const double raw = std::round((z[i] - offset) / scale);
        const double q = std::clamp(raw, 0.0, 65535.0);
        saturated += (q != raw);
        put_sample(&wp.bytes[i * 2], 16, static_cast<unsigned>(q));
    }
    store_png(path, wp);
    return saturated;
}

void write_tiff_f32(const fs::path& path, std::size_t width, std::size_t height, const float* values) {
    silence_libtiff();
    TiffPtr tif(TIFFOpen(path.c_str(), "w"));
    if (!tif) throw Error(ErrorCode::IoError, "cannot create " + path.string());
    TIFFSetField(tif.get(), TIFFTAG_IMAGEWIDTH, static_cast<std::uint32_t>(width));
    TIFFSetField(tif.get(), TIFFTAG_IMAGELENGTH, static_cast<std::uint32_t>(height));
    TIFFSetField(tif.get(), TIFFTAG_BITSPERSAMPLE, 32);
    TIFFSetField(tif.get(), TIFFTAG_SAMPLESPERPIXEL, 1);
    TIFFSetField(tif.get(), TIFFTAG_SAMPLEFORMAT, SAMPLEFORMAT_IEEEFP);
    TIFFSetField(tif.get(), TIFFTAG_PHOTOMETRIC, PHOTOMETRIC_MINISBLACK);
    TIFFSetField(tif.get(), TIFFTAG_PLANARCONFIG, PLANARCONFIG_CONTIG);
    TIFFSetField(tif.get(), TIFFTAG_ROWSPERSTRIP, 1);
    std::vector<float> line(width);
    for (std::size_t y = 0; y < height; ++y) {
        std::copy(values + y * width, values + (y + 1) * width, line.begin());
        if (TIFFWriteScanline(tif.get(), line.data(), static_cast<std::uint32_t>(y), 0) < 0) {
            throw Error(ErrorCode::IoError, "failed to write " + path.string());
        }
    }
}

}  // namespace depthjitter::io
