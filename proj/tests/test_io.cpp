#include <doctest.h>

#include <functional>

#include "depthjitter/formats.hpp"
#include "depthjitter/image_io.hpp"
#include "support.hpp"

using namespace depthjitter;
using namespace depthjitter::io;
using namespace testsupport;

namespace {

ErrorCode code_of(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected an error");
    return ErrorCode::InvalidArgument;
}

}  // namespace

TEST_CASE("sRGB transfer round-trips") {
    for (int i = 0; i <= 1000; ++i) {
        const double v = i / 1000.0;
        CHECK(srgb_to_linear(linear_to_srgb(v)) == doctest::Approx(v).epsilon(1e-12));
    }
    CHECK(srgb_to_linear(0.0) == 0.0);
    CHECK(srgb_to_linear(1.0) == doctest::Approx(1.0));
    CHECK(srgb_to_linear(0.5) == doctest::Approx(0.214041140).epsilon(1e-8));
    CHECK(srgb_to_linear(0.04045) == doctest::Approx(0.04045 / 12.92));
}

TEST_CASE("png round trip at 8 and 16 bits") {
    TempDir dir("io_png");
    std::mt19937_64 rng(31);
    const auto img = random_image(rng, 13, 7);
    for (const int bits : {8, 16}) {
        const double step = 1.0 / ((1 << bits) - 1);
        for (const auto space : {ColorSpace::Linear, ColorSpace::Srgb}) {
            const auto path = dir / ("img" + std::to_string(bits) + ".png");
            write_png_rgb(path, img, space, bits);
            const auto back = read_png_rgb(path, space);
            REQUIRE(back.width() == 13);
            REQUIRE(back.height() == 7);
            // Quantization happens on the encoded value.
            const double tol = 0.5 * step + 1e-12;
            for (std::size_t i = 0; i < img.data().size(); ++i) {
                const double a = space == ColorSpace::Linear ? img.data()[i] : linear_to_srgb(img.data()[i]);
                const double b = space == ColorSpace::Linear ? back.data()[i] : linear_to_srgb(back.data()[i]);
                CHECK(std::abs(a - b) <= tol);
            }
        }
    }
    CHECK_THROWS_AS(write_png_rgb(dir / "bad.png", img, ColorSpace::Linear, 12), Error);
}

TEST_CASE("png output is byte-stable") {
    TempDir dir("io_stable");
    std::mt19937_64 rng(32);
    const auto img = random_image(rng, 20, 20);
    write_png_rgb(dir / "a.png", img, ColorSpace::Srgb, 8);
    write_png_rgb(dir / "b.png", img, ColorSpace::Srgb, 8);
    CHECK(formats::read_text(dir / "a.png") == formats::read_text(dir / "b.png"));
}

TEST_CASE("png16 depth decoding applies scale and offset") {
    TempDir dir("io_depth");
    // Stored raw values 0, 1000, 65535 (written at 1 mm per unit).
    const DepthMap meters(3, 1, std::vector<double>{0.0, 1.0, 65.535});
    CHECK(write_depth_png16(dir / "d.png", meters, 0.001) == 0);

    const auto cm = decode_depth(dir / "d.png", {DepthFormat::Png16, 0.01, 0.0});
    CHECK(cm.at(0, 0) == 0.0);
    CHECK(cm.at(1, 0) == doctest::Approx(10.0).epsilon(1e-12));
    CHECK(cm.at(2, 0) == doctest::Approx(655.35).epsilon(1e-12));

    const auto shifted = decode_depth(dir / "d.png", {DepthFormat::Png16, 0.001, 2.5});
    CHECK(shifted.at(0, 0) == 2.5);
    CHECK(shifted.at(1, 0) == doctest::Approx(3.5).epsilon(1e-12));
}

TEST_CASE("png16 depth writer reports saturation") {
    TempDir dir("io_sat");
    const DepthMap meters(2, 1, std::vector<double>{70.0, 1.0});
    CHECK(write_depth_png16(dir / "d.png", meters, 0.001) == 1);
    const auto back = decode_depth(dir / "d.png", {});
    CHECK(back.at(0, 0) == doctest::Approx(65.535));
}

TEST_CASE("float tiff depth decoding") {
    TempDir dir("io_tiff");
    const std::vector<float> v{0.0f, 1.5f, 12.25f, 40.0f};
    write_tiff_f32(dir / "d.tif", 2, 2, v.data());
    const auto z = decode_depth(dir / "d.tif", {DepthFormat::TiffF32, 1.0, 0.0});
    CHECK(z.width() == 2);
    CHECK(z.at(1, 0) == 1.5);
    CHECK(z.at(0, 1) == 12.25);
    const auto scaled = decode_depth(dir / "d.tif", {DepthFormat::TiffF32, 2.0, 1.0});
    CHECK(scaled.at(1, 1) == 81.0);
}

TEST_CASE("invalid depth files are rejected") {
    TempDir dir("io_bad");
    const std::vector<float> with_nan{1.0f, std::numeric_limits<float>::quiet_NaN(), 2.0f, 3.0f};
    write_tiff_f32(dir / "nan.tif", 2, 2, with_nan.data());
    CHECK(code_of([&] { decode_depth(dir / "nan.tif", {DepthFormat::TiffF32, 1.0, 0.0}); }) == ErrorCode::DecodeError);
    try {
        decode_depth(dir / "nan.tif", {DepthFormat::TiffF32, 1.0, 0.0});
    } catch (const Error& e) {
        CHECK(std::string(e.what()).find("(1,0)") != std::string::npos);
    }

    const std::vector<float> negative{1.0f, -2.0f, 2.0f, 3.0f};
    write_tiff_f32(dir / "neg.tif", 2, 2, negative.data());
    CHECK(code_of([&] { decode_depth(dir / "neg.tif", {DepthFormat::TiffF32, 1.0, 0.0}); }) == ErrorCode::DecodeError);

    // A negative offset pushes raw 0 below zero.
    write_depth_png16(dir / "zero.png", DepthMap(2, 2, 0.0), 0.001);
    CHECK(code_of([&] { decode_depth(dir / "zero.png", {DepthFormat::Png16, 0.001, -1.0}); }) == ErrorCode::DecodeError);

    // RGB PNG is not a depth map.
    write_png_rgb(dir / "rgb.png", ImageBuffer(2, 2, 0.5), ColorSpace::Linear, 16);
    CHECK(code_of([&] { decode_depth(dir / "rgb.png", {}); }) == ErrorCode::DecodeError);

    formats::write_text(dir / "junk.png", "not a png at all");
    CHECK(code_of([&] { decode_depth(dir / "junk.png", {}); }) == ErrorCode::DecodeError);
    CHECK(code_of([&] { read_png_rgb(dir / "junk.png", ColorSpace::Srgb); }) == ErrorCode::DecodeError);

    // Truncated PNG.
    auto bytes = formats::read_text(dir / "rgb.png");
    formats::write_text(dir / "trunc.png", bytes.substr(0, bytes.size() / 2));
    CHECK(code_of([&] { read_png_rgb(dir / "trunc.png", ColorSpace::Srgb); }) == ErrorCode::DecodeError);

    // A depth PNG is not an RGB image.
    CHECK(code_of([&] { read_png_rgb(dir / "zero.png", ColorSpace::Srgb); }) == ErrorCode::DecodeError);

    CHECK(code_of([&] { decode_depth(dir / "missing.png", {}); }) != ErrorCode::InvalidArgument);
    CHECK(code_of([&] { DepthDecodeSpec{DepthFormat::Png16, 0.0, 0.0}.validate(); }) == ErrorCode::InvalidArgument);
}
