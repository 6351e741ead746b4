#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "support/synthetic.hpp"
#include "uif/image.hpp"

namespace fs = std::filesystem;
using namespace uif;

namespace {

fs::path tmp_dir() {
    fs::path d = fs::path(UIF_TEST_TMP) / "image";
    fs::create_directories(d);
    return d;
}

}  // namespace

TEST(LoadImage, WhitePngDecodesTo255) {
    const auto path = tmp_dir() / "white.png";
    save_png(PlanarImage::filled(2, 2, {255, 255, 255}), path);
    const auto img = load_image(path);
    EXPECT_EQ(img.width(), 2);
    EXPECT_EQ(img.height(), 2);
    EXPECT_EQ(img.space(), ColorSpace::Srgb8BitScaled);
    for (int c = 0; c < 3; ++c) {
        for (double v : img.plane(c)) EXPECT_EQ(v, 255.0);
    }
}

TEST(LoadImage, BlackPixel) {
    const auto path = tmp_dir() / "black.png";
    save_png(PlanarImage::filled(1, 1, {0, 0, 0}), path);
    const auto img = load_image(path);
    for (int c = 0; c < 3; ++c) EXPECT_EQ(img.plane(c)[0], 0.0);
}

TEST(LoadImage, ChannelOrderIsRgb) {
    const auto path = tmp_dir() / "rgb.png";
    save_png(PlanarImage::filled(3, 2, {10, 20, 30}), path);
    const auto img = load_image(path);
    EXPECT_EQ(img.at(0, 1, 1), 10.0);
    EXPECT_EQ(img.at(1, 1, 1), 20.0);
    EXPECT_EQ(img.at(2, 1, 1), 30.0);
}

TEST(LoadImage, JpegIsAccepted) {
    const auto path = tmp_dir() / "gray.jpg";
    save_png(PlanarImage::filled(8, 8, {128, 128, 128}), path);  // extension selects JPEG
    const auto img = load_image(path);
    EXPECT_NEAR(img.at(0, 3, 3), 128.0, 2.0);
}

TEST(LoadImage, MissingFileIsIoError) {
    try {
        load_image(tmp_dir() / "does_not_exist.png");
        FAIL() << "expected IoError";
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::Io);
    }
}

TEST(LoadImage, CorruptFileIsDecodeError) {
    const auto bad = tmp_dir() / "bad.png";
    {
        std::ofstream out(bad, std::ios::binary);
        out << "this is not an image";
    }
    const auto truncated = tmp_dir() / "truncated.png";
    {
        std::ofstream out(truncated, std::ios::binary);
        out << "\x89PNG\r\n\x1a\n";
    }
    for (const auto& p : {bad, truncated}) {
        try {
            load_image(p);
            FAIL() << "expected DecodeError for " << p;
        } catch (const Error& e) {
            EXPECT_EQ(e.kind(), ErrorKind::Decode);
        }
    }
}

TEST(Grayscale, Bt601Weights) {
    EXPECT_EQ(to_grayscale(PlanarImage::filled(2, 2, {255, 255, 255})).plane(0)[0], 255.0);
    EXPECT_NEAR(to_grayscale(PlanarImage::filled(1, 1, {255, 0, 0})).plane(0)[0], 76.245, 1e-9);
    EXPECT_NEAR(to_grayscale(PlanarImage::filled(1, 1, {128, 128, 128})).plane(0)[0], 128.0, 1e-9);
}

TEST(Grayscale, RejectsSingleChannelInput) {
    const auto gray = PlanarImage::filled_gray(4, 4, 10.0);
    EXPECT_THROW(to_grayscale(gray), Error);
    EXPECT_THROW(to_cielab(gray), Error);
}

TEST(Cielab, ReferenceColours) {
    const auto white = srgb_to_lab(255, 255, 255);
    EXPECT_NEAR(white[0], 100.0, 1e-6);
    EXPECT_LT(std::abs(white[1]), 0.01);
    EXPECT_LT(std::abs(white[2]), 0.01);

    const auto black = srgb_to_lab(0, 0, 0);
    EXPECT_EQ(black[0], 0.0);
    EXPECT_EQ(black[1], 0.0);
    EXPECT_EQ(black[2], 0.0);

    // reference values from an independent sRGB/D65 implementation
    const auto red = srgb_to_lab(255, 0, 0);
    EXPECT_NEAR(red[0], 53.2406, 0.01);
    EXPECT_NEAR(red[1], 80.0923, 0.01);
    EXPECT_NEAR(red[2], 67.2028, 0.01);
}

TEST(Cielab, GrayLightnessStrictlyIncreasing) {
    double prev = -1.0;
    for (int v = 0; v <= 255; ++v) {
        const auto lab = srgb_to_lab(v, v, v);
        EXPECT_GT(lab[0], prev) << "v=" << v;
        prev = lab[0];
    }
}

TEST(ColorConversions, DeterministicAndInRange) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto img = synth::random_image(17, 13, seed);
        const auto gray = to_grayscale(img);
        const auto lab = to_cielab(img);
        EXPECT_EQ(gray, to_grayscale(img));
        EXPECT_EQ(lab, to_cielab(img));
        for (double v : gray.plane(0)) {
            EXPECT_GE(v, 0.0);
            EXPECT_LE(v, 255.0);
        }
        for (double v : lab.plane(0)) {
            EXPECT_GE(v, 0.0);
            EXPECT_LE(v, 100.0);
        }
        for (int c = 1; c < 3; ++c) {
            for (double v : lab.plane(c)) {
                EXPECT_GE(v, -128.0);
                EXPECT_LE(v, 127.0);
            }
        }
    }
}

TEST(PlanarImage, RejectsBadShapes) {
    EXPECT_THROW(PlanarImage(0, 4, 3, ColorSpace::Srgb8BitScaled), Error);
    EXPECT_THROW(PlanarImage(4, 4, 2, ColorSpace::Srgb8BitScaled), Error);
    EXPECT_THROW(PlanarImage(4, 4, 3, ColorSpace::Gray), Error);
}

TEST(SaveMapPng, StretchesToFullRange) {
    const auto path = tmp_dir() / "map.png";
    std::vector<double> values{0.2, 0.4, 0.6, 1.0};
    save_map_png(values, 2, 2, path);
    const auto img = load_image(path);
    EXPECT_EQ(img.at(0, 0, 0), 0.0);
    EXPECT_EQ(img.at(0, 1, 1), 255.0);
}
