#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "support/synthetic.hpp"
#include "uif/sharpness.hpp"

using namespace uif;

namespace {

PlanarImage vertical_step_gray(int w, int h, int split, double lo, double hi) {
    PlanarImage g(w, h, 1, ColorSpace::Gray);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) g.at(0, x, y) = x < split ? lo : hi;
    }
    return g;
}

PlanarImage vertical_step_rgb(int w, int h, int split) {
    PlanarImage img(w, h, 3, ColorSpace::Srgb8BitScaled);
    for (int c = 0; c < 3; ++c) {
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) img.at(c, x, y) = x < split ? 0.0 : 255.0;
        }
    }
    return img;
}

// Block-by-block evaluation of the edge contrast term, written independently
// of the library loop structure.
double edge_term_oracle(const std::vector<double>& plane, const EdgeMap& e) {
    std::vector<double> logs;
    for (int y0 = 0; y0 + 5 <= e.height; y0 += 5) {
        for (int x0 = 0; x0 + 5 <= e.width; x0 += 5) {
            std::vector<double> block;
            int edge_pixels = 0;
            for (int y = y0; y < y0 + 5; ++y) {
                for (int x = x0; x < x0 + 5; ++x) {
                    block.push_back(plane[static_cast<std::size_t>(y) * e.width + x]);
                    edge_pixels += e.at(x, y) ? 1 : 0;
                }
            }
            if (edge_pixels == 0) continue;
            const double mx = *std::max_element(block.begin(), block.end());
            const double mn = *std::min_element(block.begin(), block.end());
            logs.push_back(std::log(std::max(mx, 1.0) / std::max(mn, 1.0)));
        }
    }
    if (logs.empty()) return 0.0;
    double s = 0.0;
    for (double v : logs) s += v;
    return 2.0 * s / static_cast<double>(logs.size());
}

}  // namespace

TEST(Canny, ConstantPlaneHasNoEdges) {
    std::vector<double> plane(50 * 40, 77.0);
    EXPECT_EQ(canny(plane, 50, 40).count(), 0u);
}

TEST(Canny, StepEdgeIsOnePixelWide) {
    const auto g = vertical_step_gray(64, 64, 32, 0.0, 255.0);
    const auto e = canny(g.plane(0), 64, 64);
    for (int y = 0; y < 64; ++y) {
        int row_edges = 0;
        for (int x = 0; x < 64; ++x) {
            if (e.at(x, y)) {
                ++row_edges;
                EXPECT_TRUE(x == 31 || x == 32) << "edge at x=" << x;
            }
        }
        EXPECT_EQ(row_edges, 1) << "row " << y;
    }
}

TEST(Canny, DetectsSquareOutline) {
    PlanarImage g = PlanarImage::filled_gray(64, 64, 20.0);
    for (int y = 20; y < 44; ++y) {
        for (int x = 20; x < 44; ++x) g.at(0, x, y) = 200.0;
    }
    const auto e = canny(g.plane(0), 64, 64);
    EXPECT_GT(e.count(), 60u);
    EXPECT_FALSE(e.at(32, 32));
    EXPECT_FALSE(e.at(5, 5));
}

TEST(DarkChannel, Examples) {
    EXPECT_EQ(dark_channel_mean(PlanarImage::filled(4, 4, {255, 255, 255})), 255.0);
    EXPECT_EQ(dark_channel_mean(PlanarImage::filled(4, 4, {255, 0, 0})), 0.0);
    PlanarImage two(2, 1, 3, ColorSpace::Srgb8BitScaled);
    const double px[2][3] = {{10, 20, 30}, {40, 50, 60}};
    for (int x = 0; x < 2; ++x) {
        for (int c = 0; c < 3; ++c) two.at(c, x, 0) = px[x][c];
    }
    EXPECT_DOUBLE_EQ(dark_channel_mean(two), 25.0);
    EXPECT_THROW(dark_channel_mean(PlanarImage::filled_gray(2, 2, 1.0)), Error);
}

TEST(DarkChannel, InvariantUnderChannelPermutation) {
    auto img = synth::random_image(20, 20, 5);
    const double base = dark_channel_mean(img);
    PlanarImage perm(20, 20, 3, ColorSpace::Srgb8BitScaled);
    for (int c = 0; c < 3; ++c) {
        const auto src = img.plane((c + 1) % 3);
        std::copy(src.begin(), src.end(), perm.plane(c).begin());
    }
    EXPECT_EQ(dark_channel_mean(perm), base);
}

TEST(TexturedPatchContrast, ConstantImageIsZero) {
    EXPECT_EQ(textured_patch_contrast(PlanarImage::filled_gray(128, 128, 90.0)), 0.0);
}

TEST(TexturedPatchContrast, HalfHalfPatch) {
    const auto g = vertical_step_gray(64, 64, 32, 0.0, 255.0);
    EXPECT_DOUBLE_EQ(textured_patch_contrast(g), 127.5);
}

TEST(TexturedPatchContrast, TooSmall) {
    try {
        textured_patch_contrast(PlanarImage::filled_gray(63, 63, 1.0));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::TooSmall);
    }
}

TEST(TexturedPatchContrast, MatchesPerPatchOracle) {
    for (std::uint64_t seed = 0; seed < 6; ++seed) {
        const auto gray = to_grayscale(seed % 2 ? synth::random_image(128, 128, seed)
                                                : synth::underwater_scene(128, 128, seed));
        const auto edges = canny(gray.plane(0), 128, 128);
        double expected = 0.0;
        for (int py = 0; py < 2; ++py) {
            for (int px = 0; px < 2; ++px) {
                double s = 0.0, s2 = 0.0;
                int count = 0;
                for (int y = py * 64; y < py * 64 + 64; ++y) {
                    for (int x = px * 64; x < px * 64 + 64; ++x) {
                        const double v = gray.at(0, x, y);
                        s += v;
                        s2 += v * v;
                        count += edges.at(x, y) ? 1 : 0;
                    }
                }
                if (count * 500 <= 4096) continue;  // density <= 0.2%
                const double mean = s / 4096.0;
                expected += std::sqrt(std::max(0.0, s2 / 4096.0 - mean * mean));
            }
        }
        EXPECT_NEAR(textured_patch_contrast(gray), expected, 1e-6) << "seed " << seed;
    }
}

TEST(TexturedPatchContrast, PartialBorderPatchesIgnored) {
    // texture only in the 36-wide strip beyond the last full patch column
    PlanarImage g = PlanarImage::filled_gray(100, 64, 50.0);
    for (int y = 0; y < 64; ++y) {
        for (int x = 70; x < 100; ++x) g.at(0, x, y) = ((x / 3 + y / 3) % 2) ? 220.0 : 10.0;
    }
    EXPECT_EQ(textured_patch_contrast(g), 0.0);
}

TEST(EdgeBlockContrast, SingleBlockTerm) {
    std::vector<double> plane(25, 100.0);
    plane[3] = 200.0;
    plane[17] = 50.0;
    EdgeMap e{5, 5, std::vector<std::uint8_t>(25, 0)};
    e.mask[12] = 1;
    EXPECT_NEAR(edge_block_term(plane, e), 2.0 * std::log(4.0), 1e-12);
}

TEST(EdgeBlockContrast, ConstantImageIsZero) {
    EXPECT_EQ(edge_block_contrast(PlanarImage::filled(40, 40, {120, 60, 30})), 0.0);
}

TEST(EdgeBlockContrast, StepImageMatchesOracle) {
    const auto img = vertical_step_rgb(40, 30, 17);
    double expected = 0.0;
    for (int c = 0; c < 3; ++c) {
        std::vector<double> plane(img.plane(c).begin(), img.plane(c).end());
        const auto e = canny(plane, 40, 30);
        expected += kChannelWeights[static_cast<std::size_t>(c)] * edge_term_oracle(plane, e);
    }
    EXPECT_GT(expected, 0.0);
    EXPECT_NEAR(edge_block_contrast(img), expected, 1e-12);
}

TEST(EdgeBlockContrast, RandomImagesMatchOracle) {
    for (std::uint64_t seed = 20; seed < 24; ++seed) {
        const auto img = synth::underwater_scene(67, 53, seed);
        double expected = 0.0;
        for (int c = 0; c < 3; ++c) {
            std::vector<double> plane(img.plane(c).begin(), img.plane(c).end());
            expected += kChannelWeights[static_cast<std::size_t>(c)] * edge_term_oracle(plane, canny(plane, 67, 53));
        }
        EXPECT_NEAR(edge_block_contrast(img), expected, 1e-9);
        EXPECT_GE(edge_block_contrast(img), 0.0);
    }
}

TEST(EdgeBlockContrast, TooSmall) {
    EXPECT_THROW(edge_block_contrast(PlanarImage::filled(4, 8, {1, 2, 3})), Error);
}

TEST(Entropy, Examples) {
    EXPECT_EQ(entropy(PlanarImage::filled_gray(16, 16, 42.0)), 0.0);
    PlanarImage ramp(256, 4, 1, ColorSpace::Gray);
    for (int y = 0; y < 4; ++y) {
        for (int x = 0; x < 256; ++x) ramp.at(0, x, y) = x;
    }
    EXPECT_DOUBLE_EQ(entropy(ramp), 8.0);
    EXPECT_DOUBLE_EQ(entropy(vertical_step_gray(64, 64, 32, 0.0, 255.0)), 1.0);
}

TEST(Entropy, InvariantUnderPixelPermutation) {
    const auto gray = to_grayscale(synth::random_image(32, 32, 11));
    std::vector<double> values(gray.plane(0).begin(), gray.plane(0).end());
    std::mt19937 rng(3);
    std::shuffle(values.begin(), values.end(), rng);
    PlanarImage shuffled(32, 32, 1, ColorSpace::Gray);
    std::copy(values.begin(), values.end(), shuffled.plane(0).begin());
    EXPECT_EQ(entropy(shuffled), entropy(gray));
}

TEST(SharpnessFeatures, FlatImages) {
    const auto white = sharpness_features(PlanarImage::filled(128, 128, {255, 255, 255}));
    EXPECT_EQ(white.mu_dark, 255.0);
    EXPECT_EQ(white.c, 0.0);
    EXPECT_EQ(white.c_edge, 0.0);
    EXPECT_EQ(white.e, 0.0);
    const auto black = sharpness_features(PlanarImage::filled(128, 128, {0, 0, 0}));
    EXPECT_EQ(black.mu_dark, 0.0);
    EXPECT_EQ(black.c, 0.0);
    EXPECT_EQ(black.c_edge, 0.0);
    EXPECT_EQ(black.e, 0.0);
}

TEST(SharpnessFeatures, BoundsOnRandomImages) {
    for (std::uint64_t seed = 0; seed < 8; ++seed) {
        const auto f = sharpness_features(synth::underwater_scene(96, 80, seed));
        EXPECT_GE(f.mu_dark, 0.0);
        EXPECT_LE(f.mu_dark, 255.0);
        EXPECT_GE(f.e, 0.0);
        EXPECT_LE(f.e, 8.0);
        EXPECT_GE(f.c, 0.0);
        EXPECT_GE(f.c_edge, 0.0);
        EXPECT_TRUE(std::isfinite(f.c) && std::isfinite(f.c_edge));
    }
}
