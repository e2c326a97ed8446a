#pragma once

// Raster type and the document-capture transforms: grayscale conversion,
// Sobel boundary detection, masked unsharp sharpening, uniform
// quantization, PSNR. All operations are pure functions over immutable
// Image values; every numeric choice (BT.601 weights, population sigma,
// strict threshold, edge-replicated borders) is pinned so outputs are
// bit-stable across runs.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "fieldsync/errors.hpp"

namespace fieldsync::imaging {

struct Image {
    std::uint32_t width = 0;
    std::uint32_t height = 0;
    std::uint32_t channels = 1;  // 1 = grayscale, 3 = RGB
    std::vector<std::uint8_t> samples;  // row-major, interleaved channels

    std::size_t pixel_count() const {
        return static_cast<std::size_t>(width) * height;
    }

    std::uint8_t at(std::uint32_t x, std::uint32_t y, std::uint32_t c = 0) const {
        return samples[(static_cast<std::size_t>(y) * width + x) * channels + c];
    }

    std::uint8_t& at(std::uint32_t x, std::uint32_t y, std::uint32_t c = 0) {
        return samples[(static_cast<std::size_t>(y) * width + x) * channels + c];
    }

    bool operator==(const Image&) const = default;
};

inline Image make_image(std::uint32_t w, std::uint32_t h, std::uint32_t channels,
                        std::uint8_t fill = 0) {
    if (w < 1 || h < 1)
        throw ValidationError("image dimensions must be at least 1x1");
    if (channels != 1 && channels != 3)
        throw ValidationError("image must have 1 or 3 channels");
    Image img;
    img.width = w;
    img.height = h;
    img.channels = channels;
    img.samples.assign(static_cast<std::size_t>(w) * h * channels, fill);
    return img;
}

struct EdgeMask {
    std::uint32_t width = 0;
    std::uint32_t height = 0;
    std::vector<bool> bits;  // true = boundary pixel

    bool at(std::uint32_t x, std::uint32_t y) const {
        return bits[static_cast<std::size_t>(y) * width + x];
    }

    std::size_t true_count() const {
        return static_cast<std::size_t>(
            std::count(bits.begin(), bits.end(), true));
    }
};

// ---------------------------------------------------------------------------
// PNM (binary PGM/PPM, maxval 255) load and save.

namespace detail {

// Header tokenizer: skips whitespace and '#' comments, tracks the byte
// offset for error reporting.
struct PnmCursor {
    const std::uint8_t* data;
    std::size_t size;
    std::size_t pos = 0;

    void skip_space() {
        while (pos < size) {
            std::uint8_t c = data[pos];
            if (c == '#') {
                while (pos < size && data[pos] != '\n') ++pos;
            } else if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
                ++pos;
            } else {
                break;
            }
        }
    }

    std::uint64_t read_uint(const char* field) {
        skip_space();
        std::size_t start = pos;
        std::uint64_t value = 0;
        while (pos < size && data[pos] >= '0' && data[pos] <= '9') {
            value = value * 10 + (data[pos] - '0');
            if (value > 0xFFFFFFFFull)
                throw ParseError(std::string("PNM ") + field + " out of range", start);
            ++pos;
        }
        if (pos == start)
            throw ParseError(std::string("expected PNM ") + field, pos);
        return value;
    }
};

}  // namespace detail

inline Image load_pnm(const std::vector<std::uint8_t>& octets) {
    detail::PnmCursor cur{octets.data(), octets.size()};
    if (octets.size() < 2)
        throw ParseError("not a PNM file: too short", 0);
    char m0 = static_cast<char>(octets[0]);
    char m1 = static_cast<char>(octets[1]);
    if (m0 != 'P' || (m1 != '5' && m1 != '6'))
        throw ParseError("not a binary PGM/PPM: bad magic", 0);
    std::uint32_t channels = (m1 == '5') ? 1u : 3u;
    cur.pos = 2;
    std::uint64_t w = cur.read_uint("width");
    std::uint64_t h = cur.read_uint("height");
    std::uint64_t maxval = cur.read_uint("maxval");
    if (w < 1 || h < 1)
        throw ParseError("PNM dimensions must be positive", cur.pos);
    if (maxval != 255)
        throw ParseError("unsupported PNM maxval " + std::to_string(maxval) +
                             ", expected 255",
                         cur.pos);
    // Exactly one whitespace byte separates the header from the payload.
    if (cur.pos >= octets.size())
        throw ParseError("PNM payload missing", cur.pos);
    std::uint8_t sep = octets[cur.pos];
    if (sep != ' ' && sep != '\t' && sep != '\r' && sep != '\n')
        throw ParseError("missing whitespace after PNM maxval", cur.pos);
    ++cur.pos;
    std::uint64_t expected = w * h * channels;
    std::uint64_t available = octets.size() - cur.pos;
    if (available < expected)
        throw ParseError("PNM payload truncated: expected " +
                             std::to_string(expected) + " bytes, found " +
                             std::to_string(available),
                         octets.size());
    Image img;
    img.width = static_cast<std::uint32_t>(w);
    img.height = static_cast<std::uint32_t>(h);
    img.channels = channels;
    img.samples.assign(octets.begin() + static_cast<std::ptrdiff_t>(cur.pos),
                       octets.begin() + static_cast<std::ptrdiff_t>(cur.pos + expected));
    return img;
}

inline std::vector<std::uint8_t> save_pnm(const Image& img) {
    if (img.channels != 1 && img.channels != 3)
        throw ValidationError("PNM output requires 1 or 3 channels");
    std::string header = (img.channels == 1 ? "P5\n" : "P6\n") +
                         std::to_string(img.width) + " " +
                         std::to_string(img.height) + "\n255\n";
    std::vector<std::uint8_t> out;
    out.reserve(header.size() + img.samples.size());
    out.insert(out.end(), header.begin(), header.end());
    out.insert(out.end(), img.samples.begin(), img.samples.end());
    return out;
}

// ---------------------------------------------------------------------------
// Stage: convertColor(img, Monochrome)

// BT.601 luminance. 3-channel input shrinks 3x; 1-channel input is
// returned unchanged, which also makes the operation idempotent.
inline Image to_monochrome(const Image& img) {
    if (img.channels == 1) return img;
    Image out;
    out.width = img.width;
    out.height = img.height;
    out.channels = 1;
    out.samples.resize(img.pixel_count());
    for (std::size_t i = 0; i < out.samples.size(); ++i) {
        double r = img.samples[3 * i];
        double g = img.samples[3 * i + 1];
        double b = img.samples[3 * i + 2];
        long v = std::lround(0.299 * r + 0.587 * g + 0.114 * b);
        out.samples[i] = static_cast<std::uint8_t>(std::clamp(v, 0l, 255l));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Stage: detectBoundary(img)

namespace detail {

// Edge-replicated sample access for the 3x3 convolutions.
inline std::uint8_t clamped_at(const Image& img, std::int64_t x, std::int64_t y) {
    x = std::clamp<std::int64_t>(x, 0, img.width - 1);
    y = std::clamp<std::int64_t>(y, 0, img.height - 1);
    return img.samples[static_cast<std::size_t>(y) * img.width +
                       static_cast<std::size_t>(x)];
}

inline std::vector<double> sobel_magnitude(const Image& img) {
    std::vector<double> g(img.pixel_count());
    for (std::uint32_t y = 0; y < img.height; ++y) {
        for (std::uint32_t x = 0; x < img.width; ++x) {
            double p00 = clamped_at(img, std::int64_t{x} - 1, std::int64_t{y} - 1);
            double p10 = clamped_at(img, x, std::int64_t{y} - 1);
            double p20 = clamped_at(img, std::int64_t{x} + 1, std::int64_t{y} - 1);
            double p01 = clamped_at(img, std::int64_t{x} - 1, y);
            double p21 = clamped_at(img, std::int64_t{x} + 1, y);
            double p02 = clamped_at(img, std::int64_t{x} - 1, std::int64_t{y} + 1);
            double p12 = clamped_at(img, x, std::int64_t{y} + 1);
            double p22 = clamped_at(img, std::int64_t{x} + 1, std::int64_t{y} + 1);
            double gx = (p20 + 2 * p21 + p22) - (p00 + 2 * p01 + p02);
            double gy = (p02 + 2 * p12 + p22) - (p00 + 2 * p10 + p20);
            g[static_cast<std::size_t>(y) * img.width + x] =
                std::sqrt(gx * gx + gy * gy);
        }
    }
    return g;
}

}  // namespace detail

// Sobel gradient magnitude thresholded at mu + edge_k * sigma, where sigma
// is the population standard deviation and the comparison is strict, so a
// constant image always yields an empty mask. Images smaller than 3x3
// yield an all-false mask.
inline EdgeMask detect_boundary(const Image& img, double edge_k) {
    if (img.channels != 1)
        throw ValidationError("detect_boundary requires a 1-channel image, got " +
                              std::to_string(img.channels) + " channels");
    if (edge_k < 0) throw ValidationError("edge_k must be >= 0");
    EdgeMask mask;
    mask.width = img.width;
    mask.height = img.height;
    mask.bits.assign(img.pixel_count(), false);
    if (img.width < 3 || img.height < 3) return mask;

    std::vector<double> g = detail::sobel_magnitude(img);
    double mean = 0;
    for (double v : g) mean += v;
    mean /= static_cast<double>(g.size());
    double var = 0;
    for (double v : g) var += (v - mean) * (v - mean);
    var /= static_cast<double>(g.size());
    double threshold = mean + edge_k * std::sqrt(var);
    for (std::size_t i = 0; i < g.size(); ++i) mask.bits[i] = g[i] > threshold;
    return mask;
}

// ---------------------------------------------------------------------------
// Stage: sharpenBoundary(img)

// Unsharp mask restricted to the detected boundary, dilated by one pixel
// (8-neighborhood) so the halo straddles both sides of each edge. Blur
// kernel [1 2 1; 2 4 2; 1 2 1]/16 with edge replication. Pixels outside
// the dilated mask are copied unchanged.
inline Image sharpen_boundary(const Image& img, const EdgeMask& mask,
                              double alpha) {
    if (img.channels != 1)
        throw ValidationError("sharpen_boundary requires a 1-channel image");
    if (mask.width != img.width || mask.height != img.height)
        throw ValidationError("mask dimensions " + std::to_string(mask.width) +
                              "x" + std::to_string(mask.height) +
                              " do not match image " + std::to_string(img.width) +
                              "x" + std::to_string(img.height));
    if (alpha < 0) throw ValidationError("sharpen alpha must be >= 0");

    std::vector<bool> dilated(mask.bits.size(), false);
    for (std::uint32_t y = 0; y < img.height; ++y) {
        for (std::uint32_t x = 0; x < img.width; ++x) {
            if (!mask.at(x, y)) continue;
            for (int dy = -1; dy <= 1; ++dy) {
                for (int dx = -1; dx <= 1; ++dx) {
                    std::int64_t nx = std::int64_t{x} + dx;
                    std::int64_t ny = std::int64_t{y} + dy;
                    if (nx < 0 || ny < 0 || nx >= img.width || ny >= img.height)
                        continue;
                    dilated[static_cast<std::size_t>(ny) * img.width +
                            static_cast<std::size_t>(nx)] = true;
                }
            }
        }
    }

    Image out = img;
    for (std::uint32_t y = 0; y < img.height; ++y) {
        for (std::uint32_t x = 0; x < img.width; ++x) {
            std::size_t idx = static_cast<std::size_t>(y) * img.width + x;
            if (!dilated[idx]) continue;
            double acc = 0;
            static constexpr int kKernel[3][3] = {{1, 2, 1}, {2, 4, 2}, {1, 2, 1}};
            for (int dy = -1; dy <= 1; ++dy)
                for (int dx = -1; dx <= 1; ++dx)
                    acc += kKernel[dy + 1][dx + 1] *
                           static_cast<double>(detail::clamped_at(
                               img, std::int64_t{x} + dx, std::int64_t{y} + dy));
            double blur = acc / 16.0;
            double in = img.samples[idx];
            long v = std::lround(in + alpha * (in - blur));
            out.samples[idx] = static_cast<std::uint8_t>(std::clamp(v, 0l, 255l));
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Stage: the lossy half of compressBitmap(img)

// Number of gray levels for a compression factor: L = max(2, round(256*q)).
// quality 1 gives 256 levels, the identity map.
inline int quantize_levels(double quality) {
    if (!(quality > 0.0) || quality > 1.0)
        throw ValidationError("quality must be in (0, 1], got " +
                              std::to_string(quality));
    return std::max(2, static_cast<int>(std::lround(256.0 * quality)));
}

// Uniform scalar quantizer with 0 and 255 as fixed points:
// index = round(p*(L-1)/255), reconstruction = round(index*255/(L-1)).
inline Image quantize(const Image& img, double quality) {
    if (img.channels != 1)
        throw ValidationError("quantize requires a 1-channel image");
    int levels = quantize_levels(quality);
    if (levels == 256) return img;
    Image out = img;
    std::array<std::uint8_t, 256> lut{};
    for (int p = 0; p < 256; ++p) {
        long idx = std::lround(p * (levels - 1) / 255.0);
        long recon = std::lround(idx * 255.0 / (levels - 1));
        lut[static_cast<std::size_t>(p)] =
            static_cast<std::uint8_t>(std::clamp(recon, 0l, 255l));
    }
    for (auto& s : out.samples) s = lut[s];
    return out;
}

// ---------------------------------------------------------------------------
// PSNR in dB; identical images return +infinity.
inline double psnr(const Image& a, const Image& b) {
    if (a.width != b.width || a.height != b.height || a.channels != b.channels)
        throw ValidationError("psnr requires matching dimensions and channels");
    double mse = 0;
    for (std::size_t i = 0; i < a.samples.size(); ++i) {
        double d = static_cast<double>(a.samples[i]) - b.samples[i];
        mse += d * d;
    }
    mse /= static_cast<double>(a.samples.size());
    if (mse == 0.0) return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(255.0 * 255.0 / mse);
}

}  // namespace fieldsync::imaging
