#pragma once

// End-to-end document pipeline: monochrome conversion, boundary
// detection, boundary sharpening, FSQ1 encoding, in that order.

#include <cstdint>

#include "fieldsync/fsq1.hpp"
#include "fieldsync/image.hpp"

namespace fieldsync::imaging {

struct PipelineConfig {
    double quality = 0.6;       // compression factor, (0, 1]
    double edge_k = 1.0;        // boundary threshold multiplier, >= 0
    double sharpen_alpha = 1.0; // unsharp gain, >= 0

    void validate() const {
        if (!(quality > 0.0) || quality > 1.0)
            throw ValidationError("quality must be in (0, 1]");
        if (edge_k < 0) throw ValidationError("edge_k must be >= 0");
        if (sharpen_alpha < 0) throw ValidationError("sharpen_alpha must be >= 0");
    }
};

// Per-stage byte sizes for the CLI report.
struct StageReport {
    std::uint64_t input_bytes = 0;       // raw samples in
    std::uint64_t monochrome_bytes = 0;  // samples after grayscale
    std::uint64_t edge_pixels = 0;       // mask true count
    std::uint64_t compressed_bytes = 0;  // FSQ1 container size
};

inline CompressedDoc process_document(const Image& img, const PipelineConfig& cfg,
                                      StageReport* report = nullptr) {
    cfg.validate();
    Image mono = to_monochrome(img);
    EdgeMask mask = detect_boundary(mono, cfg.edge_k);
    Image sharp = sharpen_boundary(mono, mask, cfg.sharpen_alpha);
    CompressedDoc doc = encode_fsq1(sharp, cfg.quality);
    if (report) {
        report->input_bytes = img.samples.size();
        report->monochrome_bytes = mono.samples.size();
        report->edge_pixels = mask.true_count();
        report->compressed_bytes = doc.bytes.size();
    }
    return doc;
}

}  // namespace fieldsync::imaging
