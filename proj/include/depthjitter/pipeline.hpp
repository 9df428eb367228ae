#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "depthjitter/formats.hpp"
#include "depthjitter/image_io.hpp"
#include "depthjitter/offset_policy.hpp"
#include "depthjitter/param_estimation.hpp"
#include "depthjitter/uifm.hpp"

namespace depthjitter::pipeline {

/// Runs fn(i) for i in [0, count) on up to `threads` workers. fn must not throw.
void parallel_for(std::size_t count, std::size_t threads, const std::function<void(std::size_t)>& fn);

/// Dataset-level decoding settings shared by every stage.
struct DecodeSettings {
    io::DepthDecodeSpec depth;
    io::ColorSpace color_space = io::ColorSpace::Srgb;
};

struct PrecomputeConfig {
    DecodeSettings decode;
    estimation::EstimationConfig estimation;
    bool robust_bounds = false;  ///< 1st/99th depth percentiles instead of min/max
    std::size_t threads = 1;
};

struct PrecomputeResult {
    formats::VarianceStats stats;
    /// Full fit reports for entries whose params were fitted, in manifest order.
    std::vector<std::pair<std::string, estimation::FitReport>> fits;
};

/**
 * Decodes every pair, records depth variance and bounds, fits or loads water
 * parameters, then sets tau to the first quartile of all recorded variances.
 *
 * Entries that fail to decode land in stats.failures. Entries whose fit fails
 * keep their record with an estimation_error and fall back to the per-channel
 * median of the successful fits when there is one. Throws EmptyInput when no
 * entry produced a record.
 */
PrecomputeResult run_precompute(const formats::DatasetManifest& manifest, const PrecomputeConfig& cfg);

struct AugmentConfig {
    DecodeSettings decode;
    ClampPolicy clamp;
    std::uint64_t seed = 0;
    std::size_t variants = 1;
    std::size_t threads = 1;
    int image_bit_depth = 8;
    double depth_out_scale = 0.001;  ///< meters per unit in emitted png16 depth maps
};

struct AugmentLogRow {
    std::string image_id;
    std::size_t variant = 0;
    double dz = 0.0;
    std::size_t clipped_pixels = 0;
};

struct AugmentSummary {
    std::vector<AugmentLogRow> log;
    std::vector<formats::EntryFailure> failures;
    std::size_t written_pairs = 0;
    std::size_t depth_saturated_pixels = 0;
    std::uint64_t estimation_calls = 0;  ///< estimation entry points hit during the run; expected 0
};

struct AugmentedPair {
    uifm::JitterResult result;
    double dz = 0.0;
};

/// One variant of one image: derives the SeedSpec, samples the offset and re-renders.
/// The batch path and in-process callers share this, so their outputs agree bit for bit.
AugmentedPair augment_pair(const ImageBuffer& image, const DepthMap& depth,
                           const formats::PrecomputeRecord& record,
                           const offset_policy::OffsetPolicy& policy, const ClampPolicy& clamp,
                           std::uint64_t seed, std::size_t variant);

/// Policy actually applied: adaptive mode takes tau from the stats file.
offset_policy::OffsetPolicy effective_policy(offset_policy::OffsetPolicy policy,
                                             const formats::VarianceStats& stats);

/**
 * Writes out_dir/images/<id>_v<k>.png, out_dir/depth/<id>_v<k>.png (png16) and
 * out_dir/augment_log.csv. Outputs depend only on the inputs, never on thread count.
 */
AugmentSummary run_augment(const formats::DatasetManifest& manifest, const formats::VarianceStats& stats,
                           const offset_policy::OffsetPolicy& policy, const AugmentConfig& cfg,
                           const std::filesystem::path& out_dir);

inline constexpr const char* kAugmentLogHeader = "image_id,variant,dz_m,clipped_px";

std::string format_augment_log(const std::vector<AugmentLogRow>& rows);

}  // namespace depthjitter::pipeline
