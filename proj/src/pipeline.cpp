#include "depthjitter/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <optional>
#include <thread>
#include <unordered_map>

namespace depthjitter::pipeline {

namespace fs = std::filesystem;
using formats::EntryFailure;
using formats::ParamsSource;
using formats::PrecomputeRecord;

void parallel_for(std::size_t count, std::size_t threads, const std::function<void(std::size_t)>& fn) {
    const std::size_t workers = std::clamp<std::size_t>(threads, 1, std::max<std::size_t>(count, 1));
    if (workers == 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (std::size_t i = next.fetch_add(1); i < count; i = next.fetch_add(1)) fn(i);
        });
    }
}

namespace {

struct DecodedPair {
    ImageBuffer image;
    DepthMap depth;
};

DecodedPair decode_pair(const formats::ManifestEntry& entry, const DecodeSettings& decode) {
    DecodedPair pair{io::read_png_rgb(entry.image, decode.color_space), io::decode_depth(entry.depth, decode.depth)};
    require_same_size(pair.image, pair.depth);
    return pair;
}

std::string describe(const std::exception& e) {
    if (const auto* err = dynamic_cast<const Error*>(&e)) {
        return std::string(to_string(err->code())) + ": " + err->what();
    }
    return e.what();
}

double median_of(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

/// Per-value median over a non-empty set of parameter sets.
WaterParams median_params(const std::vector<WaterParams>& all) {
    Rgb B{}, beta{}, gamma{};
    for (std::size_t c = 0; c < 3; ++c) {
        std::vector<double> b, a, g;
        for (const auto& p : all) {
            b.push_back(p.veiling()[c]);
            a.push_back(p.attenuation()[c]);
            g.push_back(p.backscatter()[c]);
        }
        B[c] = median_of(std::move(b));
        beta[c] = median_of(std::move(a));
        gamma[c] = median_of(std::move(g));
    }
    return WaterParams(B, beta, gamma);
}

}  // namespace

PrecomputeResult run_precompute(const formats::DatasetManifest& manifest, const PrecomputeConfig& cfg) {
    cfg.decode.depth.validate();
    cfg.estimation.validate();

    struct Slot {
        std::optional<PrecomputeRecord> record;
        std::optional<estimation::FitReport> fit;
        std::optional<EntryFailure> failure;
    };
    const auto& entries = manifest.entries;
    std::vector<Slot> slots(entries.size());

    parallel_for(entries.size(), cfg.threads, [&](std::size_t i) {
        const auto& entry = entries[i];
        Slot& slot = slots[i];
        try {
            const DecodedPair pair = decode_pair(entry, cfg.decode);
            PrecomputeRecord rec;
            rec.image_id = entry.image_id;
            rec.depth_variance = offset_policy::compute_variance(pair.depth);
            const auto bounds = offset_policy::depth_bounds(pair.depth, cfg.robust_bounds);
            rec.z_min = bounds.min;
            rec.z_max = bounds.max;
            if (entry.params) {
                const auto sidecar = formats::read_params_sidecar(*entry.params);
                rec.params = sidecar.params;
                rec.params_source = ParamsSource::Loaded;
                rec.fit_residual = sidecar.residual;
                rec.fit_converged = sidecar.converged;
            } else {
                try {
                    auto report = estimation::estimate_params(pair.image, pair.depth, cfg.estimation);
                    rec.params = report.params;
                    rec.params_source = ParamsSource::Fitted;
                    rec.fit_residual = report.final_residual;
                    rec.fit_converged = report.converged;
                    slot.fit = std::move(report);
                } catch (const Error& e) {
                    rec.estimation_error = describe(e);
                }
            }
            slot.record = std::move(rec);
        } catch (const std::exception& e) {
            slot.failure = EntryFailure{entry.image_id, describe(e)};
        }
    });

    PrecomputeResult result;
    std::vector<WaterParams> produced;
    for (auto& slot : slots) {
        if (slot.record && slot.record->params) produced.push_back(*slot.record->params);
    }
    std::vector<double> variances;
    for (std::size_t i = 0; i < slots.size(); ++i) {
        Slot& slot = slots[i];
        if (slot.failure) {
            result.stats.failures.push_back(std::move(*slot.failure));
            continue;
        }
        PrecomputeRecord& rec = *slot.record;
        if (!rec.params && !produced.empty()) {
            rec.params = median_params(produced);
            rec.params_source = ParamsSource::DatasetMedian;
        }
        variances.push_back(rec.depth_variance);
        if (slot.fit) result.fits.emplace_back(rec.image_id, std::move(*slot.fit));
        result.stats.records.push_back(std::move(rec));
    }
    if (variances.empty()) {
        throw Error(ErrorCode::EmptyInput, "no manifest entry could be decoded; nothing to threshold");
    }
    result.stats.tau = offset_policy::compute_threshold(variances);
    for (auto& rec : result.stats.records) {
        rec.variance_class = offset_policy::classify(rec.depth_variance, result.stats.tau);
    }
    return result;
}

offset_policy::OffsetPolicy effective_policy(offset_policy::OffsetPolicy policy,
                                             const formats::VarianceStats& stats) {
    if (policy.mode == offset_policy::PolicyMode::Adaptive) policy.tau = stats.tau;
    policy.validate();
    return policy;
}

AugmentedPair augment_pair(const ImageBuffer& image, const DepthMap& depth,
                           const formats::PrecomputeRecord& record,
                           const offset_policy::OffsetPolicy& policy, const ClampPolicy& clamp,
                           std::uint64_t seed, std::size_t variant) {
    if (!record.params) {
        throw Error(ErrorCode::MissingRecord, "no water parameters recorded for '" + record.image_id + "'");
    }
    const auto cls = offset_policy::classify(record.depth_variance, policy.tau);
    const offset_policy::SeedSpec spec{seed, record.image_id, variant};
    const double dz = offset_policy::sample_offset(policy, cls, record.z_min, record.z_max, spec);
    return {uifm::depth_jitter(image, depth, *record.params, dz, clamp), dz};
}

std::string format_augment_log(const std::vector<AugmentLogRow>& rows) {
    std::string out = std::string(kAugmentLogHeader) + "\n";
    for (const auto& row : rows) {
        out += row.image_id + "," + std::to_string(row.variant) + "," + formats::format_double(row.dz) +
               "," + std::to_string(row.clipped_pixels) + "\n";
    }
    return out;
}

AugmentSummary run_augment(const formats::DatasetManifest& manifest, const formats::VarianceStats& stats,
                           const offset_policy::OffsetPolicy& policy_in, const AugmentConfig& cfg,
                           const fs::path& out_dir) {
    const auto policy = effective_policy(policy_in, stats);
    cfg.clamp.validate();
    cfg.decode.depth.validate();
    if (cfg.variants == 0) throw Error(ErrorCode::InvalidArgument, "variants must be >= 1");
    if (cfg.image_bit_depth != 8 && cfg.image_bit_depth != 16) {
        throw Error(ErrorCode::InvalidArgument, "image bit depth must be 8 or 16");
    }
    io::DepthDecodeSpec{io::DepthFormat::Png16, cfg.depth_out_scale, 0.0}.validate();

    const std::uint64_t calls_before = estimation::estimation_call_count();
    std::error_code ec;
    fs::create_directories(out_dir / "images", ec);
    fs::create_directories(out_dir / "depth", ec);
    if (ec) throw Error(ErrorCode::IoError, "cannot create output directories under " + out_dir.string());

    std::unordered_map<std::string, const PrecomputeRecord*> index;
    for (const auto& rec : stats.records) index.emplace(rec.image_id, &rec);

    struct Slot {
        std::vector<AugmentLogRow> rows;
        std::size_t saturated = 0;
        std::optional<EntryFailure> failure;
    };
    const auto& entries = manifest.entries;
    std::vector<Slot> slots(entries.size());

    parallel_for(entries.size(), cfg.threads, [&](std::size_t i) {
        const auto& entry = entries[i];
        Slot& slot = slots[i];
        try {
            const auto it = index.find(entry.image_id);
            if (it == index.end()) {
                throw Error(ErrorCode::MissingRecord, "no precompute record for '" + entry.image_id + "'");
            }
            const DecodedPair pair = decode_pair(entry, cfg.decode);
            for (std::size_t k = 0; k < cfg.variants; ++k) {
                const auto out = augment_pair(pair.image, pair.depth, *it->second, policy, cfg.clamp, cfg.seed, k);
                const std::string stem = entry.image_id + "_v" + std::to_string(k) + ".png";
                io::write_png_rgb(out_dir / "images" / stem, out.result.image, cfg.decode.color_space,
                                  cfg.image_bit_depth);
                slot.saturated += io::write_depth_png16(out_dir / "depth" / stem, out.result.depth,
                                                        cfg.depth_out_scale);
                slot.rows.push_back({entry.image_id, k, out.dz, out.result.clipped_pixels});
            }
        } catch (const std::exception& e) {
            slot.rows.clear();
            slot.failure = EntryFailure{entry.image_id, describe(e)};
        }
    });

    AugmentSummary summary;
    for (auto& slot : slots) {
        if (slot.failure) {
            summary.failures.push_back(std::move(*slot.failure));
            continue;
        }
        summary.written_pairs += slot.rows.size();
        summary.depth_saturated_pixels += slot.saturated;
        for (auto& row : slot.rows) summary.log.push_back(std::move(row));
    }
    formats::write_text(out_dir / "augment_log.csv", format_augment_log(summary.log));
    formats::write_text(out_dir / "depth" / "encoding.json",
                        "{\n  \"format\": \"png16\",\n  \"scale\": " + formats::format_double(cfg.depth_out_scale) +
                            ",\n  \"offset\": 0\n}\n");
    summary.estimation_calls = estimation::estimation_call_count() - calls_before;
    return summary;
}

}  // namespace depthjitter::pipeline
