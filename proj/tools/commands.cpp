#include "commands.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <optional>

#include <CLI11.hpp>

#include "depthjitter/formats.hpp"
#include "depthjitter/image_io.hpp"
#include "depthjitter/offset_policy.hpp"
#include "depthjitter/param_estimation.hpp"
#include "depthjitter/pipeline.hpp"
#include "depthjitter/uifm.hpp"

namespace depthjitter::cli {

namespace fs = std::filesystem;
using formats::format_double;

namespace {

struct GlobalOptions {
    std::uint64_t seed = 0;
    std::size_t threads = 1;
    bool linear = false;
    bool srgb = false;
    std::string clamp = "unit";
    double depth_floor = ClampPolicy::kDefaultDepthFloor;
    std::string depth_format = "png16";
    double depth_scale = 0.001;
    double depth_offset = 0.0;

    pipeline::DecodeSettings decode() const {
        pipeline::DecodeSettings d;
        d.color_space = linear ? io::ColorSpace::Linear : io::ColorSpace::Srgb;
        d.depth.format = depth_format == "tiff_f32" ? io::DepthFormat::TiffF32 : io::DepthFormat::Png16;
        d.depth.scale = depth_scale;
        d.depth.offset = depth_offset;
        return d;
    }

    ClampPolicy clamp_policy() const {
        return {clamp == "error" ? ClampMode::ErrorOnOverflow : ClampMode::ClampToUnit, depth_floor};
    }
};

struct EstimationOptions {
    std::size_t bins = 10;
    double dark_fraction = 0.02;
    int max_iterations = 200;
    double tolerance = 1e-8;
    double min_depth_spread = 0.0;

    estimation::EstimationConfig config() const {
        estimation::EstimationConfig cfg;
        cfg.n_bins = bins;
        cfg.dark_fraction = dark_fraction;
        cfg.max_iterations = max_iterations;
        cfg.step_tolerance = tolerance;
        cfg.min_depth_spread = min_depth_spread;
        return cfg;
    }
};

void add_estimation_flags(CLI::App* sub, EstimationOptions& o) {
    sub->add_option("--bins", o.bins, "Depth bins for the dark-pixel curve")
        ->capture_default_str()
        ->check(CLI::Range(std::size_t{4}, std::size_t{10000}));
    sub->add_option("--dark-fraction", o.dark_fraction, "Darkest fraction of each bin")
        ->capture_default_str()
        ->check(CLI::Range(1e-6, 0.1));
    sub->add_option("--max-iter", o.max_iterations, "Iteration cap of the backscatter solve")
        ->capture_default_str()
        ->check(CLI::Range(1, 100000));
    sub->add_option("--tol", o.tolerance, "Convergence tolerance on the parameter step")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    sub->add_option("--min-depth-spread", o.min_depth_spread, "Minimum depth range in meters")
        ->capture_default_str()
        ->check(CLI::NonNegativeNumber);
}

/// Usage-level failure detected after parsing; maps to exit code 2.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

WaterParams load_params(const std::string& path) { return formats::read_params_sidecar(path).params; }

// ---------------------------------------------------------------------------

struct EstimateOptions {
    std::string manifest;
    std::string out_dir;
    bool allow_unconverged = false;
    EstimationOptions est;
};

int cmd_estimate(const GlobalOptions& g, const EstimateOptions& o, std::ostream& out, std::ostream& err) {
    auto manifest = formats::load_manifest(o.manifest);
    if (manifest.entries.empty()) throw UsageError("manifest " + o.manifest + " has no entries");
    for (auto& e : manifest.entries) e.params.reset();

    pipeline::PrecomputeConfig cfg;
    cfg.decode = g.decode();
    cfg.estimation = o.est.config();
    cfg.threads = g.threads;

    std::error_code ec;
    fs::create_directories(o.out_dir, ec);
    if (ec) throw Error(ErrorCode::IoError, "cannot create " + o.out_dir);

    std::vector<formats::EntryFailure> failures;
    std::vector<std::pair<std::string, estimation::FitReport>> fits;
    try {
        auto result = pipeline::run_precompute(manifest, cfg);
        failures = std::move(result.stats.failures);
        for (const auto& rec : result.stats.records) {
            if (rec.estimation_error) failures.push_back({rec.image_id, *rec.estimation_error});
        }
        fits = std::move(result.fits);
    } catch (const Error& e) {
        if (e.code() != ErrorCode::EmptyInput) throw;
        // Every entry failed to decode; rerun per entry to name them.
        for (const auto& entry : manifest.entries) failures.push_back({entry.image_id, e.what()});
    }

    out << "image_id,converged,iterations,residual,B_r,B_g,B_b,beta_r,beta_g,beta_b,gamma_r,gamma_g,gamma_b\n";
    bool all_converged = true;
    for (const auto& [id, report] : fits) {
        formats::write_params_sidecar(fs::path(o.out_dir) / (id + ".params.json"),
                                      {id, report.params, report.final_residual, report.converged});
        const auto& p = report.params;
        out << id << "," << (report.converged ? "true" : "false") << "," << report.iterations << ","
            << format_double(report.final_residual);
        for (const Rgb* v : {&p.veiling(), &p.attenuation(), &p.backscatter()}) {
            for (double x : *v) out << "," << format_double(x);
        }
        out << "\n";
        all_converged &= report.converged;
        for (const auto& w : report.warnings) err << "warning: " << id << ": " << w << "\n";
    }
    for (const auto& f : failures) err << "FAILED " << f.image_id << ": " << f.error << "\n";
    err << "estimated " << fits.size() << " of " << manifest.entries.size() << " entries, "
        << failures.size() << " failed\n";

    if (!failures.empty()) return kPartialFailure;
    if (!all_converged && !o.allow_unconverged) {
        err << "some fits did not converge (use --allow-unconverged to accept)\n";
        return kPartialFailure;
    }
    return kSuccess;
}

// ---------------------------------------------------------------------------

struct StatsOptions {
    std::string manifest;
    std::string out;
    bool robust_bounds = false;
    std::size_t hist_bins = 10;
    EstimationOptions est;
};

int cmd_stats(const GlobalOptions& g, const StatsOptions& o, std::ostream& out, std::ostream& err) {
    const auto manifest = formats::load_manifest(o.manifest);
    if (manifest.entries.empty()) throw UsageError("manifest " + o.manifest + " has no entries");

    pipeline::PrecomputeConfig cfg;
    cfg.decode = g.decode();
    cfg.estimation = o.est.config();
    cfg.robust_bounds = o.robust_bounds;
    cfg.threads = g.threads;
    const auto result = pipeline::run_precompute(manifest, cfg);
    const auto& stats = result.stats;
    formats::write_stats(o.out, stats);

    out << "tau = " << format_double(stats.tau) << "\n";
    std::vector<double> variances;
    for (const auto& r : stats.records) variances.push_back(r.depth_variance);
    const auto [lo_it, hi_it] = std::minmax_element(variances.begin(), variances.end());
    const double lo = *lo_it;
    const double hi = *hi_it;
    const std::size_t nb = hi > lo ? o.hist_bins : 1;
    std::vector<std::size_t> counts(nb, 0);
    for (double v : variances) {
        const auto k = hi > lo ? std::min(nb - 1, static_cast<std::size_t>((v - lo) / (hi - lo) * static_cast<double>(nb)))
                               : std::size_t{0};
        ++counts[k];
    }
    out << "bin_lo,bin_hi,count\n";
    for (std::size_t k = 0; k < nb; ++k) {
        const double a = lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(nb);
        const double b = k + 1 == nb ? hi : lo + (hi - lo) * static_cast<double>(k + 1) / static_cast<double>(nb);
        out << format_double(a) << "," << format_double(b) << "," << counts[k] << "\n";
    }

    std::size_t estimation_failures = 0;
    for (const auto& r : stats.records) {
        if (r.estimation_error) {
            ++estimation_failures;
            err << "FAILED estimation " << r.image_id << ": " << *r.estimation_error << " (params: "
                << formats::to_string(r.params_source) << ")\n";
        }
    }
    for (const auto& f : stats.failures) err << "FAILED " << f.image_id << ": " << f.error << "\n";
    err << stats.records.size() << " records, " << stats.failures.size() << " entries skipped, "
        << estimation_failures << " estimation failures\n";
    return stats.failures.empty() && estimation_failures == 0 ? kSuccess : kPartialFailure;
}

// ---------------------------------------------------------------------------

struct AugmentOptions {
    std::string manifest;
    std::string stats;
    std::string out;
    std::string policy = "adaptive";
    double alpha = 0.5;
    double beta = 0.2;
    double lo = -4.0;
    double hi = 15.0;
    std::size_t variants = 1;
    int bit_depth = 8;
    double depth_out_scale = 0.001;
};

int cmd_augment(const GlobalOptions& g, const AugmentOptions& o, std::ostream& out, std::ostream& err) {
    const auto manifest = formats::load_manifest(o.manifest);
    if (manifest.entries.empty()) throw UsageError("manifest " + o.manifest + " has no entries");
    const auto stats = formats::read_stats(o.stats);

    offset_policy::OffsetPolicy policy;
    policy.mode = o.policy == "fixed" ? offset_policy::PolicyMode::FixedRange : offset_policy::PolicyMode::Adaptive;
    policy.alpha_scale = o.alpha;
    policy.beta_scale = o.beta;
    policy.range_lo = o.lo;
    policy.range_hi = o.hi;

    pipeline::AugmentConfig cfg;
    cfg.decode = g.decode();
    cfg.clamp = g.clamp_policy();
    cfg.seed = g.seed;
    cfg.threads = g.threads;
    cfg.variants = o.variants;
    cfg.image_bit_depth = o.bit_depth;
    cfg.depth_out_scale = o.depth_out_scale;
    const auto summary = pipeline::run_augment(manifest, stats, policy, cfg, o.out);

    for (const auto& f : summary.failures) err << "FAILED " << f.image_id << ": " << f.error << "\n";
    if (summary.depth_saturated_pixels > 0) {
        err << "warning: " << summary.depth_saturated_pixels
            << " depth pixels saturated the png16 range; raise --depth-out-scale\n";
    }
    out << "wrote " << summary.written_pairs << " pairs to " << o.out << " (" << summary.failures.size()
        << " entries failed)\n";
    return summary.failures.empty() ? kSuccess : kPartialFailure;
}

// ---------------------------------------------------------------------------

struct PairOptions {
    std::string image;
    std::string depth;
    std::string params;
    std::string out;
    std::string out_depth;
    double dz = 0.0;
    int bit_depth = 8;
    double depth_out_scale = 0.001;
};

struct LoadedPair {
    ImageBuffer image;
    DepthMap depth;
};

LoadedPair load_pair(const GlobalOptions& g, const PairOptions& o) {
    const auto decode = g.decode();
    LoadedPair pair{io::read_png_rgb(o.image, decode.color_space), io::decode_depth(o.depth, decode.depth)};
    require_same_size(pair.image, pair.depth);
    return pair;
}

int cmd_jitter(const GlobalOptions& g, const PairOptions& o, std::ostream& out, std::ostream& err) {
    const auto params = load_params(o.params);
    const auto pair = load_pair(g, o);
    const auto result = uifm::depth_jitter(pair.image, pair.depth, params, o.dz, g.clamp_policy());

    const auto space = g.decode().color_space;
    io::write_png_rgb(o.out, result.image, space, o.bit_depth);
    fs::path depth_out = o.out_depth;
    if (depth_out.empty()) {
        depth_out = fs::path(o.out).parent_path() / (fs::path(o.out).stem().string() + "_depth.png");
    }
    const auto saturated = io::write_depth_png16(depth_out, result.depth, o.depth_out_scale);
    err << "clipped_px=" << result.clipped_pixels << " floored_px=" << result.floored_pixels
        << " clamped_px=" << result.clamped_pixels << "\n";
    if (saturated > 0) err << "warning: " << saturated << " depth pixels saturated the png16 range\n";
    out << "dz_m=" << format_double(o.dz) << " image=" << o.out << " depth=" << depth_out.string() << "\n";
    return kSuccess;
}

int cmd_restore(const GlobalOptions& g, const PairOptions& o, std::ostream& out, std::ostream& err) {
    const auto params = load_params(o.params);
    const auto pair = load_pair(g, o);
    const auto restored = uifm::restore(pair.image, pair.depth, params, g.clamp_policy());
    io::write_png_rgb(o.out, restored, g.decode().color_space, o.bit_depth);
    (void)err;
    out << "image=" << o.out << "\n";
    return kSuccess;
}

// ---------------------------------------------------------------------------

struct ProfileOptions {
    std::string params;
    std::vector<double> j0;
    double z_lo = 0.0;
    double z_hi = 20.0;
    std::size_t samples = 101;
    std::string out;
};

int cmd_profile(const ProfileOptions& o, std::ostream& out) {
    const auto params = load_params(o.params);
    Rgb radiance{};
    if (o.j0.size() == 1) {
        radiance.fill(o.j0[0]);
    } else if (o.j0.size() == 3) {
        std::copy(o.j0.begin(), o.j0.end(), radiance.begin());
    } else {
        throw UsageError("--j0 takes 1 or 3 values");
    }
    if (o.z_lo > o.z_hi) throw UsageError("--z-lo must be <= --z-hi");
    const auto rows = uifm::intensity_profile(params, radiance, o.z_lo, o.z_hi, o.samples);

    std::string csv = "z_m,I_r,I_g,I_b\n";
    for (const auto& row : rows) {
        csv += format_double(row.depth) + "," + format_double(row.intensity[0]) + "," +
               format_double(row.intensity[1]) + "," + format_double(row.intensity[2]) + "\n";
    }
    if (o.out.empty()) {
        out << csv;
    } else {
        formats::write_text(o.out, csv);
    }
    return kSuccess;
}

/// Errors that mean the inputs themselves were unusable.
bool is_usage_error(ErrorCode code) {
    switch (code) {
        case ErrorCode::InvalidArgument:
        case ErrorCode::DimensionMismatch:
        case ErrorCode::DecodeError:
        case ErrorCode::EmptyInput:
            return true;
        default:
            return false;
    }
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Depth-aware underwater image augmentation"};
    app.name("depthjitter");
    app.require_subcommand(1);
    app.set_config("--config", "", "Read options from a TOML/INI file (flags take precedence)");

    GlobalOptions g;
    app.add_option("--seed", g.seed, "Global seed for offset sampling")->capture_default_str();
    app.add_option("--threads", g.threads, "Worker threads")
        ->capture_default_str()
        ->check(CLI::Range(std::size_t{1}, std::size_t{1024}));
    auto* linear_flag = app.add_flag("--linear", g.linear, "Image files hold linear-light values");
    auto* srgb_flag = app.add_flag("--srgb", g.srgb, "Image files are sRGB encoded (default)");
    linear_flag->excludes(srgb_flag);
    app.add_option("--clamp", g.clamp, "Out-of-range intensities: clamp to [0,1] or fail")
        ->capture_default_str()
        ->check(CLI::IsMember({"unit", "error"}));
    app.add_option("--depth-floor", g.depth_floor, "Minimum modified depth in meters")
        ->capture_default_str()
        ->check(CLI::NonNegativeNumber);
    app.add_option("--depth-format", g.depth_format, "Depth file format")
        ->capture_default_str()
        ->check(CLI::IsMember({"png16", "tiff_f32"}));
    app.add_option("--depth-scale", g.depth_scale, "Meters per stored depth unit")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    app.add_option("--depth-offset", g.depth_offset, "Meters added to decoded depth")->capture_default_str();

    EstimateOptions est_o;
    auto* estimate = app.add_subcommand("estimate", "Fit water parameters per image and write sidecars");
    estimate->add_option("--manifest", est_o.manifest, "JSON-lines manifest")->required()->check(CLI::ExistingFile);
    estimate->add_option("--out-dir", est_o.out_dir, "Directory for <id>.params.json sidecars")->required();
    estimate->add_flag("--allow-unconverged", est_o.allow_unconverged, "Exit 0 even if some fits did not converge");
    add_estimation_flags(estimate, est_o.est);

    StatsOptions stats_o;
    auto* stats = app.add_subcommand("stats", "Precompute variances, bounds, parameters and tau");
    stats->add_option("--manifest", stats_o.manifest, "JSON-lines manifest")->required()->check(CLI::ExistingFile);
    stats->add_option("--out", stats_o.out, "Stats file to write")->required();
    stats->add_flag("--robust-bounds", stats_o.robust_bounds, "Use 1st/99th depth percentiles as bounds");
    stats->add_option("--hist-bins", stats_o.hist_bins, "Variance histogram bins")
        ->capture_default_str()
        ->check(CLI::Range(std::size_t{1}, std::size_t{10000}));
    add_estimation_flags(stats, stats_o.est);

    AugmentOptions aug_o;
    auto* augment = app.add_subcommand("augment", "Re-render every manifest entry with sampled offsets");
    augment->add_option("--manifest", aug_o.manifest, "JSON-lines manifest")->required()->check(CLI::ExistingFile);
    augment->add_option("--stats", aug_o.stats, "Stats file from `stats`")->required()->check(CLI::ExistingFile);
    augment->add_option("--out", aug_o.out, "Output directory")->required();
    augment->add_option("--policy", aug_o.policy, "Offset policy")
        ->capture_default_str()
        ->check(CLI::IsMember({"adaptive", "fixed"}));
    auto* alpha = augment->add_option("--alpha", aug_o.alpha, "Adaptive: scale on the minimum depth")
                      ->capture_default_str()
                      ->check(CLI::NonNegativeNumber);
    auto* beta = augment->add_option("--beta", aug_o.beta, "Adaptive: scale on the maximum depth")
                     ->capture_default_str()
                     ->check(CLI::NonNegativeNumber);
    auto* lo = augment->add_option("--lo", aug_o.lo, "Fixed: lower offset bound in meters")->capture_default_str();
    auto* hi = augment->add_option("--hi", aug_o.hi, "Fixed: upper offset bound in meters")->capture_default_str();
    augment->add_option("--variants", aug_o.variants, "Variants per image")
        ->capture_default_str()
        ->check(CLI::Range(std::size_t{1}, std::size_t{100000}));
    augment->add_option("--bit-depth", aug_o.bit_depth, "Output PNG bits per channel")
        ->capture_default_str()
        ->check(CLI::IsMember({8, 16}));
    augment->add_option("--depth-out-scale", aug_o.depth_out_scale, "Meters per unit in output depth PNGs")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);

    PairOptions jit_o;
    auto* jitter = app.add_subcommand("jitter", "Re-render one image at a given depth offset");
    jitter->add_option("--image", jit_o.image, "RGB PNG")->required()->check(CLI::ExistingFile);
    jitter->add_option("--depth", jit_o.depth, "Depth map")->required()->check(CLI::ExistingFile);
    jitter->add_option("--params", jit_o.params, "Params sidecar JSON")->required()->check(CLI::ExistingFile);
    jitter->add_option("--dz", jit_o.dz, "Depth offset in meters")->required();
    jitter->add_option("--out", jit_o.out, "Output image PNG")->required();
    jitter->add_option("--out-depth", jit_o.out_depth, "Output depth PNG (default <out>_depth.png)");
    jitter->add_option("--bit-depth", jit_o.bit_depth, "Output PNG bits per channel")
        ->capture_default_str()
        ->check(CLI::IsMember({8, 16}));
    jitter->add_option("--depth-out-scale", jit_o.depth_out_scale, "Meters per unit in the output depth PNG")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);

    ProfileOptions prof_o;
    auto* profile = app.add_subcommand("profile", "Tabulate intensity against depth as CSV");
    profile->add_option("--params", prof_o.params, "Params sidecar JSON")->required()->check(CLI::ExistingFile);
    profile->add_option("--j0", prof_o.j0, "Scene radiance: one value or r,g,b")
        ->required()
        ->delimiter(',')
        ->check(CLI::Range(0.0, 1.0));
    profile->add_option("--z-lo", prof_o.z_lo, "First depth in meters")->capture_default_str()->check(CLI::NonNegativeNumber);
    profile->add_option("--z-hi", prof_o.z_hi, "Last depth in meters")->capture_default_str()->check(CLI::NonNegativeNumber);
    profile->add_option("-n,--samples", prof_o.samples, "Number of depths")
        ->capture_default_str()
        ->check(CLI::Range(std::size_t{2}, std::size_t{10000000}));
    profile->add_option("--out", prof_o.out, "CSV file (default stdout)");

    PairOptions res_o;
    auto* restore = app.add_subcommand("restore", "Recover scene radiance from an observed image");
    restore->add_option("--image", res_o.image, "RGB PNG")->required()->check(CLI::ExistingFile);
    restore->add_option("--depth", res_o.depth, "Depth map")->required()->check(CLI::ExistingFile);
    restore->add_option("--params", res_o.params, "Params sidecar JSON")->required()->check(CLI::ExistingFile);
    restore->add_option("--out", res_o.out, "Output image PNG")->required();
    restore->add_option("--bit-depth", res_o.bit_depth, "Output PNG bits per channel")
        ->capture_default_str()
        ->check(CLI::IsMember({8, 16}));

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err) == static_cast<int>(CLI::ExitCodes::Success) ? kSuccess : kUsageError;
    }

    try {
        if (*augment) {
            if (aug_o.policy == "adaptive" && (lo->count() > 0 || hi->count() > 0)) {
                throw UsageError("--lo/--hi only apply to --policy fixed");
            }
            if (aug_o.policy == "fixed" && (alpha->count() > 0 || beta->count() > 0)) {
                throw UsageError("--alpha/--beta only apply to --policy adaptive");
            }
            if (!std::isfinite(aug_o.lo) || !std::isfinite(aug_o.hi) || aug_o.lo > aug_o.hi) {
                throw UsageError("--lo must be <= --hi");
            }
            return cmd_augment(g, aug_o, out, err);
        }
        if (*estimate) return cmd_estimate(g, est_o, out, err);
        if (*stats) return cmd_stats(g, stats_o, out, err);
        if (*jitter) {
            if (!std::isfinite(jit_o.dz)) throw UsageError("--dz must be finite");
            return cmd_jitter(g, jit_o, out, err);
        }
        if (*restore) return cmd_restore(g, res_o, out, err);
        if (*profile) return cmd_profile(prof_o, out);
    } catch (const UsageError& e) {
        err << "error: " << e.what() << "\n";
        return kUsageError;
    } catch (const Error& e) {
        err << "error: " << to_string(e.code()) << ": " << e.what() << "\n";
        return is_usage_error(e.code()) ? kUsageError : kPartialFailure;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kPartialFailure;
    }
    return kUsageError;
}

}  // namespace depthjitter::cli
