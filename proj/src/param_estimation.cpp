#include "depthjitter/param_estimation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <numbers>
#include <utility>

#include "depthjitter/offset_policy.hpp"
#include "depthjitter/uifm.hpp"

namespace depthjitter::estimation {

namespace {

constexpr std::size_t kC = ImageBuffer::kChannels;
constexpr const char* kChannelNames[] = {"R", "G", "B"};

std::atomic<std::uint64_t> g_estimation_calls{0};

void count_call() { g_estimation_calls.fetch_add(1, std::memory_order_relaxed); }

std::size_t resolve_min_bin_pixels(std::size_t requested, double dark_fraction) {
    if (requested > 0) return requested;
    return std::max<std::size_t>(10, static_cast<std::size_t>(std::ceil(1.0 / dark_fraction)));
}

// ---------------------------------------------------------------------------
// Backscatter curve solve on (u, v) with B = sigmoid(u), gamma = exp(v).

constexpr double kMaxLogit = 30.0;
const double kMinLogGamma = std::log(1e-5);
const double kMaxLogGamma = std::log(50.0);

struct CurvePoint {
    double depth;
    double value;
};

struct CurveSolve {
    double u = 0.0;
    double v = 0.0;
    double cost = 0.0;
    int iterations = 0;
    bool converged = false;
    // Normal matrix at the solution, for identifiability diagnostics.
    double a00 = 0.0, a01 = 0.0, a11 = 0.0;
};

double sigmoid(double u) { return 1.0 / (1.0 + std::exp(-u)); }

double logit(double b) { return std::log(b / (1.0 - b)); }

double curve_cost(const std::vector<CurvePoint>& pts, double u, double v) {
    const double B = sigmoid(u);
    const double g = std::exp(v);
    double cost = 0.0;
    for (const auto& p : pts) {
        const double r = p.value - B * (1.0 - std::exp(-g * p.depth));
        cost += r * r;
    }
    return cost;
}

void clamp_params(double& u, double& v) {
    u = std::clamp(u, -kMaxLogit, kMaxLogit);
    v = std::clamp(v, kMinLogGamma, kMaxLogGamma);
}

CurveSolve solve_curve(const std::vector<CurvePoint>& pts, double b0, double g0,
                       const EstimationConfig& cfg) {
    CurveSolve s;
    s.u = logit(std::clamp(b0, 1e-3, 0.999));
    s.v = std::log(std::max(g0, 1e-5));
    clamp_params(s.u, s.v);
    s.cost = curve_cost(pts, s.u, s.v);

    double lambda = 1e-3;
    for (s.iterations = 0; s.iterations < cfg.max_iterations; ++s.iterations) {
        const double B = sigmoid(s.u);
        const double g = std::exp(s.v);
        double a00 = 0.0, a01 = 0.0, a11 = 0.0, g0v = 0.0, g1v = 0.0;
        for (const auto& p : pts) {
            const double e = std::exp(-g * p.depth);
            const double r = p.value - B * (1.0 - e);
            const double du = B * (1.0 - B) * (1.0 - e);
            const double dv = B * p.depth * e * g;
            a00 += du * du;
            a01 += du * dv;
            a11 += dv * dv;
            g0v += du * r;
            g1v += dv * r;
        }
        s.a00 = a00;
        s.a01 = a01;
        s.a11 = a11;
        if (s.cost <= 1e-30) {
            s.converged = true;
            break;
        }

        bool accepted = false;
        while (!accepted) {
            const double m00 = a00 * (1.0 + lambda) + 1e-300;
            const double m11 = a11 * (1.0 + lambda) + 1e-300;
            const double det = m00 * m11 - a01 * a01;
            if (!(std::abs(det) > 0.0) || !std::isfinite(det)) {
                lambda *= 10.0;
                if (lambda > 1e12) break;
                continue;
            }
            double du = (m11 * g0v - a01 * g1v) / det;
            double dv = (m00 * g1v - a01 * g0v) / det;
            double nu = s.u + du;
            double nv = s.v + dv;
            clamp_params(nu, nv);
            const double trial = curve_cost(pts, nu, nv);
            if (trial < s.cost) {
                const double step = std::max(std::abs(nu - s.u), std::abs(nv - s.v));
                s.u = nu;
                s.v = nv;
                s.cost = trial;
                lambda = std::max(lambda * 0.1, 1e-12);
                accepted = true;
                if (step < cfg.step_tolerance) s.converged = true;
            } else {
                lambda *= 10.0;
                if (lambda > 1e12) break;
            }
        }
        // No descent direction left: the current point is a minimum up to rounding.
        if (!accepted) s.converged = true;
        if (s.converged) {
            ++s.iterations;
            break;
        }
    }
    return s;
}

// ---------------------------------------------------------------------------
// Log-linear regression with outlier trimming.

struct LineFit {
    bool defined = false;
    double slope = 0.0;
    double intercept = 0.0;
    double rms = 0.0;
};

LineFit fit_line(const std::vector<double>& xs, const std::vector<double>& ys,
                 const std::vector<char>& keep) {
    double n = 0.0, mean_x = 0.0, mean_y = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (!keep[i]) continue;
        n += 1.0;
        mean_x += xs[i];
        mean_y += ys[i];
    }
    LineFit line;
    if (n < 2.0) return line;
    mean_x /= n;
    mean_y /= n;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (!keep[i]) continue;
        sxx += (xs[i] - mean_x) * (xs[i] - mean_x);
        sxy += (xs[i] - mean_x) * (ys[i] - mean_y);
    }
    if (!(sxx > 0.0)) return line;
    line.defined = true;
    line.slope = sxy / sxx;
    line.intercept = mean_y - line.slope * mean_x;
    double sq = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (!keep[i]) continue;
        const double r = ys[i] - (line.intercept + line.slope * xs[i]);
        sq += r * r;
    }
    line.rms = std::sqrt(sq / n);
    return line;
}

// Pixels whose log signal sits far below the line (residual shadow pixels the
// backscatter fit did not fully explain) would drag the slope; they are dropped
// when more than kTrimSigmas robust deviations from the median residual.
constexpr double kTrimSigmas = 3.5;
constexpr int kTrimRounds = 3;

LineFit fit_line_trimmed(const std::vector<double>& xs, const std::vector<double>& ys) {
    std::vector<char> keep(xs.size(), 1);
    LineFit line = fit_line(xs, ys, keep);
    std::vector<double> res(xs.size());
    std::vector<double> work;
    for (int round = 0; round < kTrimRounds && line.defined; ++round) {
        for (std::size_t i = 0; i < xs.size(); ++i) res[i] = ys[i] - (line.intercept + line.slope * xs[i]);
        work.assign(res.begin(), res.end());
        const auto mid = work.begin() + static_cast<std::ptrdiff_t>(work.size() / 2);
        std::nth_element(work.begin(), mid, work.end());
        const double median = *mid;
        for (auto& w : work) w = std::abs(w - median);
        std::nth_element(work.begin(), mid, work.end());
        const double scale = 1.4826 * *mid;
        if (!(scale > 0.0)) break;

        bool changed = false;
        for (std::size_t i = 0; i < xs.size(); ++i) {
            const char k = std::abs(res[i] - median) <= kTrimSigmas * scale;
            changed |= (k != keep[i]);
            keep[i] = k;
        }
        if (!changed) break;
        const LineFit refit = fit_line(xs, ys, keep);
        if (!refit.defined) break;
        line = refit;
    }
    return line;
}

}  // namespace

void EstimationConfig::validate() const {
    if (n_bins < 4) throw Error(ErrorCode::InvalidArgument, "n_bins must be at least 4");
    if (!(dark_fraction > 0.0 && dark_fraction <= 0.1)) {
        throw Error(ErrorCode::InvalidArgument, "dark_fraction must lie in (0, 0.1]");
    }
    if (!(log_floor > 0.0) || !std::isfinite(log_floor)) {
        throw Error(ErrorCode::InvalidArgument, "log floor must be positive");
    }
    if (max_iterations < 1) throw Error(ErrorCode::InvalidArgument, "iteration cap must be >= 1");
    if (!(step_tolerance > 0.0)) throw Error(ErrorCode::InvalidArgument, "step tolerance must be positive");
    if (!(min_depth_spread >= 0.0)) throw Error(ErrorCode::InvalidArgument, "min depth spread must be >= 0");
    if (residual_samples == 0) throw Error(ErrorCode::InvalidArgument, "residual_samples must be >= 1");
}

std::size_t DepthBinStats::used_bins() const {
    return static_cast<std::size_t>(
        std::count_if(bins.begin(), bins.end(), [](const DepthBin& b) { return b.used; }));
}

std::uint64_t estimation_call_count() { return g_estimation_calls.load(std::memory_order_relaxed); }

DepthBinStats bin_dark_pixels(const ImageBuffer& observed, const DepthMap& depth,
                              std::size_t n_bins, double dark_fraction,
                              std::size_t min_bin_pixels) {
    count_call();
    require_same_size(observed, depth);
    validate_depth(depth);
    if (n_bins < 4) throw Error(ErrorCode::InvalidArgument, "n_bins must be at least 4");
    if (!(dark_fraction > 0.0 && dark_fraction <= 0.1)) {
        throw Error(ErrorCode::InvalidArgument, "dark_fraction must lie in (0, 0.1]");
    }
    const std::size_t min_pixels = resolve_min_bin_pixels(min_bin_pixels, dark_fraction);

    const auto z = depth.data();
    const auto [zmin_it, zmax_it] = std::minmax_element(z.begin(), z.end());
    const double zmin = *zmin_it;
    const double zmax = *zmax_it;
    const double width = (zmax - zmin) / static_cast<double>(n_bins);
    if (!(width > 0.0) || width <= 1e-12 * std::max(1.0, zmax)) {
        throw Error(ErrorCode::InsufficientBins,
                    "fewer than 4 usable depth bins: depth range is too narrow to fit");
    }

    DepthBinStats stats;
    stats.edges.resize(n_bins + 1);
    for (std::size_t k = 0; k < n_bins; ++k) stats.edges[k] = zmin + width * static_cast<double>(k);
    stats.edges[n_bins] = zmax;
    stats.bins.resize(n_bins);

    std::vector<std::vector<std::size_t>> members(n_bins);
    for (std::size_t p = 0; p < z.size(); ++p) {
        const auto k = std::min(n_bins - 1, static_cast<std::size_t>((z[p] - zmin) / width));
        members[k].push_back(p);
    }

    const auto pixels = observed.data();
    std::vector<std::pair<double, double>> samples;
    for (std::size_t k = 0; k < n_bins; ++k) {
        DepthBin& bin = stats.bins[k];
        bin.lo = stats.edges[k];
        bin.hi = stats.edges[k + 1];
        bin.pixel_count = members[k].size();
        bin.mean_log_residual.fill(std::numeric_limits<double>::quiet_NaN());
        if (bin.pixel_count < min_pixels) continue;
        bin.used = true;

        const auto n = static_cast<double>(bin.pixel_count);
        const auto take = std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(dark_fraction * n)));
        for (std::size_t c = 0; c < kC; ++c) {
            samples.clear();
            for (std::size_t p : members[k]) samples.emplace_back(pixels[p * kC + c], z[p]);
            std::nth_element(samples.begin(), samples.begin() + static_cast<std::ptrdiff_t>(take - 1),
                             samples.end());
            double value_sum = 0.0;
            double depth_sum = 0.0;
            for (std::size_t i = 0; i < take; ++i) {
                value_sum += samples[i].first;
                depth_sum += samples[i].second;
            }
            bin.dark_value[c] = value_sum / static_cast<double>(take);
            bin.dark_depth[c] = depth_sum / static_cast<double>(take);
        }
    }

    if (stats.used_bins() < 4) {
        throw Error(ErrorCode::InsufficientBins,
                    "fewer than 4 usable depth bins (" + std::to_string(stats.used_bins()) +
                        " bins hold at least " + std::to_string(min_pixels) + " pixels)");
    }
    return stats;
}

BackscatterFit fit_backscatter(const DepthBinStats& stats, const std::optional<WaterParams>& init,
                               const EstimationConfig& cfg) {
    count_call();
    cfg.validate();
    if (stats.used_bins() < 4) {
        throw Error(ErrorCode::InsufficientBins, "backscatter fit needs at least 4 usable bins");
    }

    const DepthBin* farthest = nullptr;
    for (const auto& bin : stats.bins) {
        if (bin.used) farthest = &bin;
    }

    BackscatterFit fit;
    for (std::size_t c = 0; c < kC; ++c) {
        std::vector<CurvePoint> pts;
        double min_depth = std::numeric_limits<double>::infinity();
        for (const auto& bin : stats.bins) {
            if (!bin.used) continue;
            pts.push_back({bin.dark_depth[c], bin.dark_value[c]});
            min_depth = std::min(min_depth, bin.dark_depth[c]);
        }

        const double b0 = init ? init->veiling()[c] : farthest->dark_value[c];
        const double g0 = init ? init->backscatter()[c] : 0.1;

        // The primary start goes first; extra gamma starts guard against a
        // poor basin when the data barely curve.
        const double starts[] = {g0, 0.02, 0.05, 0.3, 1.0};
        CurveSolve best = solve_curve(pts, b0, starts[0], cfg);
        for (std::size_t i = 1; i < std::size(starts); ++i) {
            CurveSolve trial = solve_curve(pts, b0, starts[i], cfg);
            const bool better_state = trial.converged && !best.converged;
            if (better_state || (trial.converged == best.converged && trial.cost < best.cost * (1.0 - 1e-9))) {
                best = trial;
            }
        }

        fit.veiling[c] = sigmoid(best.u);
        fit.backscatter[c] = std::exp(best.v);
        fit.residual[c] = std::sqrt(best.cost / static_cast<double>(pts.size()));
        fit.iterations[c] = best.iterations;
        fit.converged[c] = best.converged;

        const double corr_den = std::sqrt(best.a00 * best.a11);
        const bool collinear = corr_den <= 0.0 || std::abs(best.a01) / corr_den > 1.0 - 1e-10;
        const bool saturated = fit.backscatter[c] * min_depth > 6.0;
        const bool at_bound = best.v >= kMaxLogGamma - 1e-9 || best.v <= kMinLogGamma + 1e-9;
        fit.backscatter_identified[c] = !(collinear || saturated || at_bound);
    }
    return fit;
}

AttenuationFit fit_attenuation(const ImageBuffer& observed, const DepthMap& depth,
                               const Rgb& veiling, const Rgb& backscatter,
                               const EstimationConfig& cfg) {
    count_call();
    cfg.validate();
    require_same_size(observed, depth);
    validate_depth(depth);

    const auto z = depth.data();
    const auto [zmin_it, zmax_it] = std::minmax_element(z.begin(), z.end());
    if (*zmin_it == *zmax_it) {
        throw Error(ErrorCode::DegenerateDepth, "attenuation regression undefined: zero depth spread");
    }

    const auto pixels = observed.data();
    const std::size_t n = z.size();
    AttenuationFit fit;
    std::vector<double> xs;
    std::vector<double> ys;
    xs.reserve(n);
    ys.reserve(n);
    for (std::size_t c = 0; c < kC; ++c) {
        xs.clear();
        ys.clear();
        for (std::size_t p = 0; p < n; ++p) {
            const double signal =
                pixels[p * kC + c] - veiling[c] * (1.0 - std::exp(-backscatter[c] * z[p]));
            if (signal > cfg.log_floor) {
                xs.push_back(z[p]);
                ys.push_back(std::log(std::max(signal, cfg.log_floor)));
            }
        }
        fit.valid_pixels[c] = xs.size();
        if (2 * xs.size() < n) {
            throw Error(ErrorCode::InsufficientPixels,
                        std::string("backscatter-subtracted signal is positive for fewer than half "
                                    "of the pixels in channel ") + kChannelNames[c]);
        }

        const LineFit line = fit_line_trimmed(xs, ys);
        if (!line.defined) {
            throw Error(ErrorCode::DegenerateDepth,
                        std::string("attenuation regression undefined: valid pixels of channel ") +
                            kChannelNames[c] + " share one depth");
        }
        const double slope = line.slope;
        fit.residual[c] = line.rms;
        fit.slope_positive[c] = -slope > kMinFittedAttenuation;
        fit.attenuation[c] = std::max(-slope, kMinFittedAttenuation);
    }
    return fit;
}

FitReport estimate_params(const ImageBuffer& observed, const DepthMap& depth,
                          const EstimationConfig& cfg) {
    count_call();
    cfg.validate();
    require_same_size(observed, depth);
    validate_depth(depth);
    for (double v : observed.data()) {
        if (!std::isfinite(v)) throw Error(ErrorCode::NonFinite, "image contains a non-finite value");
    }
    const auto z = depth.data();
    const auto [zmin_it, zmax_it] = std::minmax_element(z.begin(), z.end());
    if (*zmax_it - *zmin_it < cfg.min_depth_spread) {
        throw Error(ErrorCode::DegenerateDepth, "depth spread is below the configured minimum");
    }

    DepthBinStats bins = bin_dark_pixels(observed, depth, cfg.n_bins, cfg.dark_fraction, cfg.min_bin_pixels);
    BackscatterFit bs = fit_backscatter(bins, std::nullopt, cfg);
    AttenuationFit at = fit_attenuation(observed, depth, bs.veiling, bs.backscatter, cfg);

    FitReport report{.params = WaterParams(bs.veiling, at.attenuation, bs.backscatter)};

    const auto pixels = observed.data();
    const auto& B = bs.veiling;
    const auto& gamma = bs.backscatter;
    const auto& beta = at.attenuation;

    // Per-bin mean log signal, for diagnostics.
    {
        const std::size_t n_bins = bins.bins.size();
        const double zmin = bins.edges.front();
        const double bin_width = (bins.edges.back() - zmin) / static_cast<double>(n_bins);
        std::vector<Rgb> sum(n_bins, Rgb{});
        std::vector<std::array<std::size_t, 3>> count(n_bins, std::array<std::size_t, 3>{});
        for (std::size_t p = 0; p < z.size(); ++p) {
            const auto k = std::min(n_bins - 1, static_cast<std::size_t>((z[p] - zmin) / bin_width));
            for (std::size_t c = 0; c < kC; ++c) {
                const double signal = pixels[p * kC + c] - B[c] * (1.0 - std::exp(-gamma[c] * z[p]));
                if (signal > cfg.log_floor) {
                    sum[k][c] += std::log(signal);
                    ++count[k][c];
                }
            }
        }
        for (std::size_t k = 0; k < n_bins; ++k) {
            for (std::size_t c = 0; c < kC; ++c) {
                if (count[k][c] > 0) {
                    bins.bins[k].mean_log_residual[c] = sum[k][c] / static_cast<double>(count[k][c]);
                }
            }
        }
    }

    // The restored radiance is clamped into [0,1] and re-rendered; in the
    // stable form that is b + clamp(I - b, 0, e^(-beta z)).
    const std::size_t stride = (z.size() + cfg.residual_samples - 1) / cfg.residual_samples;
    double sq = 0.0;
    std::size_t count = 0;
    for (std::size_t p = 0; p < z.size(); p += stride) {
        for (std::size_t c = 0; c < kC; ++c) {
            const double signal = pixels[p * kC + c] - B[c] * (1.0 - std::exp(-gamma[c] * z[p]));
            const double explained = std::clamp(signal, 0.0, std::exp(-beta[c] * z[p]));
            sq += (signal - explained) * (signal - explained);
            ++count;
        }
    }
    report.final_residual = std::sqrt(sq / static_cast<double>(count));

    auto rms3 = [](const Rgb& v) { return std::sqrt((v[0] * v[0] + v[1] * v[1] + v[2] * v[2]) / 3.0); };
    report.backscatter_residual = rms3(bs.residual);
    report.attenuation_residual = rms3(at.residual);
    report.iterations = *std::max_element(bs.iterations.begin(), bs.iterations.end());
    report.converged = true;
    for (std::size_t c = 0; c < kC; ++c) {
        const std::string ch = kChannelNames[c];
        if (!bs.converged[c]) {
            report.converged = false;
            report.warnings.push_back("backscatter fit for channel " + ch + " hit the iteration cap");
        }
        if (!bs.backscatter_identified[c]) {
            report.warnings.push_back("backscatter coefficient for channel " + ch + " is weakly identified");
        }
        if (!at.slope_positive[c]) {
            report.converged = false;
            report.warnings.push_back("attenuation slope for channel " + ch +
                                      " is not negative; beta floored");
        }
    }
    report.backscatter = bs;
    report.attenuation = at;
    report.bins = std::move(bins);
    return report;
}

SyntheticScene generate_synthetic(const WaterParams& params, const SyntheticSpec& spec) {
    if (spec.width == 0 || spec.height == 0) {
        throw Error(ErrorCode::InvalidArgument, "synthetic scene needs a non-empty size");
    }
    const auto& dspec = spec.depth;
    if (!std::isfinite(dspec.near) || !std::isfinite(dspec.far) || dspec.near < 0.0 ||
        dspec.far < dspec.near) {
        throw Error(ErrorCode::InvalidArgument, "synthetic depth range must satisfy 0 <= near <= far");
    }
    const std::size_t w = spec.width;
    const std::size_t h = spec.height;

    DepthMap depth(w, h);
    const double span = dspec.far - dspec.near;
    for (std::size_t y = 0; y < h; ++y) {
        const double ty = h > 1 ? static_cast<double>(y) / static_cast<double>(h - 1) : 0.0;
        for (std::size_t x = 0; x < w; ++x) {
            double t = 0.0;
            switch (dspec.kind) {
                case DepthFieldSpec::Kind::RowRamp:
                    t = ty;
                    break;
                case DepthFieldSpec::Kind::Constant:
                    t = 0.0;
                    break;
                case DepthFieldSpec::Kind::Terrain: {
                    const double tx = w > 1 ? static_cast<double>(x) / static_cast<double>(w - 1) : 0.0;
                    const double ripple = 0.5 + 0.5 * std::sin(2.0 * std::numbers::pi * 1.5 * tx) *
                                                    std::cos(std::numbers::pi * ty);
                    t = std::clamp(0.8 * ty + 0.2 * ripple, 0.0, 1.0);
                    break;
                }
            }
            depth.at(x, y) = dspec.kind == DepthFieldSpec::Kind::RowRamp && y + 1 == h
                                 ? dspec.far
                                 : dspec.near + span * t;
        }
    }

    const auto& rspec = spec.radiance;
    ImageBuffer radiance(w, h);
    switch (rspec.kind) {
        case RadianceSpec::Kind::Constant: {
            auto data = radiance.data();
            for (std::size_t p = 0; p < w * h; ++p) {
                for (std::size_t c = 0; c < kC; ++c) data[p * kC + c] = rspec.value[c];
            }
            break;
        }
        case RadianceSpec::Kind::UniformRandom: {
            if (!(rspec.lo >= 0.0 && rspec.lo <= rspec.hi && rspec.hi <= 1.0) ||
                !(rspec.black_fraction >= 0.0 && rspec.black_fraction <= 1.0)) {
                throw Error(ErrorCode::InvalidArgument, "random radiance bounds must lie in [0,1]");
            }
            offset_policy::StreamRng rng({spec.seed, "synthetic-radiance", 0});
            auto data = radiance.data();
            for (std::size_t p = 0; p < w * h; ++p) {
                const bool black = rng.next_unit() < rspec.black_fraction;
                for (std::size_t c = 0; c < kC; ++c) {
                    const double v = rng.uniform(rspec.lo, rspec.hi);
                    data[p * kC + c] = black ? 0.0 : v;
                }
            }
            break;
        }
        case RadianceSpec::Kind::Source:
            if (!rspec.source) throw Error(ErrorCode::InvalidArgument, "source radiance missing");
            if (rspec.source->width() != w || rspec.source->height() != h) {
                throw Error(ErrorCode::DimensionMismatch, "source radiance size differs from the scene size");
            }
            radiance = *rspec.source;
            break;
    }

    ImageBuffer observed = uifm::forward_render(radiance, depth, params, {ClampMode::ClampToUnit, 0.0});
    if (spec.noise_sigma > 0.0) {
        offset_policy::StreamRng rng({spec.seed, "synthetic-noise", 0});
        auto data = observed.data();
        for (std::size_t i = 0; i < data.size(); i += 2) {
            // Box-Muller, both outputs used.
            const double u1 = 1.0 - rng.next_unit();
            const double u2 = rng.next_unit();
            const double radius = std::sqrt(-2.0 * std::log(u1)) * spec.noise_sigma;
            const double angle = 2.0 * std::numbers::pi * u2;
            const bool relative = spec.noise == SyntheticSpec::Noise::Relative;
            auto perturb = [relative](double v, double n) {
                return std::clamp(relative ? v * (1.0 + n) : v + n, 0.0, 1.0);
            };
            data[i] = perturb(data[i], radius * std::cos(angle));
            if (i + 1 < data.size()) data[i + 1] = perturb(data[i + 1], radius * std::sin(angle));
        }
    } else if (spec.noise_sigma < 0.0 || !std::isfinite(spec.noise_sigma)) {
        throw Error(ErrorCode::InvalidArgument, "noise sigma must be finite and >= 0");
    }
    return {std::move(observed), std::move(depth), std::move(radiance)};
}

}  // namespace depthjitter::estimation
