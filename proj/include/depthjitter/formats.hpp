#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "depthjitter/offset_policy.hpp"
#include "depthjitter/water_params.hpp"

namespace depthjitter::formats {

/// Shortest decimal that round-trips to the same double.
std::string format_double(double value);

// ---------------------------------------------------------------------------
// Parameter sidecar:
// {"image_id": str, "B": [r,g,b], "beta": [r,g,b], "gamma": [r,g,b],
//  "residual": float, "converged": bool}

struct ParamsSidecar {
    std::string image_id;
    WaterParams params;
    double residual = 0.0;
    bool converged = false;
};

std::string to_json(const ParamsSidecar& sidecar);
ParamsSidecar params_sidecar_from_json(const std::string& text);
ParamsSidecar read_params_sidecar(const std::filesystem::path& path);
void write_params_sidecar(const std::filesystem::path& path, const ParamsSidecar& sidecar);

// ---------------------------------------------------------------------------
// Manifest: JSON lines {"image_id":..., "image":..., "depth":..., "params": optional}.
// Relative paths resolve against the manifest's directory.

struct ManifestEntry {
    std::string image_id;
    std::filesystem::path image;
    std::filesystem::path depth;
    std::optional<std::filesystem::path> params;
};

struct DatasetManifest {
    std::vector<ManifestEntry> entries;
};

/// Throws IoError if unreadable, InvalidArgument on malformed lines, duplicate or
/// unsafe ids, or referenced files that do not exist.
DatasetManifest load_manifest(const std::filesystem::path& path);

/// Ids become output file stems, so they are limited to [A-Za-z0-9._-] and may not start with '.'.
bool is_valid_image_id(const std::string& id);

// ---------------------------------------------------------------------------
// Precompute records and the stats file:
// {"tau": float, "quantile_rule": "linear_interpolation", "records": [...], "failures": [...]}

enum class ParamsSource { Fitted, Loaded, DatasetMedian, None };

const char* to_string(ParamsSource source);

struct PrecomputeRecord {
    std::string image_id;
    std::optional<WaterParams> params;
    ParamsSource params_source = ParamsSource::None;
    double depth_variance = 0.0;  ///< m^2
    double z_min = 0.0;           ///< m
    double z_max = 0.0;           ///< m
    offset_policy::VarianceClass variance_class = offset_policy::VarianceClass::Low;
    double fit_residual = 0.0;
    bool fit_converged = false;
    std::optional<std::string> estimation_error;
};

struct EntryFailure {
    std::string image_id;
    std::string error;
};

struct VarianceStats {
    double tau = 0.0;
    std::vector<PrecomputeRecord> records;
    std::vector<EntryFailure> failures;

    const PrecomputeRecord* find(const std::string& image_id) const;
};

inline constexpr const char* kQuantileRule = "linear_interpolation";

std::string to_json(const VarianceStats& stats);
VarianceStats stats_from_json(const std::string& text);
VarianceStats read_stats(const std::filesystem::path& path);
void write_stats(const std::filesystem::path& path, const VarianceStats& stats);

/// Reads a whole file; throws IoError.
std::string read_text(const std::filesystem::path& path);
/// Writes a whole file; throws IoError.
void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace depthjitter::formats
