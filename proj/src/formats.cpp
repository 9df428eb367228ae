#include "depthjitter/formats.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace depthjitter::formats {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

std::string format_double(double value) {
    char buf[64];
    const auto result = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, result.ptr);
}

std::string read_text(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::IoError, "cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
    out << text;
    out.flush();
    if (!out) throw Error(ErrorCode::IoError, "failed writing " + path.string());
}

namespace {

json rgb_json(const Rgb& v) { return json::array({v[0], v[1], v[2]}); }

Rgb rgb_from(const json& j, const char* key) {
    if (!j.contains(key) || !j.at(key).is_array() || j.at(key).size() != 3) {
        throw Error(ErrorCode::InvalidArgument, std::string("field '") + key + "' must be an array of 3 numbers");
    }
    Rgb out{};
    for (std::size_t c = 0; c < 3; ++c) {
        const auto& v = j.at(key).at(c);
        if (!v.is_number()) throw Error(ErrorCode::InvalidArgument, std::string("field '") + key + "' must hold numbers");
        out[c] = v.get<double>();
    }
    return out;
}

double number_from(const json& j, const char* key) {
    if (!j.contains(key) || !j.at(key).is_number()) {
        throw Error(ErrorCode::InvalidArgument, std::string("field '") + key + "' must be a number");
    }
    return j.at(key).get<double>();
}

std::string string_from(const json& j, const char* key) {
    if (!j.contains(key) || !j.at(key).is_string()) {
        throw Error(ErrorCode::InvalidArgument, std::string("field '") + key + "' must be a string");
    }
    return j.at(key).get<std::string>();
}

json parse_json(const std::string& text, const std::string& what) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw Error(ErrorCode::InvalidArgument, "malformed JSON in " + what + ": " + e.what());
    }
}

void put_params(json& j, const WaterParams& p) {
    j["B"] = rgb_json(p.veiling());
    j["beta"] = rgb_json(p.attenuation());
    j["gamma"] = rgb_json(p.backscatter());
}

WaterParams params_from(const json& j) {
    return WaterParams(rgb_from(j, "B"), rgb_from(j, "beta"), rgb_from(j, "gamma"));
}

ParamsSource source_from(const std::string& s) {
    if (s == "fitted") return ParamsSource::Fitted;
    if (s == "loaded") return ParamsSource::Loaded;
    if (s == "dataset_median") return ParamsSource::DatasetMedian;
    if (s == "none") return ParamsSource::None;
    throw Error(ErrorCode::InvalidArgument, "unknown params_source '" + s + "'");
}

}  // namespace

// ---------------------------------------------------------------------------

std::string to_json(const ParamsSidecar& sidecar) {
    json j;
    j["image_id"] = sidecar.image_id;
    put_params(j, sidecar.params);
    j["residual"] = sidecar.residual;
    j["converged"] = sidecar.converged;
    return j.dump(2) + "\n";
}

ParamsSidecar params_sidecar_from_json(const std::string& text) {
    const json j = parse_json(text, "params sidecar");
    if (!j.is_object()) throw Error(ErrorCode::InvalidArgument, "params sidecar must be a JSON object");
    ParamsSidecar out{j.contains("image_id") ? string_from(j, "image_id") : std::string{}, params_from(j)};
    if (j.contains("residual")) out.residual = number_from(j, "residual");
    if (j.contains("converged")) {
        if (!j.at("converged").is_boolean()) throw Error(ErrorCode::InvalidArgument, "field 'converged' must be a bool");
        out.converged = j.at("converged").get<bool>();
    }
    return out;
}

ParamsSidecar read_params_sidecar(const fs::path& path) {
    try {
        return params_sidecar_from_json(read_text(path));
    } catch (const Error& e) {
        if (e.code() == ErrorCode::IoError) throw;
        throw Error(e.code(), path.string() + ": " + e.what());
    }
}

void write_params_sidecar(const fs::path& path, const ParamsSidecar& sidecar) {
    write_text(path, to_json(sidecar));
}

// ---------------------------------------------------------------------------

bool is_valid_image_id(const std::string& id) {
    if (id.empty() || id.front() == '.') return false;
    for (unsigned char ch : id) {
        if (!(std::isalnum(ch) || ch == '.' || ch == '_' || ch == '-')) return false;
    }
    return true;
}

DatasetManifest load_manifest(const fs::path& path) {
    const std::string text = read_text(path);
    const fs::path base = path.parent_path();
    auto resolve = [&base](const std::string& p) {
        const fs::path candidate(p);
        return candidate.is_absolute() ? candidate : base / candidate;
    };

    DatasetManifest manifest;
    std::set<std::string> seen;
    std::istringstream lines(text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(lines, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const std::string where = path.string() + ":" + std::to_string(line_no);
        const json j = parse_json(line, where);
        if (!j.is_object()) throw Error(ErrorCode::InvalidArgument, where + ": entry must be a JSON object");

        ManifestEntry entry;
        try {
            entry.image_id = string_from(j, "image_id");
            entry.image = resolve(string_from(j, "image"));
            entry.depth = resolve(string_from(j, "depth"));
            if (j.contains("params") && !j.at("params").is_null()) entry.params = resolve(string_from(j, "params"));
        } catch (const Error& e) {
            throw Error(e.code(), where + ": " + e.what());
        }
        if (!is_valid_image_id(entry.image_id)) {
            throw Error(ErrorCode::InvalidArgument, where + ": image_id '" + entry.image_id +
                                                        "' may only use [A-Za-z0-9._-]");
        }
        if (!seen.insert(entry.image_id).second) {
            throw Error(ErrorCode::InvalidArgument, where + ": duplicate image_id '" + entry.image_id + "'");
        }
        for (const fs::path* p : {&entry.image, &entry.depth}) {
            if (!fs::exists(*p)) throw Error(ErrorCode::InvalidArgument, where + ": missing file " + p->string());
        }
        if (entry.params && !fs::exists(*entry.params)) {
            throw Error(ErrorCode::InvalidArgument, where + ": missing file " + entry.params->string());
        }
        manifest.entries.push_back(std::move(entry));
    }
    return manifest;
}

// ---------------------------------------------------------------------------

const char* to_string(ParamsSource source) {
    switch (source) {
        case ParamsSource::Fitted: return "fitted";
        case ParamsSource::Loaded: return "loaded";
        case ParamsSource::DatasetMedian: return "dataset_median";
        case ParamsSource::None: return "none";
    }
    return "none";
}

const PrecomputeRecord* VarianceStats::find(const std::string& image_id) const {
    for (const auto& r : records) {
        if (r.image_id == image_id) return &r;
    }
    return nullptr;
}

std::string to_json(const VarianceStats& stats) {
    json j;
    j["tau"] = stats.tau;
    j["quantile_rule"] = kQuantileRule;
    json records = json::array();
    for (const auto& r : stats.records) {
        json jr;
        jr["image_id"] = r.image_id;
        if (r.params) {
            json jp;
            put_params(jp, *r.params);
            jr["params"] = jp;
        } else {
            jr["params"] = nullptr;
        }
        jr["params_source"] = to_string(r.params_source);
        jr["depth_variance"] = r.depth_variance;
        jr["z_min"] = r.z_min;
        jr["z_max"] = r.z_max;
        jr["class"] = offset_policy::to_string(r.variance_class);
        jr["fit_residual"] = r.fit_residual;
        jr["fit_converged"] = r.fit_converged;
        if (r.estimation_error) jr["estimation_error"] = *r.estimation_error;
        records.push_back(std::move(jr));
    }
    j["records"] = std::move(records);
    json failures = json::array();
    for (const auto& f : stats.failures) failures.push_back({{"image_id", f.image_id}, {"error", f.error}});
    j["failures"] = std::move(failures);
    return j.dump(2) + "\n";
}

VarianceStats stats_from_json(const std::string& text) {
    const json j = parse_json(text, "stats file");
    if (!j.is_object()) throw Error(ErrorCode::InvalidArgument, "stats file must be a JSON object");
    if (j.contains("quantile_rule") && string_from(j, "quantile_rule") != kQuantileRule) {
        throw Error(ErrorCode::InvalidArgument, "unsupported quantile_rule '" + string_from(j, "quantile_rule") + "'");
    }
    VarianceStats stats;
    stats.tau = number_from(j, "tau");
    if (!j.contains("records") || !j.at("records").is_array()) {
        throw Error(ErrorCode::InvalidArgument, "stats file lacks a 'records' array");
    }
    for (const auto& jr : j.at("records")) {
        PrecomputeRecord r;
        r.image_id = string_from(jr, "image_id");
        if (jr.contains("params") && !jr.at("params").is_null()) r.params = params_from(jr.at("params"));
        r.params_source = jr.contains("params_source") ? source_from(string_from(jr, "params_source"))
                                                       : (r.params ? ParamsSource::Loaded : ParamsSource::None);
        r.depth_variance = number_from(jr, "depth_variance");
        r.z_min = number_from(jr, "z_min");
        r.z_max = number_from(jr, "z_max");
        if (r.depth_variance < 0.0 || r.z_min > r.z_max) {
            throw Error(ErrorCode::InvalidArgument, "record '" + r.image_id + "' violates variance/bounds invariants");
        }
        r.variance_class = offset_policy::classify(r.depth_variance, stats.tau);
        if (jr.contains("fit_residual")) r.fit_residual = number_from(jr, "fit_residual");
        if (jr.contains("fit_converged")) r.fit_converged = jr.at("fit_converged").get<bool>();
        if (jr.contains("estimation_error")) r.estimation_error = string_from(jr, "estimation_error");
        stats.records.push_back(std::move(r));
    }
    if (j.contains("failures") && j.at("failures").is_array()) {
        for (const auto& jf : j.at("failures")) {
            stats.failures.push_back({string_from(jf, "image_id"), string_from(jf, "error")});
        }
    }
    return stats;
}

VarianceStats read_stats(const fs::path& path) {
    try {
        return stats_from_json(read_text(path));
    } catch (const Error& e) {
        if (e.code() == ErrorCode::IoError) throw;
        throw Error(e.code(), path.string() + ": " + e.what());
    }
}

void write_stats(const fs::path& path, const VarianceStats& stats) { write_text(path, to_json(stats)); }

}  // namespace depthjitter::formats
