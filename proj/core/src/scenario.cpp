#include "hdfmcw/scenario.hpp"

#include <fstream>
#include <set>

#include <json.hpp>

#include "hdfmcw/errors.hpp"

namespace hdfmcw {
namespace {

using nlohmann::json;

// Thin cursor over a json tree that tracks the path for error messages:
// "scene.tags[3].fm_nominal_hz: expected a number" beats a bare type error.
class Cur {
public:
    Cur(const json& j, std::string path) : j_(&j), path_(std::move(path)) {}

    bool has(const char* key) const { return j_->is_object() && j_->contains(key); }

    Cur at(const char* key) const {
        require_object();
        if (!j_->contains(key))
            throw ConfigError(path_ + ": missing required field '" + key + "'");
        return {(*j_)[key], path_ + "." + key};
    }

    Cur at(std::size_t i) const {
        return {(*j_)[i], path_ + "[" + std::to_string(i) + "]"};
    }

    std::size_t array_size() const {
        if (!j_->is_array()) throw ConfigError(path_ + ": expected an array");
        return j_->size();
    }

    double num() const {
        if (!j_->is_number()) throw ConfigError(path_ + ": expected a number");
        return j_->get<double>();
    }

    int integer() const {
        if (!j_->is_number_integer()) throw ConfigError(path_ + ": expected an integer");
        return j_->get<int>();
    }

    std::uint64_t u64() const {
        if (!j_->is_number_unsigned() && !j_->is_number_integer())
            throw ConfigError(path_ + ": expected an unsigned integer");
        return j_->get<std::uint64_t>();
    }

    bool boolean() const {
        if (!j_->is_boolean()) throw ConfigError(path_ + ": expected a boolean");
        return j_->get<bool>();
    }

    std::string str() const {
        if (!j_->is_string()) throw ConfigError(path_ + ": expected a string");
        return j_->get<std::string>();
    }

    Vec3 vec3() const {
        if (!j_->is_array() || j_->size() != 3)
            throw ConfigError(path_ + ": expected [x, y, z]");
        for (const auto& v : *j_)
            if (!v.is_number()) throw ConfigError(path_ + ": expected [x, y, z] numbers");
        return {(*j_)[0].get<double>(), (*j_)[1].get<double>(), (*j_)[2].get<double>()};
    }

    const json& raw() const { return *j_; }
    const std::string& path() const { return path_; }

    void require_object() const {
        if (!j_->is_object()) throw ConfigError(path_ + ": expected an object");
    }

    // every consumer lists its known keys so typos fail loudly
    void reject_unknown(std::initializer_list<const char*> known) const {
        require_object();
        for (auto it = j_->begin(); it != j_->end(); ++it) {
            bool ok = false;
            for (const char* k : known)
                if (it.key() == k) {
                    ok = true;
                    break;
                }
            if (!ok)
                throw ConfigError(path_ + ": unknown field '" + it.key() + "'");
        }
    }

private:
    const json* j_;
    std::string path_;
};

double num_or(const Cur& c, const char* key, double dflt) {
    return c.has(key) ? c.at(key).num() : dflt;
}
int int_or(const Cur& c, const char* key, int dflt) {
    return c.has(key) ? c.at(key).integer() : dflt;
}
bool bool_or(const Cur& c, const char* key, bool dflt) {
    return c.has(key) ? c.at(key).boolean() : dflt;
}
std::string str_or(const Cur& c, const char* key, const std::string& dflt) {
    return c.has(key) ? c.at(key).str() : dflt;
}

RadarConfig parse_radar_config(const Cur& c) {
    c.reject_unknown({"carrier_hz", "bandwidth_hz", "chirp_duration_s", "sample_rate_hz",
                      "num_chirps", "interchirp_gap_s", "tx_power_dbm"});
    RadarConfig cfg;
    cfg.carrier_hz = c.at("carrier_hz").num();
    cfg.bandwidth_hz = c.at("bandwidth_hz").num();
    cfg.chirp_duration_s = c.at("chirp_duration_s").num();
    cfg.sample_rate_hz = c.at("sample_rate_hz").num();
    cfg.num_chirps = c.at("num_chirps").integer();
    cfg.interchirp_gap_s = num_or(c, "interchirp_gap_s", 0.0);
    cfg.tx_power_dbm = num_or(c, "tx_power_dbm", 8.0);
    try {
        cfg.validate();
    } catch (const ConfigError& e) {
        throw ConfigError(c.path() + ": " + e.what());
    }
    return cfg;
}

Scene parse_scene(const Cur& c) {
    c.reject_unknown(
        {"radars", "tags", "clutter", "multipath", "snr_db", "noise_power_db"});
    Scene scene;
    const Cur radars = c.at("radars");
    for (std::size_t i = 0; i < radars.array_size(); ++i) {
        const Cur r = radars.at(i);
        r.reject_unknown({"id", "position_m", "rx_antennas", "antenna_spacing_m",
                          "array_axis", "noise_floor_dbm", "timestamp_jitter_s"});
        RadarNode node;
        node.id = r.at("id").str();
        node.position_m = r.at("position_m").vec3();
        node.rx_antennas = int_or(r, "rx_antennas", 1);
        node.antenna_spacing_m = num_or(r, "antenna_spacing_m", 0.0);
        if (r.has("array_axis")) node.array_axis = r.at("array_axis").vec3();
        if (r.has("noise_floor_dbm")) node.noise_floor_dbm = r.at("noise_floor_dbm").num();
        node.timestamp_jitter_s = num_or(r, "timestamp_jitter_s", 0.0);
        scene.radars.push_back(std::move(node));
    }
    if (c.has("tags")) {
        const Cur tags = c.at("tags");
        for (std::size_t i = 0; i < tags.array_size(); ++i) {
            const Cur t = tags.at(i);
            t.reject_unknown({"id", "position_m", "velocity_mps", "fm_nominal_hz",
                              "fm_ppm_offset", "reflect_amplitude", "phase_rad"});
            TagSpec tag;
            tag.id = t.at("id").str();
            tag.position_m = t.at("position_m").vec3();
            if (t.has("velocity_mps")) tag.velocity_mps = t.at("velocity_mps").vec3();
            tag.fm_nominal_hz = t.at("fm_nominal_hz").num();
            tag.fm_ppm_offset = num_or(t, "fm_ppm_offset", 0.0);
            tag.reflect_amplitude = num_or(t, "reflect_amplitude", 1.0);
            tag.phase_rad = num_or(t, "phase_rad", 0.0);
            scene.tags.push_back(std::move(tag));
        }
    }
    if (c.has("clutter")) {
        const Cur cl = c.at("clutter");
        for (std::size_t i = 0; i < cl.array_size(); ++i) {
            const Cur e = cl.at(i);
            e.reject_unknown({"position_m", "reflect_amplitude"});
            ClutterSpec spec;
            spec.position_m = e.at("position_m").vec3();
            spec.reflect_amplitude = num_or(e, "reflect_amplitude", 1.0);
            scene.clutter.push_back(spec);
        }
    }
    if (c.has("multipath")) {
        const Cur mp = c.at("multipath");
        for (std::size_t i = 0; i < mp.array_size(); ++i) {
            const Cur e = mp.at(i);
            e.reject_unknown({"tag_id", "excess_path_m", "attenuation_db"});
            MultipathTap tap;
            tap.tag_id = e.at("tag_id").str();
            tap.excess_path_m = e.at("excess_path_m").num();
            tap.attenuation_db = num_or(e, "attenuation_db", 0.0);
            scene.multipath.push_back(std::move(tap));
        }
    }
    if (c.has("snr_db")) scene.snr_db = c.at("snr_db").num();
    if (c.has("noise_power_db")) scene.noise_power_db = c.at("noise_power_db").num();
    try {
        scene.validate();
    } catch (const ConfigError& e) {
        throw ConfigError(c.path() + ": " + e.what());
    }
    return scene;
}

PipelineSpec parse_pipeline(const Cur& c) {
    c.reject_unknown({"pad_factor", "refine_peak", "min_snr_db", "refine_fm_subbin",
                      "reject_harmonics", "use_oracle", "mobile_threshold_hz",
                      "track_interval_chirps", "cluster_halfwidth_bins", "calibration_m",
                      "solve", "dumps"});
    PipelineSpec p;
    p.pad_factor = int_or(c, "pad_factor", 128);
    if (p.pad_factor < 1) throw ConfigError(c.path() + ".pad_factor: must be >= 1");
    p.refine_peak = bool_or(c, "refine_peak", true);
    p.min_snr_db = num_or(c, "min_snr_db", 10.0);
    p.refine_fm_subbin = bool_or(c, "refine_fm_subbin", false);
    p.reject_harmonics = bool_or(c, "reject_harmonics", true);
    p.use_oracle = bool_or(c, "use_oracle", false);
    p.mobile_threshold_hz = num_or(c, "mobile_threshold_hz", 1.4);
    p.track_interval_chirps = int_or(c, "track_interval_chirps", 0);
    if (p.track_interval_chirps < 0)
        throw ConfigError(c.path() + ".track_interval_chirps: must be >= 0");
    p.cluster_halfwidth_bins = int_or(c, "cluster_halfwidth_bins", 0);
    if (c.has("calibration_m")) {
        const Cur cal = c.at("calibration_m");
        cal.require_object();
        for (auto it = cal.raw().begin(); it != cal.raw().end(); ++it) {
            if (!it.value().is_number())
                throw ConfigError(cal.path() + "." + it.key() + ": expected a number");
            p.calibration_m[it.key()] = it.value().get<double>();
        }
    }
    if (c.has("solve")) {
        const Cur s = c.at("solve");
        s.reject_unknown({"dims", "initial_guess"});
        p.solve.dims = s.at("dims").integer();
        if (p.solve.dims != 0 && p.solve.dims != 2 && p.solve.dims != 3)
            throw ConfigError(s.path() + ".dims: must be 0, 2 or 3");
        if (s.has("initial_guess")) p.solve.initial_guess = s.at("initial_guess").vec3();
    }
    if (c.has("dumps")) {
        const Cur d = c.at("dumps");
        d.reject_unknown({"spectrum", "envelopes", "iq"});
        p.dumps.spectrum = bool_or(d, "spectrum", false);
        p.dumps.envelopes = bool_or(d, "envelopes", false);
        p.dumps.iq = bool_or(d, "iq", false);
    }
    return p;
}

ExperimentPlan parse_experiment(const Cur& c, const Scene& scene) {
    c.reject_unknown({"trials", "randomize_range", "sweep"});
    ExperimentPlan plan;
    plan.trials = int_or(c, "trials", 1);
    if (plan.trials < 1) throw ConfigError(c.path() + ".trials: must be >= 1");
    if (c.has("randomize_range")) {
        const Cur r = c.at("randomize_range");
        r.reject_unknown({"tag_id", "radar_id", "direction", "min_m", "max_m"});
        RandomizeRange rr;
        rr.tag_id = r.at("tag_id").str();
        rr.radar_id = str_or(r, "radar_id", scene.radars.front().id);
        if (r.has("direction")) rr.direction = r.at("direction").vec3();
        rr.min_m = r.at("min_m").num();
        rr.max_m = r.at("max_m").num();
        if (!(rr.min_m > 0) || !(rr.max_m >= rr.min_m))
            throw ConfigError(r.path() + ": need 0 < min_m <= max_m");
        scene.tag(rr.tag_id);  // LookupError if dangling
        scene.radar(rr.radar_id);
        if (!(rr.direction.norm() > 0))
            throw ConfigError(r.path() + ".direction: must be nonzero");
        plan.randomize_range = std::move(rr);
    }
    if (c.has("sweep")) {
        const Cur s = c.at("sweep");
        s.reject_unknown({"variable", "tag_id", "radar_id", "direction", "values"});
        SweepSpec sw;
        sw.variable = s.at("variable").str();
        static const std::set<std::string> known = {"fm_ppm_offset", "snr_db", "range_m",
                                                    "speed_mps"};
        if (!known.count(sw.variable))
            throw ConfigError(s.path() + ".variable: unknown sweep variable '" +
                              sw.variable + "' (fm_ppm_offset, snr_db, range_m, speed_mps)");
        if (sw.variable != "snr_db") {
            sw.tag_id = s.at("tag_id").str();
            scene.tag(sw.tag_id);
        }
        sw.radar_id = str_or(s, "radar_id", scene.radars.front().id);
        scene.radar(sw.radar_id);
        if (s.has("direction")) sw.direction = s.at("direction").vec3();
        if (!(sw.direction.norm() > 0))
            throw ConfigError(s.path() + ".direction: must be nonzero");
        const Cur vals = s.at("values");
        for (std::size_t i = 0; i < vals.array_size(); ++i)
            sw.values.push_back(vals.at(i).num());
        if (sw.values.empty()) throw ConfigError(s.path() + ".values: must not be empty");
        plan.sweep = std::move(sw);
    }
    return plan;
}

} // namespace

IdTable default_id_table(const Scene& scene, double ppm_tolerance) {
    IdTable table;
    table.ppm_tolerance = ppm_tolerance;
    for (const auto& t : scene.tags)
        table.entries.push_back({t.id, t.fm_nominal_hz});
    return table;
}

Scenario parse_scenario(const std::string& text, const std::string& origin) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(origin + ": not valid JSON: " + e.what());
    }
    const Cur root(j, origin);
    root.reject_unknown(
        {"name", "seed", "radar_config", "scene", "pipeline", "id_table", "experiment"});

    Scenario sc;
    sc.name = str_or(root, "name", "unnamed");
    if (!root.has("seed"))
        throw ConfigError(origin +
                          ": missing required field 'seed' (runs must be reproducible)");
    sc.seed = root.at("seed").u64();
    sc.radar_config = parse_radar_config(root.at("radar_config"));
    sc.scene = parse_scene(root.at("scene"));
    sc.scene.rng_seed = sc.seed;
    sc.pipeline = root.has("pipeline") ? parse_pipeline(root.at("pipeline")) : PipelineSpec{};

    double ppm_tol = 1000.0;
    if (root.has("id_table")) {
        const Cur t = root.at("id_table");
        t.reject_unknown({"ppm_tolerance", "entries"});
        ppm_tol = num_or(t, "ppm_tolerance", 1000.0);
        if (t.has("entries")) {
            sc.id_table.ppm_tolerance = ppm_tol;
            const Cur entries = t.at("entries");
            for (std::size_t i = 0; i < entries.array_size(); ++i) {
                const Cur e = entries.at(i);
                e.reject_unknown({"tag_id", "fm_hz"});
                IdTableEntry entry;
                entry.tag_id = e.at("tag_id").str();
                entry.fm_hz = e.at("fm_hz").num();
                if (!(entry.fm_hz > 0))
                    throw ConfigError(e.path() + ".fm_hz: must be > 0");
                sc.id_table.entries.push_back(std::move(entry));
            }
        }
    }
    if (sc.id_table.entries.empty()) sc.id_table = default_id_table(sc.scene, ppm_tol);

    sc.experiment = root.has("experiment")
                        ? parse_experiment(root.at("experiment"), sc.scene)
                        : ExperimentPlan{};
    return sc;
}

Scenario load_scenario(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw IoError("cannot open scenario file '" + file.string() + "'");
    std::string text((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
    return parse_scenario(text, file.filename().string());
}

} // namespace hdfmcw
