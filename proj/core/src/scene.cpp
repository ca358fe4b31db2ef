#include "hdfmcw/scene.hpp"

#include <set>
#include <string>

#include "hdfmcw/errors.hpp"

namespace hdfmcw {

void Scene::validate() const {
    if (radars.empty()) throw ConfigError("scene: at least one radar is required");
    std::set<std::string> radar_ids;
    for (const auto& r : radars) {
        if (r.id.empty()) throw ConfigError("scene: radar id must not be empty");
        if (!radar_ids.insert(r.id).second)
            throw ConfigError("scene: duplicate radar id '" + r.id + "'");
        if (r.rx_antennas < 1)
            throw ConfigError("scene: radar '" + r.id + "': rx_antennas must be >= 1");
        if (r.rx_antennas > 1 && !(r.antenna_spacing_m > 0))
            throw ConfigError("scene: radar '" + r.id +
                              "': antenna_spacing_m must be > 0 for an array");
        if (r.rx_antennas > 1 && !(r.array_axis.norm() > 0))
            throw ConfigError("scene: radar '" + r.id + "': array_axis must be nonzero");
        if (r.timestamp_jitter_s < 0)
            throw ConfigError("scene: radar '" + r.id + "': timestamp_jitter_s must be >= 0");
    }
    std::set<std::string> tag_ids;
    for (const auto& t : tags) {
        if (t.id.empty()) throw ConfigError("scene: tag id must not be empty");
        if (!tag_ids.insert(t.id).second)
            throw ConfigError("scene: duplicate tag id '" + t.id + "'");
        if (!(t.fm_nominal_hz > 0))
            throw ConfigError("scene: tag '" + t.id + "': fm_nominal_hz must be > 0");
        if (!(t.reflect_amplitude > 0))
            throw ConfigError("scene: tag '" + t.id + "': reflect_amplitude must be > 0");
    }
    for (std::size_t i = 0; i < clutter.size(); ++i)
        if (!(clutter[i].reflect_amplitude > 0))
            throw ConfigError("scene: clutter[" + std::to_string(i) +
                              "]: reflect_amplitude must be > 0");
    for (const auto& m : multipath) {
        if (!tag_ids.count(m.tag_id))
            throw ConfigError("scene: multipath tap references unknown tag '" + m.tag_id + "'");
        if (!(m.excess_path_m > 0))
            throw ConfigError("scene: multipath tap for '" + m.tag_id +
                              "': excess_path_m must be > 0");
    }
    if (snr_db && noise_power_db)
        throw ConfigError("scene: snr_db and noise_power_db are mutually exclusive");
}

const RadarNode& Scene::radar(const std::string& id) const {
    for (const auto& r : radars)
        if (r.id == id) return r;
    throw LookupError("scene: unknown radar id '" + id + "'");
}

const TagSpec& Scene::tag(const std::string& id) const {
    for (const auto& t : tags)
        if (t.id == id) return t;
    throw LookupError("scene: unknown tag id '" + id + "'");
}

double range_at(const Scene& scene, const std::string& radar_id,
                const TargetRef& target, double t_s) {
    const RadarNode& r = scene.radar(radar_id);
    if (target.is_tag()) {
        const TagSpec& t = scene.tag(target.tag_id);
        return (t.position_m + t.velocity_mps * t_s - r.position_m).norm();
    }
    if (target.clutter_index < 0 ||
        target.clutter_index >= static_cast<int>(scene.clutter.size()))
        throw LookupError("scene: clutter index " +
                          std::to_string(target.clutter_index) + " out of range");
    return (scene.clutter[target.clutter_index].position_m - r.position_m).norm();
}

double range_rate_at(const Scene& scene, const std::string& radar_id,
                     const TargetRef& target, double t_s) {
    if (!target.is_tag()) return 0.0;
    const RadarNode& r = scene.radar(radar_id);
    const TagSpec& t = scene.tag(target.tag_id);
    const Vec3 rel = t.position_m + t.velocity_mps * t_s - r.position_m;
    const double dist = rel.norm();
    if (dist == 0.0) return 0.0;
    return rel.dot(t.velocity_mps) / dist;
}

double effective_fm(const TagSpec& tag) {
    return tag.fm_nominal_hz * (1.0 + tag.fm_ppm_offset * 1e-6);
}

} // namespace hdfmcw
