#include "geoloc/config.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "geoloc/rng.hpp"

namespace geoloc {

void ProtocolConfig::validate() const {
    auto fail = [](const std::string& msg) { throw ConfigError(msg); };
    if (!(max_distance > 0.0) || !std::isfinite(max_distance))
        fail("max_distance must be a positive finite number of meters");
    if (max_peers == 0) fail("max_peers must be at least 1");
    if (announcement_time <= 0) fail("announcement_time must be positive milliseconds");
    if (broadcast_time <= 0) fail("broadcast_time must be positive milliseconds");
    if (bully_timeout <= broadcast_time)
        fail("bully_timeout must exceed broadcast_time, otherwise every bully claim "
             "expires before it is renewed");
    if (!(interest_radius > 0.0) || !std::isfinite(interest_radius))
        fail("interest_radius must be a positive finite number of meters");
    if (!(review_probability >= 0.0 && review_probability <= 1.0))
        fail("review_probability must lie in [0, 1]");
    if (latency_low <= 0) fail("latency_low must be positive milliseconds");
    if (latency_high <= 0) fail("latency_high must be positive milliseconds");
    if (latency_low > latency_high) fail("latency_low must not exceed latency_high");
}

namespace {

template <typename T>
void readField(const nlohmann::json& j, const char* key, T& out) {
    if (!j.contains(key)) return;
    try {
        out = j.at(key).get<T>();
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("bad value for \"") + key + "\": " + e.what());
    }
}

}  // namespace

ProtocolConfig ProtocolConfig::fromJson(const nlohmann::json& j) {
    if (!j.is_object()) throw ConfigError("config root must be a JSON object");
    static const char* known[] = {
        "max_distance", "max_peers",       "announcement_time",
        "broadcast_time", "bully_timeout", "interest_radius",
        "review_probability", "latency_low", "latency_high", "seed",
    };
    for (const auto& [key, value] : j.items()) {
        (void)value;
        bool ok = false;
        for (const char* k : known)
            if (key == k) ok = true;
        if (!ok) throw ConfigError("unknown config key \"" + key + "\"");
    }
    ProtocolConfig c;
    readField(j, "max_distance", c.max_distance);
    readField(j, "max_peers", c.max_peers);
    readField(j, "announcement_time", c.announcement_time);
    readField(j, "broadcast_time", c.broadcast_time);
    readField(j, "bully_timeout", c.bully_timeout);
    readField(j, "interest_radius", c.interest_radius);
    readField(j, "review_probability", c.review_probability);
    readField(j, "latency_low", c.latency_low);
    readField(j, "latency_high", c.latency_high);
    readField(j, "seed", c.seed);
    return c;
}

nlohmann::json ProtocolConfig::toJson() const {
    return nlohmann::json{
        {"max_distance", max_distance},
        {"max_peers", max_peers},
        {"announcement_time", announcement_time},
        {"broadcast_time", broadcast_time},
        {"bully_timeout", bully_timeout},
        {"interest_radius", interest_radius},
        {"review_probability", review_probability},
        {"latency_low", latency_low},
        {"latency_high", latency_high},
        {"seed", seed},
    };
}

ProtocolConfig ProtocolConfig::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("config file " + path + " is not valid JSON: " + e.what());
    }
    ProtocolConfig c = fromJson(j);
    c.validate();
    return c;
}

uint64_t ProtocolConfig::fingerprint() const {
    uint64_t h = 0x9eb3'5741'c0de'f00dULL;
    auto fold = [&h](uint64_t v) { h = mix64(h ^ mix64(v)); };
    auto foldDouble = [&](double d) {
        uint64_t bits;
        static_assert(sizeof(bits) == sizeof(d));
        std::memcpy(&bits, &d, sizeof(bits));
        fold(bits);
    };
    foldDouble(max_distance);
    fold(max_peers);
    fold(static_cast<uint64_t>(announcement_time));
    fold(static_cast<uint64_t>(broadcast_time));
    fold(static_cast<uint64_t>(bully_timeout));
    foldDouble(interest_radius);
    foldDouble(review_probability);
    fold(static_cast<uint64_t>(latency_low));
    fold(static_cast<uint64_t>(latency_high));
    fold(seed);
    return h;
}

}  // namespace geoloc
