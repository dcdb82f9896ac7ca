#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

#include <json.hpp>

namespace geoloc {

class ConfigError : public std::runtime_error {
  public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Every protocol constant in one record. The defaults below are the
// documented default parameter set; experiments override them via config
// file or CLI flags.
struct ProtocolConfig {
    double max_distance = 1000.0;       // meters; peer radius and movement threshold
    uint32_t max_peers = 5;             // overlay degree bound
    int64_t announcement_time = 1000;   // ms; position/review cadence
    int64_t broadcast_time = 2000;      // ms; bully claim cadence
    int64_t bully_timeout = 6000;       // ms; remote-bully expiry
    double interest_radius = 1000.0;    // meters; object relevance radius
    double review_probability = 0.5;    // fraction in [0,1]
    int64_t latency_low = 20;           // ms; peer and client-edge links
    int64_t latency_high = 100;         // ms; client-cloud and edge-cloud links
    uint64_t seed = 42;

    // throws ConfigError when a field violates its bounds or when
    // bully_timeout <= broadcast_time (claims would always expire between
    // renewals) or latency_low > latency_high.
    void validate() const;

    static ProtocolConfig fromJson(const nlohmann::json& j);
    nlohmann::json toJson() const;

    // Load from a JSON file; unknown keys are an error, missing keys keep
    // their defaults. Validates before returning.
    static ProtocolConfig load(const std::string& path);

    // Stable 64-bit digest of the full parameter set, used in run metadata.
    uint64_t fingerprint() const;
};

}  // namespace geoloc
