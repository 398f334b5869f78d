#ifndef PERSPECTRA_CONFIG_HPP
#define PERSPECTRA_CONFIG_HPP

#include <fstream>
#include <map>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "perspectra/error.hpp"
#include "perspectra/llmio.hpp"

namespace perspectra {

struct GenDefaults {
    double temperature = 0.1;
    int max_tokens = 256;
    long long seed = 42;
    int max_in_flight = 4;
};

// Kit configuration, normally read from perspectra.config.json. The API key
// is the one thing that never lives here; it comes from PERSPECTRA_API_KEY.
struct KitConfig {
    std::map<std::string, EndpointConfig> endpoints;
    GenDefaults defaults;
    std::string data_dir = "data";
    std::optional<std::string> guide_registry_path;

    ClientConfig client_config() const {
        ClientConfig cfg = ClientConfig::from_env();
        cfg.max_in_flight = defaults.max_in_flight;
        return cfg;
    }

    GenRequest base_request() const {
        GenRequest req;
        req.temperature = defaults.temperature;
        req.max_tokens = defaults.max_tokens;
        req.seed = defaults.seed;
        return req;
    }
};

inline constexpr const char* kDefaultConfigPath = "perspectra.config.json";

inline KitConfig kit_config_from_json(const nlohmann::json& j) {
    KitConfig cfg;
    if (!j.is_object()) throw ConfigError("config root must be a JSON object");
    if (j.contains("endpoints")) {
        if (!j["endpoints"].is_object())
            throw ConfigError("config field 'endpoints' must be an object");
        for (auto it = j["endpoints"].begin(); it != j["endpoints"].end(); ++it) {
            const auto& v = it.value();
            if (!v.is_object() || !v.contains("base_url") || !v.contains("kind"))
                throw ConfigError("endpoint '" + it.key() + "' needs base_url and kind");
            EndpointConfig e;
            e.name = it.key();
            e.base_url = v["base_url"].get<std::string>();
            e.model = v.value("model", std::string{});
            e.kind = parse_endpoint_kind(v["kind"].get<std::string>());
            e.per_token_embeddings = v.value("per_token", false);
            cfg.endpoints[e.name] = std::move(e);
        }
    }
    if (j.contains("defaults")) {
        const auto& d = j["defaults"];
        cfg.defaults.temperature = d.value("temperature", cfg.defaults.temperature);
        cfg.defaults.max_tokens = d.value("max_tokens", cfg.defaults.max_tokens);
        cfg.defaults.seed = d.value("seed", cfg.defaults.seed);
        cfg.defaults.max_in_flight = d.value("max_in_flight", cfg.defaults.max_in_flight);
    }
    if (j.contains("paths") && j["paths"].is_object())
        cfg.data_dir = j["paths"].value("data_dir", cfg.data_dir);
    if (j.contains("guide_registry") && j["guide_registry"].is_string())
        cfg.guide_registry_path = j["guide_registry"].get<std::string>();
    return cfg;
}

// Missing file yields the built-in defaults unless the caller passed an
// explicit --config path, in which case the absence is an error.
inline KitConfig load_kit_config(const std::string& path, bool required) {
    std::ifstream in(path);
    if (!in) {
        if (required) throw ConfigError("cannot open config file: " + path);
        return KitConfig{};
    }
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("config file " + path + ": invalid JSON: " + e.what());
    }
    return kit_config_from_json(j);
}

// Resolves an endpoint by name, or by uniqueness of kind when no name was
// given. Enforces that the endpoint has the kind the command requires.
inline EndpointConfig resolve_endpoint(const KitConfig& cfg, const std::string& name,
                                       EndpointKind kind) {
    if (!name.empty()) {
        auto it = cfg.endpoints.find(name);
        if (it == cfg.endpoints.end())
            throw ConfigError("no endpoint named '" + name + "' in config");
        if (it->second.kind != kind)
            throw ConfigError("endpoint '" + name + "' has kind '" +
                              std::string(to_string(it->second.kind)) + "', command needs '" +
                              std::string(to_string(kind)) + "'");
        return it->second;
    }
    std::optional<EndpointConfig> found;
    for (const auto& [n, e] : cfg.endpoints) {
        if (e.kind != kind) continue;
        if (found)
            throw ConfigError("multiple endpoints of kind '" + std::string(to_string(kind)) +
                              "' configured; pick one explicitly");
        found = e;
    }
    if (!found)
        throw ConfigError("no endpoint of kind '" + std::string(to_string(kind)) +
                          "' configured");
    return *found;
}

}  // namespace perspectra

#endif
