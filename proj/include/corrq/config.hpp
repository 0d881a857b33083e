#pragma once

// Config files: TOML (via toml++) or JSON, normalized to a JSON object.

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>
#include <toml.hpp>

#include "corrq/error.hpp"

namespace corrq {

inline nlohmann::json toml_to_json(const toml::table& table) {
    std::ostringstream os;
    os << toml::json_formatter{table};
    return nlohmann::json::parse(os.str());
}

inline nlohmann::json parse_config_text(const std::string& text, bool is_json) {
    try {
        if (is_json) return nlohmann::json::parse(text);
        return toml_to_json(toml::parse(text));
    } catch (const toml::parse_error& e) {
        throw ConfigError(std::string("TOML parse error: ") + std::string(e.description()));
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("JSON parse error: ") + e.what());
    }
}

/// Loads `path`; files ending in .json are JSON, anything else TOML.
inline nlohmann::json load_config(const std::string& path) {
    if (!std::filesystem::exists(path)) throw ConfigError("config file not found: " + path);
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read config file: " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_config_text(buf.str(), std::filesystem::path(path).extension() == ".json");
}

}  // namespace corrq
