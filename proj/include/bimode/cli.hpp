#pragma once
#include <string>
#include <vector>

#include "json.hpp"

namespace bimode {

// Reads YAML or JSON (YAML is a superset, so both go through the YAML parser).
nlohmann::json load_config_text(const std::string& text);
nlohmann::json load_config_file(const std::string& path);

// Applies "a.b.c=value"; the value is parsed as YAML.
void apply_set(nlohmann::json& cfg, const std::string& assignment);

// FNV-1a 64 over the compact dump of the config without output_dir, as 16 hex digits.
std::string config_hash(const nlohmann::json& cfg);

// Smallest cutoff considered safe for a coherent amplitude.
int recommended_cutoff(double abs_alpha);

struct Validated {
    nlohmann::json config;  // defaults merged, observables filled in
    std::vector<std::string> warnings;
    std::vector<std::string> notices;
};
// Throws ValidationError on unknown keys, missing tables, bad values or an unusable trap.
Validated validate_config(const nlohmann::json& cfg);

// Entry point of the command-line tool; returns the process exit code.
int run_cli(int argc, char** argv);

}  // namespace bimode
