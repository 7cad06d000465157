#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace hjb {

// sectioned key=value configuration: '[section]' headers, 'key = value' lines,
// '#' comments; values stay strings until a typed getter reads them
struct Config {
    std::map<std::string, std::map<std::string, std::string>> sections;

    bool has(const std::string& sec, const std::string& key) const;
    void set(const std::string& sec, const std::string& key, const std::string& value);
    const std::string* find(const std::string& sec, const std::string& key) const;
};

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

Config parse_config_text(const std::string& text);  // throws ConfigError with a line number
Config load_config_file(const std::string& path);

// '--section.key=value' CLI token; returns false if arg is not an override
bool parse_override(const std::string& arg, std::string* dotted, std::string* value);
void apply_override(Config& cfg, const std::string& dotted, const std::string& value);

// merge: every entry of 'over' wins over 'base'
Config merge_config(Config base, const Config& over);

// deterministic round-trippable rendering (sections and keys sorted)
std::string render_config(const Config& cfg);

// typed access; missing key -> fallback, malformed value -> ConfigError
double cfg_double(const Config& c, const std::string& sec, const std::string& key, double dflt);
int cfg_int(const Config& c, const std::string& sec, const std::string& key, int dflt);
bool cfg_bool(const Config& c, const std::string& sec, const std::string& key, bool dflt);
std::string cfg_string(const Config& c, const std::string& sec, const std::string& key,
                       const std::string& dflt);
std::vector<double> cfg_double_list(const Config& c, const std::string& sec,
                                    const std::string& key, const std::vector<double>& dflt);
std::vector<int> cfg_int_list(const Config& c, const std::string& sec, const std::string& key,
                              const std::vector<int>& dflt);

// diagnostics: unknown sections/keys against the registry below plus basic
// invariants (sweep lists nonempty, numeric fields parse); empty means valid
std::vector<std::string> validate_config(const Config& cfg);

// section -> allowed keys, shared by validation and the CLI help text
const std::map<std::string, std::vector<std::string>>& config_registry();

}  // namespace hjb
