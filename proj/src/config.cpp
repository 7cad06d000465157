#include "hjb/config.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

namespace hjb {

namespace {

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

[[noreturn]] void fail_line(int line, const std::string& what) {
    throw ConfigError("config line " + std::to_string(line) + ": " + what);
}

double parse_double(const std::string& sec, const std::string& key, const std::string& v) {
    char* end = nullptr;
    const double x = std::strtod(v.c_str(), &end);
    if (end == v.c_str() || *end != '\0')
        throw ConfigError(sec + "." + key + ": not a number: '" + v + "'");
    return x;
}

int parse_int(const std::string& sec, const std::string& key, const std::string& v) {
    char* end = nullptr;
    const long x = std::strtol(v.c_str(), &end, 10);
    if (end == v.c_str() || *end != '\0')
        throw ConfigError(sec + "." + key + ": not an integer: '" + v + "'");
    return int(x);
}

std::vector<std::string> split_list(const std::string& v) {
    std::vector<std::string> out;
    std::string item;
    std::stringstream ss(v);
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

// value type per key: f double, i int, b bool, s string, F double list, I int list
const std::map<std::string, char>& type_registry() {
    static const std::map<std::string, char> types = {
        {"experiment.seed", 'i'},       {"experiment.out", 's'},
        {"experiment.plots", 'b'},      {"experiment.mu_list", 'F'},
        {"experiment.n_list", 'I'},     {"experiment.threads", 'i'},
        {"problem.dim", 'i'},           {"problem.eps", 'f'},
        {"problem.h", 'f'},             {"problem.test", 's'},
        {"problem.a_seed", 'i'},        {"problem.gamma", 'f'},
        {"problem.alpha", 'f'},         {"problem.T", 'f'},
        {"pi_lambda.policy_iters", 'i'},{"pi_lambda.residual_tail", 'i'},
        {"pi_lambda.n_train", 'i'},     {"pi_lambda.snapshots_per_traj", 'i'},
        {"pi_lambda.cover_factor", 'f'},{"pi_lambda.horizon_factor", 'f'},
        {"pi_lambda.sim_box_scale", 'f'},{"pi_lambda.integrator_step", 'f'},
        {"pi_lambda.record_stride", 'i'},{"pi_lambda.n_residual", 'i'},
        {"pi_lambda.mu", 'f'},          {"pi_lambda.family", 's'},
        {"pi_lambda.max_centers", 'i'}, {"pi_lambda.mlp_width", 'i'},
        {"learning.lr", 'f'},           {"learning.beta1", 'f'},
        {"learning.beta2", 'f'},        {"learning.epsilon", 'f'},
        {"learning.max_steps", 'i'},    {"learning.loss_tol", 'f'},
        {"learning.rel_improve_tol", 'f'},{"learning.stall_window", 'i'},
        {"learning.seed_linear", 'b'},  {"learning.seed_rank_tol", 'f'},
        {"heat.method", 's'},           {"heat.quad_order", 'i'},
        {"heat.mc_samples", 'i'},       {"heat.antithetic", 'b'},
        {"splitting.cfl", 'f'},         {"splitting.theta_margin", 'f'},
        {"splitting.p_samples", 'i'},   {"splitting.res", 'i'},
        {"splitting.ref_tol", 'f'},     {"splitting.steps_list", 'I'},
        {"splitting.datum", 's'},       {"splitting.heat_first", 'b'},
    };
    return types;
}

}  // namespace

bool Config::has(const std::string& sec, const std::string& key) const {
    return find(sec, key) != nullptr;
}

void Config::set(const std::string& sec, const std::string& key, const std::string& value) {
    sections[sec][key] = value;
}

const std::string* Config::find(const std::string& sec, const std::string& key) const {
    auto s = sections.find(sec);
    if (s == sections.end()) return nullptr;
    auto k = s->second.find(key);
    return k == s->second.end() ? nullptr : &k->second;
}

Config parse_config_text(const std::string& text) {
    Config cfg;
    std::string section, line;
    std::stringstream ss(text);
    int lineno = 0;
    while (std::getline(ss, line)) {
        ++lineno;
        line = trim(line);
        if (line.empty() || line[0] == '#') continue;
        if (line[0] == '[') {
            if (line.back() != ']' || line.size() < 3) fail_line(lineno, "malformed section header");
            section = trim(line.substr(1, line.size() - 2));
            cfg.sections[section];  // record even if empty
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) fail_line(lineno, "expected 'key = value'");
        if (section.empty()) fail_line(lineno, "key outside any [section]");
        const std::string key = trim(line.substr(0, eq));
        if (key.empty()) fail_line(lineno, "empty key");
        cfg.sections[section][key] = trim(line.substr(eq + 1));
    }
    return cfg;
}

Config load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str());
}

bool parse_override(const std::string& arg, std::string* dotted, std::string* value) {
    if (arg.rfind("--", 0) != 0) return false;
    const auto eq = arg.find('=');
    if (eq == std::string::npos) return false;
    const std::string key = arg.substr(2, eq - 2);
    if (key.find('.') == std::string::npos) return false;
    *dotted = key;
    *value = arg.substr(eq + 1);
    return true;
}

void apply_override(Config& cfg, const std::string& dotted, const std::string& value) {
    const auto dot = dotted.find('.');
    if (dot == std::string::npos || dot == 0 || dot + 1 == dotted.size())
        throw ConfigError("override key must look like section.key: " + dotted);
    cfg.set(dotted.substr(0, dot), dotted.substr(dot + 1), value);
}

Config merge_config(Config base, const Config& over) {
    for (const auto& [sec, kv] : over.sections) {
        base.sections[sec];
        for (const auto& [k, v] : kv) base.sections[sec][k] = v;
    }
    return base;
}

std::string render_config(const Config& cfg) {
    std::string out;
    bool first = true;
    for (const auto& [sec, kv] : cfg.sections) {
        if (!first) out += "\n";
        first = false;
        out += "[" + sec + "]\n";
        for (const auto& [k, v] : kv) out += k + " = " + v + "\n";
    }
    return out;
}

double cfg_double(const Config& c, const std::string& sec, const std::string& key, double dflt) {
    const std::string* v = c.find(sec, key);
    return v ? parse_double(sec, key, *v) : dflt;
}

int cfg_int(const Config& c, const std::string& sec, const std::string& key, int dflt) {
    const std::string* v = c.find(sec, key);
    return v ? parse_int(sec, key, *v) : dflt;
}

bool cfg_bool(const Config& c, const std::string& sec, const std::string& key, bool dflt) {
    const std::string* v = c.find(sec, key);
    if (!v) return dflt;
    if (*v == "true" || *v == "1" || *v == "yes") return true;
    if (*v == "false" || *v == "0" || *v == "no") return false;
    throw ConfigError(sec + "." + key + ": not a boolean: '" + *v + "'");
}

std::string cfg_string(const Config& c, const std::string& sec, const std::string& key,
                       const std::string& dflt) {
    const std::string* v = c.find(sec, key);
    return v ? *v : dflt;
}

std::vector<double> cfg_double_list(const Config& c, const std::string& sec,
                                    const std::string& key, const std::vector<double>& dflt) {
    const std::string* v = c.find(sec, key);
    if (!v) return dflt;
    std::vector<double> out;
    for (const std::string& item : split_list(*v)) out.push_back(parse_double(sec, key, item));
    return out;
}

std::vector<int> cfg_int_list(const Config& c, const std::string& sec, const std::string& key,
                              const std::vector<int>& dflt) {
    const std::string* v = c.find(sec, key);
    if (!v) return dflt;
    std::vector<int> out;
    for (const std::string& item : split_list(*v)) out.push_back(parse_int(sec, key, item));
    return out;
}

const std::map<std::string, std::vector<std::string>>& config_registry() {
    static const std::map<std::string, std::vector<std::string>> reg = [] {
        std::map<std::string, std::vector<std::string>> r;
        for (const auto& [dotted, type] : type_registry()) {
            (void)type;
            const auto dot = dotted.find('.');
            r[dotted.substr(0, dot)].push_back(dotted.substr(dot + 1));
        }
        return r;
    }();
    return reg;
}

std::vector<std::string> validate_config(const Config& cfg) {
    std::vector<std::string> issues;
    const auto& types = type_registry();
    const auto& reg = config_registry();
    for (const auto& [sec, kv] : cfg.sections) {
        if (!reg.count(sec)) {
            issues.push_back("unknown section [" + sec + "]");
            continue;
        }
        for (const auto& [key, value] : kv) {
            auto t = types.find(sec + "." + key);
            if (t == types.end()) {
                issues.push_back("unknown key " + sec + "." + key);
                continue;
            }
            try {
                switch (t->second) {
                    case 'f': parse_double(sec, key, value); break;
                    case 'i': parse_int(sec, key, value); break;
                    case 'b': cfg_bool(cfg, sec, key, false); break;
                    case 'F':
                        if (cfg_double_list(cfg, sec, key, {}).empty())
                            issues.push_back(sec + "." + key + ": empty list");
                        break;
                    case 'I':
                        if (cfg_int_list(cfg, sec, key, {}).empty())
                            issues.push_back(sec + "." + key + ": empty list");
                        break;
                    default: break;
                }
            } catch (const ConfigError& e) {
                issues.push_back(e.what());
            }
        }
    }
    return issues;
}

}  // namespace hjb
