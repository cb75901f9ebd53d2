#include "edgehyb/config.hpp"

#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>

#include "edgehyb/errors.hpp"

namespace edgehyb {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

long long parse_int(const std::string& key, const std::string& v) {
    errno = 0;
    char* end = nullptr;
    const long long x = std::strtoll(v.c_str(), &end, 10);
    if (v.empty() || *end != '\0' || errno == ERANGE) throw ConfigError(key + ": '" + v + "' is not an integer");
    return x;
}

double parse_real(const std::string& key, const std::string& v) {
    errno = 0;
    char* end = nullptr;
    const double x = std::strtod(v.c_str(), &end);
    if (v.empty() || *end != '\0' || errno == ERANGE) throw ConfigError(key + ": '" + v + "' is not a number");
    return x;
}

bool parse_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw ConfigError(key + ": '" + v + "' is not a boolean");
}

std::string real_str(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

struct Field {
    std::function<void(RunConfig&, const std::string&, const std::string&)> set;
    std::function<std::string(const RunConfig&)> get;
};

template <typename M>
Field str_field(M RunConfig::*m) {
    return {[m](RunConfig& c, const std::string&, const std::string& v) { c.*m = v; },
            [m](const RunConfig& c) { return c.*m; }};
}

template <typename M>
Field int_field(M RunConfig::*m) {
    return {[m](RunConfig& c, const std::string& k, const std::string& v) { c.*m = static_cast<M>(parse_int(k, v)); },
            [m](const RunConfig& c) { return std::to_string(c.*m); }};
}

Field real_field(double RunConfig::*m) {
    return {[m](RunConfig& c, const std::string& k, const std::string& v) { c.*m = parse_real(k, v); },
            [m](const RunConfig& c) { return real_str(c.*m); }};
}

Field bool_field(bool RunConfig::*m) {
    return {[m](RunConfig& c, const std::string& k, const std::string& v) { c.*m = parse_bool(k, v); },
            [m](const RunConfig& c) { return std::string(c.*m ? "true" : "false"); }};
}

const std::vector<std::pair<std::string, Field>>& fields() {
    static const std::vector<std::pair<std::string, Field>> f = {
        {"dataset", str_field(&RunConfig::dataset)},
        {"bundle", str_field(&RunConfig::bundle)},
        {"out", str_field(&RunConfig::out)},
        {"methods", str_field(&RunConfig::methods)},
        {"train_split", str_field(&RunConfig::train_split)},
        {"eval_split", str_field(&RunConfig::eval_split)},
        {"grid_n", int_field(&RunConfig::grid_n)},
        {"grid_lo", real_field(&RunConfig::grid_lo)},
        {"grid_hi", real_field(&RunConfig::grid_hi)},
        {"max_dist", real_field(&RunConfig::max_dist)},
        {"seed",
         {[](RunConfig& c, const std::string& k, const std::string& v) {
              const long long x = parse_int(k, v);
              if (x < 0) throw ConfigError(k + " must be non-negative");
              c.seed = static_cast<std::uint64_t>(x);
          },
          [](const RunConfig& c) { return std::to_string(c.seed); }}},
        {"epochs", int_field(&RunConfig::epochs)},
        {"batch_size", int_field(&RunConfig::batch_size)},
        {"learning_rate", real_field(&RunConfig::learning_rate)},
        {"checkpoint_interval", int_field(&RunConfig::checkpoint_interval)},
        {"svm_samples", int_field(&RunConfig::svm_samples)},
        {"svm_lambda", real_field(&RunConfig::svm_lambda)},
        {"svm_tol", real_field(&RunConfig::svm_tol)},
        {"svm_max_epochs", int_field(&RunConfig::svm_max_epochs)},
        {"postprocess", bool_field(&RunConfig::postprocess)},
        {"min_component", int_field(&RunConfig::min_component)},
        {"binary", bool_field(&RunConfig::binary)},
        {"canny_sigma", real_field(&RunConfig::canny_sigma)},
        {"canny_low", real_field(&RunConfig::canny_low)},
        {"canny_high_quantile", real_field(&RunConfig::canny_high_quantile)},
        {"log_sigma", real_field(&RunConfig::log_sigma)},
        {"n_images", int_field(&RunConfig::n_images)},
    };
    return f;
}

const Field& field(const std::string& key) {
    for (const auto& [k, f] : fields())
        if (k == key) return f;
    throw ConfigError("unknown config key '" + key + "'");
}

}  // namespace

void RunConfig::set(const std::string& key, const std::string& value) { field(key).set(*this, key, value); }

std::string RunConfig::get(const std::string& key) const { return field(key).get(*this); }

const std::vector<std::string>& RunConfig::keys() {
    static const std::vector<std::string> k = [] {
        std::vector<std::string> out;
        for (const auto& [name, f] : fields()) out.push_back(name);
        return out;
    }();
    return k;
}

std::string RunConfig::dump() const {
    std::string out;
    for (const std::string& k : keys()) out += k + " = " + get(k) + '\n';
    return out;
}

void RunConfig::check() const {
    if (grid_n < 1) throw ConfigError("grid_n must be at least 1");
    if (!(grid_lo >= 0.0 && grid_hi <= 1.0 && grid_lo <= grid_hi)) throw ConfigError("grid must lie within [0,1]");
    if (!(max_dist >= 0.0)) throw ConfigError("max_dist must be non-negative");
    if (epochs < 1) throw ConfigError("epochs must be positive");
    if (batch_size < 1) throw ConfigError("batch_size must be positive");
    if (!(learning_rate >= 0.0)) throw ConfigError("learning_rate must be non-negative");
    if (checkpoint_interval < 0) throw ConfigError("checkpoint_interval must be non-negative");
    if (svm_samples < 1) throw ConfigError("svm_samples must be positive");
    if (!(svm_lambda > 0.0)) throw ConfigError("svm_lambda must be positive");
    if (!(svm_tol > 0.0)) throw ConfigError("svm_tol must be positive");
    if (svm_max_epochs < 1) throw ConfigError("svm_max_epochs must be positive");
    if (min_component < 0) throw ConfigError("min_component must be non-negative");
    if (!(canny_sigma > 0.0)) throw ConfigError("canny_sigma must be positive");
    if (!(canny_low > 0.0 && canny_low <= 1.0)) throw ConfigError("canny_low must lie in (0,1]");
    if (!(canny_high_quantile >= 0.0 && canny_high_quantile <= 1.0))
        throw ConfigError("canny_high_quantile must lie in [0,1]");
    if (!(log_sigma > 0.0)) throw ConfigError("log_sigma must be positive");
    if (n_images < 1) throw ConfigError("n_images must be positive");
}

std::vector<std::string> RunConfig::method_list() const {
    std::vector<std::string> out;
    std::string cur;
    for (char c : methods + ",") {
        if (c == ',') {
            cur = trim(cur);
            if (!cur.empty()) out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    return out;
}

void apply_config_file(RunConfig& cfg, const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file " + path.string());
    std::string line;
    int n = 0;
    while (std::getline(in, line)) {
        ++n;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError(path.string() + ":" + std::to_string(n) + ": expected key = value");
        cfg.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
}

void apply_overrides(RunConfig& cfg, const std::vector<std::string>& assignments) {
    for (const std::string& a : assignments) {
        const auto eq = a.find('=');
        if (eq == std::string::npos) throw ConfigError("override '" + a + "' is not key=value");
        cfg.set(trim(a.substr(0, eq)), trim(a.substr(eq + 1)));
    }
}

void echo_config(const RunConfig& cfg, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    std::ofstream out(dir / "config.txt", std::ios::binary);
    if (!out) throw IoError("cannot write " + (dir / "config.txt").string());
    out << cfg.dump();
}

}  // namespace edgehyb
