#ifndef EDGEHYB_CONFIG_HPP
#define EDGEHYB_CONFIG_HPP

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace edgehyb {

/// Settings shared by every command. Files hold one `key = value` per line;
/// `#` starts a comment. Command-line flags are applied after the file.
struct RunConfig {
    std::string dataset;     // manifest path
    std::string bundle;      // detector bundle directory
    std::string out = "out";
    std::string methods = "hybrid,sobel,prewitt,roberts,log,zerocross,canny";
    std::string train_split = "train";
    std::string eval_split = "test";

    int grid_n = 33;
    double grid_lo = 0.01;
    double grid_hi = 0.99;
    double max_dist = 0.0075;

    std::uint64_t seed = 42;
    int epochs = 30;
    int batch_size = 4;
    double learning_rate = 1e-3;
    int checkpoint_interval = 0;

    int svm_samples = 2000;  // per class per image
    double svm_lambda = 1e-4;
    double svm_tol = 1e-4;
    int svm_max_epochs = 200;

    bool postprocess = false;
    int min_component = 5;
    bool binary = false;

    double canny_sigma = 1.4;
    double canny_low = 0.4;
    double canny_high_quantile = 0.8;
    double log_sigma = 2.0;

    int n_images = 3;

    /// Throws ConfigError on an unknown key or a malformed value.
    void set(const std::string& key, const std::string& value);
    std::string get(const std::string& key) const;

    /// Every key, in the order `dump` writes them.
    static const std::vector<std::string>& keys();

    /// key = value lines, one per key.
    std::string dump() const;

    /// Throws ConfigError when a value is out of range.
    void check() const;

    std::vector<std::string> method_list() const;
};

/// Applies every line of `path` onto `cfg`.
void apply_config_file(RunConfig& cfg, const std::filesystem::path& path);

/// Applies `key=value` strings onto `cfg`.
void apply_overrides(RunConfig& cfg, const std::vector<std::string>& assignments);

/// Writes `dump()` to <dir>/config.txt.
void echo_config(const RunConfig& cfg, const std::filesystem::path& dir);

}  // namespace edgehyb

#endif  // EDGEHYB_CONFIG_HPP
