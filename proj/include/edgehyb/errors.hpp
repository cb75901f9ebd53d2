#ifndef EDGEHYB_ERRORS_HPP
#define EDGEHYB_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace edgehyb {

// Each category maps onto one CLI exit code (see cli.hpp).

/// Invalid argument value (bad range tag, non-positive sigma, zero size...).
class ArgumentError : public std::invalid_argument {
public:
    explicit ArgumentError(const std::string& what) : std::invalid_argument(what) {}
};

/// Tensor or map dimensions that do not fit together.
class ShapeError : public std::invalid_argument {
public:
    explicit ShapeError(const std::string& what) : std::invalid_argument(what) {}
};

/// File could not be opened, read or written.
class IoError : public std::runtime_error {
public:
    explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

/// File was readable but its contents are not in a supported format.
class FormatError : public std::runtime_error {
public:
    explicit FormatError(const std::string& what) : std::runtime_error(what) {}
};

/// Dataset-level problems: empty trees, missing artifacts, bad manifests.
class DataError : public std::runtime_error {
public:
    explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

/// Components that cannot be combined (e.g. SVM width != CNN tap width).
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// Optimization cannot proceed (e.g. single-class SVM training set).
class TrainingError : public std::runtime_error {
public:
    explicit TrainingError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace edgehyb

#endif  // EDGEHYB_ERRORS_HPP
