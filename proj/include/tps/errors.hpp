#pragma once

#include <stdexcept>
#include <string>

namespace tps {

// Every failure surfaces as one of these. The CLI maps each class to a fixed
// exit code and prints a single "class: message" line, so keep the class name
// stable and machine-parseable.
class Error : public std::runtime_error {
public:
    Error(std::string cls, const std::string& msg)
        : std::runtime_error(cls + ": " + msg), cls_(std::move(cls)) {}
    const std::string& error_class() const { return cls_; }

private:
    std::string cls_;
};

struct ConfigError : Error {
    explicit ConfigError(const std::string& m) : Error("config_error", m) {}
};
struct IoError : Error {
    explicit IoError(const std::string& m) : Error("io_error", m) {}
};
struct FormatError : Error {
    explicit FormatError(const std::string& m) : Error("format_error", m) {}
};
struct StructuralError : Error {
    explicit StructuralError(const std::string& m) : Error("structural_error", m) {}
};
struct RangeError : Error {
    explicit RangeError(const std::string& m) : Error("range_error", m) {}
};
struct NumericalError : Error {
    explicit NumericalError(const std::string& m) : Error("numerical_error", m) {}
};

}  // namespace tps
