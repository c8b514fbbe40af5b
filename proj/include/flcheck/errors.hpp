#pragma once

#include <stdexcept>
#include <string>

namespace flcheck {

struct Error : std::runtime_error {
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

struct PrecisionLoss : Error {
    explicit PrecisionLoss(const std::string& what) : Error("PrecisionLoss: " + what) {}
};

struct PoleAtZero : Error {
    explicit PoleAtZero(const std::string& what) : Error("PoleAtZero: " + what) {}
};

struct ZeroInput : Error {
    explicit ZeroInput(const std::string& what) : Error("ZeroInput: " + what) {}
};

struct NoStabilization : Error {
    explicit NoStabilization(const std::string& what) : Error("NoStabilization: " + what) {}
};

struct SingularFiber : Error {
    explicit SingularFiber(const std::string& what) : Error("SingularFiber: " + what) {}
};

struct DivergentTail : Error {
    explicit DivergentTail(const std::string& what) : Error("DivergentTail: " + what) {}
};

struct MissingRule : Error {
    explicit MissingRule(const std::string& what) : Error("MissingRule: " + what) {}
};

struct UnsupportedType : Error {
    explicit UnsupportedType(const std::string& what) : Error("UnsupportedType: " + what) {}
};

struct ConfigError : Error {
    explicit ConfigError(const std::string& what) : Error("ConfigError: " + what) {}
};

} // namespace flcheck
