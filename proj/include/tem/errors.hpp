#pragma once

#include <stdexcept>
#include <string>

namespace tem {

struct OutOfRangeError : std::runtime_error {
    explicit OutOfRangeError(const std::string& what) : std::runtime_error(what) {}
};

struct InvertedPressuresError : std::runtime_error {
    explicit InvertedPressuresError(const std::string& what) : std::runtime_error(what) {}
};

struct ZeroFlowError : std::runtime_error {
    explicit ZeroFlowError(const std::string& what) : std::runtime_error(what) {}
};

struct DegenerateCapacitanceError : std::runtime_error {
    explicit DegenerateCapacitanceError(const std::string& what) : std::runtime_error(what) {}
};

struct NonFiniteError : std::runtime_error {
    explicit NonFiniteError(const std::string& what) : std::runtime_error(what) {}
};

struct DimensionMismatchError : std::runtime_error {
    explicit DimensionMismatchError(const std::string& what) : std::runtime_error(what) {}
};

struct InfeasibleBoxesError : std::runtime_error {
    explicit InfeasibleBoxesError(const std::string& what) : std::runtime_error(what) {}
};

struct EmptyMapError : std::runtime_error {
    explicit EmptyMapError(const std::string& what) : std::runtime_error(what) {}
};

struct ScenarioMismatchError : std::runtime_error {
    explicit ScenarioMismatchError(const std::string& what) : std::runtime_error(what) {}
};

struct UnstabilizableError : std::runtime_error {
    explicit UnstabilizableError(const std::string& what) : std::runtime_error(what) {}
};

struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace tem
