#pragma once

#include <stdexcept>
#include <string>

namespace knotflow {

// Every failure the library can raise, grouped by how the CLI maps it to an
// exit code: validation (2), geometry (3), monitor trip (4). Tolerance
// failures (exit 1) are ordinary return values, not exceptions.
class Error : public std::runtime_error {
public:
    enum class Kind { validation, geometry, monitor, numeric };

    Error(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    Kind kind() const { return kind_; }

private:
    Kind kind_;
};

struct ValidationError : Error {
    explicit ValidationError(const std::string& what) : Error(Kind::validation, what) {}
};

struct BadShapeParams : Error {
    explicit BadShapeParams(const std::string& what) : Error(Kind::validation, what) {}
};

struct ZeroSpeed : Error {
    explicit ZeroSpeed(const std::string& what) : Error(Kind::geometry, what) {}
};

struct CoincidentPoints : Error {
    explicit CoincidentPoints(const std::string& what) : Error(Kind::geometry, what) {}
};

struct NonRegular : Error {
    explicit NonRegular(const std::string& what) : Error(Kind::geometry, what) {}
};

struct MonitorTripped : Error {
    explicit MonitorTripped(const std::string& what) : Error(Kind::monitor, what) {}
};

struct StepFailure : Error {
    explicit StepFailure(const std::string& what) : Error(Kind::numeric, what) {}
};

struct InnerStall : Error {
    explicit InnerStall(const std::string& what) : Error(Kind::numeric, what) {}
};

} // namespace knotflow
