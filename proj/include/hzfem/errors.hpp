#pragma once

#include <stdexcept>
#include <string>

namespace hzfem
{

/// Rejected user input: bad degree, level out of range, invalid constants.
class ConfigError : public std::invalid_argument
{
public:
    using std::invalid_argument::invalid_argument;
};

/// Degenerate or singular element geometry.
class GeometryError : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

/// A request the implementation cannot honour (e.g. quadrature degree too high).
class CapabilityError : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

/// Linear solve failed: singular system or tolerance not met.
class SolveError : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

} // namespace hzfem
