#pragma once

#include <stdexcept>
#include <string>

namespace gfmp {

/// Base class for all library errors.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// A transfer element was evaluated exactly at one of its poles.
class PoleAtEvaluationPoint : public Error {
public:
    using Error::Error;
};

/// Invalid frequency range or grid specification.
class InvalidRange : public Error {
public:
    using Error::Error;
};

/// Admittance design point is degenerate (division by zero in the synthesis).
class DegenerateDesign : public Error {
public:
    using Error::Error;
};

/// Frequency grid too coarse for reliable phase unwrapping.
class GridTooCoarse : public Error {
public:
    using Error::Error;
};

/// Two responses compared on different grids.
class GridMismatch : public Error {
public:
    using Error::Error;
};

/// FFT window shorter than the required number of fundamental cycles.
class WindowTooShort : public Error {
public:
    using Error::Error;
};

/// Malformed input file (trace CSV, config).
class FileFormatError : public Error {
public:
    using Error::Error;
};

/// Evaluation produced a non-finite value outside of a detected pole.
class NumericFailure : public Error {
public:
    using Error::Error;
};

} // namespace gfmp
