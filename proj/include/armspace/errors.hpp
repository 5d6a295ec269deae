#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace armspace {

/// Base class for all armspace errors.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DimensionMismatch : Error {
    using Error::Error;
};

struct NotSkewSymmetric : Error {
    using Error::Error;
};

struct NonFinite : Error {
    using Error::Error;
};

/// The damped normal matrix of the IK update could not be factorized even
/// after repeated damping increases.
struct SingularUpdate : Error {
    using Error::Error;
};

struct SpecMismatch : Error {
    using Error::Error;
};

struct ShapeMismatch : Error {
    using Error::Error;
};

struct GridMismatch : Error {
    using Error::Error;
};

struct MalformedRow : Error {
    MalformedRow(const std::string& msg, std::size_t row_index)
        : Error(msg + " (row " + std::to_string(row_index) + ")"), row(row_index) {}
    std::size_t row;
};

struct IoError : Error {
    using Error::Error;
};

struct EmptyDataset : Error {
    using Error::Error;
};

struct WidthMismatch : Error {
    using Error::Error;
};

struct BadPlan : Error {
    using Error::Error;
};

struct CorruptContainer : Error {
    using Error::Error;
};

struct UnsupportedVersion : Error {
    using Error::Error;
};

struct UnknownAlgo : Error {
    using Error::Error;
};

struct DomainError : Error {
    using Error::Error;
};

struct SingularSystem : Error {
    using Error::Error;
};

}  // namespace armspace
