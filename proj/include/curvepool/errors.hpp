#pragma once

#include <stdexcept>
#include <string>

namespace curvepool {

// Base class for all library failures. Subtypes mirror the failure modes of
// the individual operations so callers can catch what they can handle.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

struct ParseError : Error {
    using Error::Error;
};
struct EmptyDataset : Error {
    using Error::Error;
};
struct NonFiniteValue : Error {
    using Error::Error;
};
struct DuplicateTime : Error {
    using Error::Error;
};
struct DegenerateRange : Error {
    using Error::Error;
};
struct InsufficientPoints : Error {
    using Error::Error;
};
struct AllPredictionsUndefined : Error {
    using Error::Error;
};
struct ZeroTimeMass : Error {
    using Error::Error;
};
struct NoAdmissibleCandidate : Error {
    using Error::Error;
};
struct EmptyFirstDataset : Error {
    using Error::Error;
};
struct AllPointsThin : Error {
    using Error::Error;
};
struct DensityZero : Error {
    using Error::Error;
};
struct DivisionByZero : Error {
    using Error::Error;
};
struct InvalidSawtooth : Error {
    using Error::Error;
};
struct ReplicateFailure : Error {
    using Error::Error;
};
struct InvalidArgument : Error {
    using Error::Error;
};
struct IoError : Error {
    using Error::Error;
};

} // namespace curvepool
