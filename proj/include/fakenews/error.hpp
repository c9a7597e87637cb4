#pragma once

#include <stdexcept>
#include <string>

namespace fakenews {

/// Base of every exception thrown by the toolkit.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed input file: missing columns, wrong sizes, bad headers.
class FormatError : public Error {
public:
    using Error::Error;
};

/// Input violates a domain invariant (duplicate ids, overlapping datasets).
class ValidationError : public Error {
public:
    using Error::Error;
};

/// Operation called in a state where it is not defined.
class StateError : public Error {
public:
    using Error::Error;
};

/// Numeric payload problems: NaN/Inf values, diverging losses.
class DataError : public Error {
public:
    using Error::Error;
};

} // namespace fakenews
