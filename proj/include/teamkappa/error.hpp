#pragma once

#include <stdexcept>
#include <string>

namespace teamkappa {

// Base for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Bad input data: unreadable files, malformed rows, incomplete matrices,
// team sizes that do not fit the matrix.
class DataError : public Error {
public:
    using Error::Error;
};

// An argument outside the mathematical domain of an operation.
class DomainError : public Error {
public:
    using Error::Error;
};

}  // namespace teamkappa
