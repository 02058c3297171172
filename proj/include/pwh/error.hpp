#pragma once

#include <stdexcept>
#include <string>

namespace pwh {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Bad data or parameters handed to the library.
class InputError : public Error {
public:
    using Error::Error;
};

// SQL text or plan the engine cannot answer.
class QueryError : public Error {
public:
    using Error::Error;
};

// Malformed synopsis bytes.
class FormatError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

// A broken internal invariant; always a bug.
class InvariantError : public Error {
public:
    using Error::Error;
};

}  // namespace pwh
