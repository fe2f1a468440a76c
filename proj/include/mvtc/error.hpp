#pragma once

#include <stdexcept>
#include <string>

namespace mvtc {

/// Base class for every exception thrown by the library.
class Error : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

/// Bad user input: dimensions, domains, malformed configuration.
class InputError : public Error
{
public:
  using Error::Error;
};

/// A solver could not produce a usable answer.
class SolverError : public Error
{
public:
  using Error::Error;
};

} // namespace mvtc
