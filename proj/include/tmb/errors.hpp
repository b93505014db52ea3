#pragma once

#include <stdexcept>

namespace tmb {

// Base class for every error this library throws.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Argument outside the model domain (d <= 0, negative walls, bad MCS combo).
struct DomainError : Error {
  using Error::Error;
};

// Well-formed input that cannot support the requested computation:
// too few samples, empty table cells, unknown location ids.
struct DataError : Error {
  using Error::Error;
};

// Malformed document (CSV header, key-value syntax). Row-level capture
// problems are collected per row instead of thrown.
struct ParseError : Error {
  using Error::Error;
};

}  // namespace tmb
