#pragma once

#include <stdexcept>
#include <string>

namespace cst {

struct Error : std::runtime_error {
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Thrown when input data violates the declared schema (bad cell, missing
// column, non-binary protected value). Message names row and column.
struct DataError : Error {
    using Error::Error;
};

// Thrown for structural problems in an SCM spec or its fit (cycles,
// unknown parents, singular designs, log-link domain violations).
struct ModelError : Error {
    using Error::Error;
};

struct ConfigError : Error {
    using Error::Error;
};

}  // namespace cst
