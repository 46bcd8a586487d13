#pragma once

#include <stdexcept>
#include <string>

namespace mecswarm {

/// Invalid user-supplied configuration (bad ranges, counts, missing inputs).
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent data encountered while reading a file.
class ParseError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A caller broke a documented contract (shape mismatch, index out of range).
class ContractError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// Numeric failure: non-finite value, empty domain, refused instance.
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace mecswarm
