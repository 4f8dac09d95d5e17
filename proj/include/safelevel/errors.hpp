#pragma once

#include <stdexcept>
#include <string>

namespace safelevel {

/// Argument outside the mathematical domain of an operation.
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Input data that is malformed or inconsistent (files, configs, coverage).
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace safelevel
