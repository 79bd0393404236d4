#pragma once

#include <stdexcept>
#include <string>

namespace redsched {

// Invalid parameters or scenario configuration. Maps to CLI exit code 1.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A moment integral that does not converge (heavy tail).
class NonFiniteMomentError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Operation requested at or beyond the stability boundary. Maps to exit code 2.
class InstabilityError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Unreadable or unwritable file. Maps to exit code 3.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace redsched
