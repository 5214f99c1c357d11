#pragma once

#include <stdexcept>
#include <string>

namespace avdn {

// Bad input values: invalid view areas, non-convex polygons, empty instructions.
class ValidationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Mismatched tensor or grid dimensions.
class ShapeError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Malformed file records (episodes, predictions, checkpoints, manifests).
class FormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Operation attempted outside the session phase that accepts it.
class ProtocolError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

class NotFoundError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class CapacityError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Numerical failure (non-finite loss or gradient).
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace avdn
