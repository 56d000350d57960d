#pragma once

#include <stdexcept>
#include <string>

namespace anchorforge {

// Precondition violations (bad config, empty batch, k out of range) throw
// std::invalid_argument. The types below cover everything else.

/// Malformed or missing input data, including shape and dimension mismatches.
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ShapeMismatch : public DataError {
public:
    using DataError::DataError;
};

/// A computation produced, or would produce, a non-finite or undefined value.
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// AUC requested on a batch that holds only one class.
class DegenerateLabels : public NumericError {
public:
    DegenerateLabels() : NumericError("degenerate labels: AUC needs at least one positive and one negative") {}
};

}  // namespace anchorforge
