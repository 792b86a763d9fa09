#pragma once

#include <stdexcept>
#include <string>

namespace netqual {

// Base for everything the toolkit throws on purpose.  Catching NetqualError
// at the CLI boundary is enough to turn any domain failure into a clean
// nonzero exit with a message.
struct NetqualError : std::runtime_error {
    explicit NetqualError(const std::string& msg) : std::runtime_error(msg) {}
};

// File could not be opened / read / written.
struct IoError : NetqualError {
    using NetqualError::NetqualError;
};

// Input table does not match the declared schema (missing column, bad header).
struct SchemaError : NetqualError {
    using NetqualError::NetqualError;
};

// Repeated primary key in strict mode.
struct DuplicateKeyError : NetqualError {
    using NetqualError::NetqualError;
};

// An operation that needs data got none (empty file, empty sample, empty graph).
struct EmptyInputError : NetqualError {
    using NetqualError::NetqualError;
};

// merge_nodes was handed a block structure that is not a partition.
struct InvalidPartitionError : NetqualError {
    using NetqualError::NetqualError;
};

// Board similarity on an empty director set is undefined.
struct EmptyBoardError : NetqualError {
    using NetqualError::NetqualError;
};

// Two ranked key lists do not contain the same keys.
struct KeyMismatchError : NetqualError {
    using NetqualError::NetqualError;
};

// Not enough observations for the requested fit / curve.
struct InsufficientDataError : NetqualError {
    using NetqualError::NetqualError;
};

// Design matrix is rank deficient (constant column, collinear regressors).
struct RankDeficientError : NetqualError {
    using NetqualError::NetqualError;
};

// A value is outside the mathematical domain of the operation
// (non-positive value under a log, factor mean <= -1, bad probability...).
struct DomainValueError : NetqualError {
    using NetqualError::NetqualError;
};

// A selected model input is missing and imputation was disabled,
// or a required aggregate table/field is absent.
struct MissingInputError : NetqualError {
    using NetqualError::NetqualError;
};

} // namespace netqual
