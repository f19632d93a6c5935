#pragma once

#include <stdexcept>
#include <string>

namespace treerel {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Bracketed-tree syntax problem; carries the byte offset of the defect.
struct ParseError : Error {
    ParseError(const std::string& msg, size_t offset)
        : Error(msg + " (offset " + std::to_string(offset) + ")"), offset(offset) {}
    size_t offset;
};

// Bad record content (JSONL, GloVe, labels, checkpoints, ...).
struct DataError : Error {
    explicit DataError(const std::string& msg) : Error(msg) {}
    DataError(const std::string& msg, size_t line)
        : Error(msg + " (line " + std::to_string(line) + ")"), line(line) {}
    size_t line = 0;
};

struct IoError : Error {
    using Error::Error;
};

struct ShapeError : Error {
    using Error::Error;
};

// Tag input supplied to a cell that has no tag matrices, or vice versa.
struct ModeError : Error {
    using Error::Error;
};

// Backward requested without the forward caches it needs.
struct StateError : Error {
    using Error::Error;
};

struct InvalidArgument : Error {
    using Error::Error;
};

struct NumericsError : Error {
    using Error::Error;
};

}  // namespace treerel
