#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace ppdc {

// Base for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidEdge : public Error {
public:
    using Error::Error;
};

class DisconnectedGraph : public Error {
public:
    using Error::Error;
};

class EigenFailure : public Error {
public:
    using Error::Error;
};

class DimensionMismatch : public Error {
public:
    using Error::Error;
};

class SingularCovariance : public Error {
public:
    explicit SingularCovariance(std::size_t cluster)
        : Error("covariance of cluster " + std::to_string(cluster) +
                " is not positive definite after regularization"),
          cluster_(cluster) {}

    std::size_t cluster() const { return cluster_; }

private:
    std::size_t cluster_;
};

class DegenerateClustering : public Error {
public:
    using Error::Error;
};

class NotNeighbors : public Error {
public:
    NotNeighbors(std::size_t observer, std::size_t target)
        : Error("agent " + std::to_string(target) + " is not a neighbor of agent " +
                std::to_string(observer)) {}
};

class InfeasiblePolicy : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

// CSV ingestion failures carry 1-based row and column coordinates.
class DataError : public Error {
public:
    DataError(const std::string& what, std::size_t row, std::size_t column)
        : Error(what + " at row " + std::to_string(row) + ", column " + std::to_string(column)),
          row_(row),
          column_(column) {}

    std::size_t row() const { return row_; }
    std::size_t column() const { return column_; }

private:
    std::size_t row_;
    std::size_t column_;
};

class ParseError : public DataError {
public:
    ParseError(std::size_t row, std::size_t column) : DataError("unparsable cell", row, column) {}
};

class NonFiniteValue : public DataError {
public:
    NonFiniteValue(std::size_t row, std::size_t column)
        : DataError("non-finite value", row, column) {}
};

class RaggedRows : public DataError {
public:
    RaggedRows(std::size_t row, std::size_t column)
        : DataError("row width differs from the first row", row, column) {}
};

}  // namespace ppdc
