#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace tvsh {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidInput : public Error {
public:
    using Error::Error;
};

class FileError : public Error {
public:
    FileError(const std::string& path, const std::string& what)
        : Error(path + ": " + what), path_(path) {}
    const std::string& path() const noexcept { return path_; }

private:
    std::string path_;
};

/// An iterative kernel did not converge.
class NumericalFailure : public Error {
public:
    NumericalFailure(const std::string& what, int iterations)
        : Error(what + " (after " + std::to_string(iterations) + " iterations)"),
          iterations_(iterations) {}
    int iterations() const noexcept { return iterations_; }

private:
    int iterations_;
};

/// Sylvester operator has (numerically) overlapping spectra of A and -B.
class SingularSystem : public Error {
public:
    using Error::Error;
};

/// The adjacency oracle could not answer for a frame pair.
class OracleUnavailable : public Error {
public:
    OracleUnavailable(std::size_t pair_index, const std::string& what)
        : Error("pair " + std::to_string(pair_index) + ": " + what), pair_index_(pair_index) {}
    std::size_t pair_index() const noexcept { return pair_index_; }

private:
    std::size_t pair_index_;
};

/// The endpoint answered with a body that does not follow the expected shape.
class ProtocolError : public Error {
public:
    using Error::Error;
};

class UndefinedMetric : public Error {
public:
    using Error::Error;
};

class SelectionError : public Error {
public:
    using Error::Error;
};

}  // namespace tvsh
