#pragma once

#include <stdexcept>
#include <string>

namespace odcast {

enum class ErrorCode {
	InvalidArgument = 1,
	Io,
	Parse,
	NotFound,
	InsufficientHistory,
	Shape,
	Numeric,
	Config,
	Internal,
};

/// Base of every error raised by the library. The code survives the trip
/// through the C API.
class Error : public std::runtime_error {
public:
	Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
	ErrorCode code() const noexcept { return code_; }

private:
	ErrorCode code_;
};

class InvalidArgument : public Error {
public:
	explicit InvalidArgument(const std::string& what) : Error(ErrorCode::InvalidArgument, what) {}
};

class IoError : public Error {
public:
	explicit IoError(const std::string& what) : Error(ErrorCode::Io, what) {}
};

/// Malformed input; `row()` is the 1-based data row (0 when not row-related).
class ParseError : public Error {
public:
	ParseError(const std::string& what, long row = 0) : Error(ErrorCode::Parse, what), row_(row) {}
	long row() const noexcept { return row_; }

private:
	long row_;
};

class NotFound : public Error {
public:
	explicit NotFound(const std::string& what) : Error(ErrorCode::NotFound, what) {}
};

/// A model cannot be fitted on the given history. The expert selector treats
/// this as "model unavailable" rather than a failure.
class InsufficientHistory : public Error {
public:
	explicit InsufficientHistory(const std::string& what) : Error(ErrorCode::InsufficientHistory, what) {}
};

class ShapeError : public Error {
public:
	explicit ShapeError(const std::string& what) : Error(ErrorCode::Shape, what) {}
};

class NumericError : public Error {
public:
	explicit NumericError(const std::string& what) : Error(ErrorCode::Numeric, what) {}
};

class ConfigError : public Error {
public:
	explicit ConfigError(const std::string& what) : Error(ErrorCode::Config, what) {}
};

} // namespace odcast
