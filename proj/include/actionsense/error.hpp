#pragma once

#include <stdexcept>
#include <string>

namespace actionsense {

// Exit classes per the CLI contract: validation problems exit 1,
// I/O and subprocess failures exit 2.
enum class ErrorClass { validation, io };

class Error : public std::runtime_error {
public:
    Error(ErrorClass cls, std::string msg)
        : std::runtime_error(std::move(msg)), cls_(cls) {}
    ErrorClass error_class() const { return cls_; }

private:
    ErrorClass cls_;
};

struct ParseError : Error {
    explicit ParseError(std::string m) : Error(ErrorClass::validation, std::move(m)) {}
};
struct ValidationError : Error {
    explicit ValidationError(std::string m) : Error(ErrorClass::validation, std::move(m)) {}
};
struct InsufficientData : Error {
    explicit InsufficientData(std::string m) : Error(ErrorClass::validation, std::move(m)) {}
};
struct UnknownLabel : Error {
    explicit UnknownLabel(std::string m) : Error(ErrorClass::validation, std::move(m)) {}
};
struct DecoderUnavailable : Error {
    explicit DecoderUnavailable(std::string m) : Error(ErrorClass::io, std::move(m)) {}
};
struct DecodeError : Error {
    explicit DecodeError(std::string m) : Error(ErrorClass::io, std::move(m)) {}
};
struct EmptyStream : Error {
    explicit EmptyStream(std::string m) : Error(ErrorClass::validation, std::move(m)) {}
};
struct InvalidFrame : Error {
    explicit InvalidFrame(std::string m) : Error(ErrorClass::validation, std::move(m)) {}
};
struct ShapeError : Error {
    explicit ShapeError(std::string m) : Error(ErrorClass::validation, std::move(m)) {}
};
struct ModelLoadError : Error {
    explicit ModelLoadError(std::string m) : Error(ErrorClass::io, std::move(m)) {}
};
struct ShapeMismatch : Error {
    explicit ShapeMismatch(std::string m) : Error(ErrorClass::validation, std::move(m)) {}
};
struct InferenceError : Error {
    explicit InferenceError(std::string m) : Error(ErrorClass::io, std::move(m)) {}
};
struct EmptySet : Error {
    explicit EmptySet(std::string m) : Error(ErrorClass::validation, std::move(m)) {}
};
struct DimensionMismatch : Error {
    explicit DimensionMismatch(std::string m) : Error(ErrorClass::validation, std::move(m)) {}
};
struct ConfigError : Error {
    explicit ConfigError(std::string m) : Error(ErrorClass::validation, std::move(m)) {}
};
struct NonFiniteInput : Error {
    explicit NonFiniteInput(std::string m) : Error(ErrorClass::validation, std::move(m)) {}
};
struct StaleCache : Error {
    explicit StaleCache(std::string m) : Error(ErrorClass::validation, std::move(m)) {}
};
struct NonFiniteGradient : Error {
    explicit NonFiniteGradient(std::string m) : Error(ErrorClass::validation, std::move(m)) {}
};
struct IoError : Error {
    explicit IoError(std::string m) : Error(ErrorClass::io, std::move(m)) {}
};
struct FormatError : Error {
    explicit FormatError(std::string m) : Error(ErrorClass::io, std::move(m)) {}
};
struct ChecksumError : Error {
    explicit ChecksumError(std::string m) : Error(ErrorClass::io, std::move(m)) {}
};
struct EmptyTrainingSet : Error {
    explicit EmptyTrainingSet(std::string m) : Error(ErrorClass::validation, std::move(m)) {}
};
struct EmptyFrameList : Error {
    explicit EmptyFrameList(std::string m) : Error(ErrorClass::validation, std::move(m)) {}
};
struct IndexOutOfRange : Error {
    explicit IndexOutOfRange(std::string m) : Error(ErrorClass::validation, std::move(m)) {}
};

} // namespace actionsense
