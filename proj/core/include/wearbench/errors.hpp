#pragma once

#include <stdexcept>
#include <string>

namespace wearbench {

// Base for every error raised by the library. Callers that only need to
// report failures can catch this; the subclasses exist so tests and the CLI
// can tell a malformed input apart from a numerical blow-up.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ShapeError : public Error { public: using Error::Error; };
class LengthError : public Error { public: using Error::Error; };
class ParameterError : public Error { public: using Error::Error; };
class NumericError : public Error { public: using Error::Error; };

class WindowError : public Error { public: using Error::Error; };
class AssemblyError : public Error { public: using Error::Error; };

class MeasurementError : public Error { public: using Error::Error; };
class CoverageError : public Error { public: using Error::Error; };

class SpecError : public Error { public: using Error::Error; };
class LoadError : public Error { public: using Error::Error; };

class ConfigError : public Error { public: using Error::Error; };
class DatasetError : public Error { public: using Error::Error; };
class IoError : public Error { public: using Error::Error; };

// R^2 on a constant truth vector has no meaning.
class UndefinedMetricError : public Error { public: using Error::Error; };

} // namespace wearbench
