#pragma once

#include <stdexcept>
#include <string>

namespace fixmann {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Input outside the domain of a map or operator.
struct DomainError : Error { using Error::Error; };
// Parameter value outside its admissible range.
struct RangeError : Error { using Error::Error; };
struct ConfigError : Error { using Error::Error; };
struct ShapeError : Error { using Error::Error; };
// Model file or model object failed validation.
struct ValidationError : Error { using Error::Error; };
struct NotSimpleError : Error { using Error::Error; };
struct NoFinalStateError : Error { using Error::Error; };
struct InfiniteValueError : Error { using Error::Error; };
struct SizeError : Error { using Error::Error; };
struct GenerationError : Error { using Error::Error; };
struct IoError : Error { using Error::Error; };

}  // namespace fixmann
