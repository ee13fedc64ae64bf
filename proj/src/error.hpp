#pragma once

#include <stdexcept>
#include <string>

namespace unidial {

// Base for all library errors; subtypes map onto the C API status codes.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ShapeError : Error { using Error::Error; };       // dimension mismatch
struct IndexError : Error { using Error::Error; };       // id / position out of range
struct ParamError : Error { using Error::Error; };       // invalid parameter or config key
struct ContractError : Error { using Error::Error; };    // precondition broken by caller
struct DataError : Error { using Error::Error; };        // malformed input file or fixture
struct TruncationError : Error { using Error::Error; };  // sequence exceeds the length budget
struct TrainError : Error { using Error::Error; };       // non-finite loss, aborted run

}  // namespace unidial
