#pragma once

#include <stdexcept>
#include <string>

namespace sfit {

// Error taxonomy used across the library. The CLI maps these onto exit
// codes: ConfigError -> 2, everything else -> 1.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Invalid user-supplied configuration (bad flag, unknown key, bad value).
struct ConfigError : Error {
  using Error::Error;
};

// A caller violated an API precondition (shape mismatch, batch too small).
struct ContractError : Error {
  using Error::Error;
};

// Dataset files missing, truncated or malformed.
struct IngestError : Error {
  using Error::Error;
};

// Filesystem I/O failure outside dataset ingestion.
struct IoError : Error {
  using Error::Error;
};

// Training produced a non-finite loss.
struct DivergenceError : Error {
  using Error::Error;
};

}  // namespace sfit
