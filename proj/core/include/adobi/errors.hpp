#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace adobi {

// Shape or coil-count disagreement between operands.
struct DimensionError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// ACS too small, undersampling pattern mismatch, degenerate calibration data.
struct CalibrationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Invalid bridge schedule (non-monotone alpha, bad endpoints, zero alpha
// inside the reverse recursion) or invalid step count.
struct ScheduleError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Malformed MRID container. byte_offset points at the failing read.
struct FormatError : std::runtime_error {
  FormatError(const std::string& what, std::uint64_t offset)
      : std::runtime_error(what + " (byte offset " + std::to_string(offset) + ")"),
        byte_offset(offset) {}
  std::uint64_t byte_offset;
};

// Invalid configuration value or an untrained denoiser bin.
struct ConfigError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Degenerate model (zero predictive variance) or a solve that requires
// regularization to be well posed.
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace adobi
