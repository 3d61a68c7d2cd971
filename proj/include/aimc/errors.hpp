#pragma once

#include <stdexcept>
#include <string>

namespace aimc {

// Error taxonomy shared across the library. The CLI maps these onto exit codes
// (config -> 2, dependency -> 3, numerical/calibration -> 4).
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DimensionError : Error { using Error::Error; };
struct ArgumentError : Error { using Error::Error; };
struct StateError : Error { using Error::Error; };
struct UsageError : Error { using Error::Error; };
struct IngestionError : Error { using Error::Error; };
struct TrainingError : Error { using Error::Error; };
struct DeploymentError : Error { using Error::Error; };
struct NumericalError : Error { using Error::Error; };
struct CalibrationError : Error { using Error::Error; };
struct StudyError : Error { using Error::Error; };
struct MetricError : Error { using Error::Error; };
struct ConfigError : Error { using Error::Error; };
struct DependencyError : Error { using Error::Error; };

}  // namespace aimc
