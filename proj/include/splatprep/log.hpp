#pragma once

#include <spdlog/spdlog.h>

namespace splatprep {

/// Library logger (stderr). Level comes from SPLATPREP_LOG
/// (trace|debug|info|warn|error|off, default warn) on first use.
spdlog::logger& log();

}  // namespace splatprep
