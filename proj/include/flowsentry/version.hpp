#pragma once

namespace flowsentry {

inline constexpr const char* kToolName = "flowsentry";
inline constexpr const char* kToolVersion = "0.1.0";
inline constexpr int kReportFormatVersion = 1;
inline constexpr int kModelFormatVersion = 1;

} // namespace flowsentry
