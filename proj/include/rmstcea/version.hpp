#pragma once

namespace rmstcea {

inline constexpr const char* kVersion = "0.3.0";
inline constexpr int kReportFormatVersion = 1;

}  // namespace rmstcea
