#pragma once

#include <functional>
#include <string>

namespace periscat {

using WarningHandler = std::function<void(const std::string&)>;

// Replaces the process-wide warning sink and returns the previous one.
// The default handler writes "periscat: warning: <msg>" to stderr.
WarningHandler set_warning_handler(WarningHandler handler);

void warn(const std::string& message);

}  // namespace periscat
