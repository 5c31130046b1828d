#pragma once

#include <string>

// Thin logging front end. The logging backend is compiled in its own
// translation unit because its formatting library clashes with the copy
// bundled in LibTorch's headers.
namespace skinelev::log {

enum class Level { debug, info, warn, error, off };

void set_level(Level level);
Level parse_level(const std::string& s);  // ConfigError on unknown names

void debug(const std::string& message);
void info(const std::string& message);
void warn(const std::string& message);
void error(const std::string& message);

}  // namespace skinelev::log
