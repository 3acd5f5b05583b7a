#pragma once

#include <functional>
#include <string>
#include <string_view>

namespace bciqt {

using WarningSink = std::function<void(std::string_view)>;

// Routes a warning to the installed sink (stderr with a "warning: " prefix
// by default). Thread-safe.
void warn(std::string_view message);

// Installs a new sink and returns the previous one. Passing an empty
// function restores the stderr default.
WarningSink set_warning_sink(WarningSink sink);

}  // namespace bciqt
