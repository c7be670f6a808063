#pragma once

#include <functional>
#include <string_view>

namespace fe::diag {

using Sink = std::function<void(std::string_view)>;

// Replaces the process-wide warning sink and returns the previous one.
// The default sink writes "warning: <msg>" lines to stderr.
Sink set_sink(Sink sink);

void warn(std::string_view message);

}  // namespace fe::diag
