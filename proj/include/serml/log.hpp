#pragma once

#include <functional>
#include <string>

namespace serml {

using WarningSink = std::function<void(const std::string&)>;

// Routes library warnings. The default sink writes to stderr. Returns the
// previously installed sink so callers (tests, CLI) can restore it.
WarningSink set_warning_sink(WarningSink sink);

void warn(const std::string& message);

}  // namespace serml
