// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <morphoforge/core/error.hpp>

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace morphoforge::cli
{

namespace exit_codes
{
    inline constexpr int ok = 0;
    inline constexpr int failure = 1;
    inline constexpr int config = 2;
    inline constexpr int not_found = 3;
    inline constexpr int gateway = 4;
    inline constexpr int budget = 5;
    inline constexpr int validation = 6;
} // namespace exit_codes

[[nodiscard]] auto exit_code(ErrorCode code) -> int;

/// Runs one command. `args` excludes the program name. Artifact paths and the
/// summary line go to `out`; diagnostics and the JSON error line go to `err`.
auto run(std::vector<std::string> const& args, std::ostream& out, std::ostream& err) -> int;

} // namespace morphoforge::cli
