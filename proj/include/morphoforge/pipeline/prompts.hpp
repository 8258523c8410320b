// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <map>
#include <string>
#include <string_view>

namespace morphoforge::pipeline
{

enum class PromptKind
{
    Structure,
    Build,
    Visual,
    Human,
};

/// Template text compiled in from assets/prompts.
[[nodiscard]] auto prompt_template(PromptKind kind) -> std::string_view;

/// Replaces every {{key}}. Throws InvalidArgument for a placeholder without a value.
[[nodiscard]] auto fill_template(std::string_view text, std::map<std::string, std::string> const& values)
    -> std::string;

} // namespace morphoforge::pipeline
