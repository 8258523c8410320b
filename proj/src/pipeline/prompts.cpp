// SPDX-License-Identifier: Apache-2.0
#include <morphoforge/core/error.hpp>
#include <morphoforge/pipeline/prompts.hpp>

#include "prompt_data.hpp"

namespace morphoforge::pipeline
{

auto prompt_template(PromptKind kind) -> std::string_view
{
    switch (kind)
    {
        case PromptKind::Structure: return prompt_data::structure;
        case PromptKind::Build: return prompt_data::build;
        case PromptKind::Visual: return prompt_data::visual;
        case PromptKind::Human: return prompt_data::human;
    }
    throw Error(ErrorCode::InvalidArgument, "unknown prompt kind");
}

auto fill_template(std::string_view text, std::map<std::string, std::string> const& values) -> std::string
{
    std::string out;
    std::size_t pos = 0;
    while (true)
    {
        auto const open = text.find("{{", pos);
        if (open == std::string_view::npos)
            break;
        auto const close = text.find("}}", open + 2);
        if (close == std::string_view::npos)
            break;
        out.append(text.substr(pos, open - pos));
        auto const key = std::string(text.substr(open + 2, close - open - 2));
        auto const it = values.find(key);
        if (it == values.end())
            throw Error(ErrorCode::InvalidArgument, "prompt placeholder '" + key + "' has no value");
        out += it->second;
        pos = close + 2;
    }
    out.append(text.substr(pos));
    return out;
}

} // namespace morphoforge::pipeline
