// SPDX-License-Identifier: Apache-2.0
#include <morphoforge/core/error.hpp>
#include <morphoforge/vlm/gateway.hpp>

#include <openssl/evp.h>
#include <openssl/sha.h>

#include <algorithm>
#include <array>
#include <cstdio>

namespace morphoforge::vlm
{

namespace
{
    auto trim_edges(std::string_view s) -> std::string
    {
        auto const ws = " \t\r\n\f\v";
        auto const b = s.find_first_not_of(ws);
        if (b == std::string_view::npos)
            return {};
        auto const e = s.find_last_not_of(ws);
        return std::string(s.substr(b, e - b + 1));
    }

    auto text_message(Role role, std::string text) -> ChatMessage
    {
        ChatMessage m;
        m.role = role;
        m.parts.emplace_back(TextPart { std::move(text) });
        return m;
    }

    /// End of the balanced value starting at `open`, or npos.
    auto balanced_end(std::string_view text, std::size_t open) -> std::size_t
    {
        std::vector<char> stack;
        bool in_string = false;
        bool escaped = false;
        for (auto i = open; i < text.size(); ++i)
        {
            auto const c = text[i];
            if (in_string)
            {
                if (escaped)
                    escaped = false;
                else if (c == '\\')
                    escaped = true;
                else if (c == '"')
                    in_string = false;
                continue;
            }
            switch (c)
            {
                case '"': in_string = true; break;
                case '{': stack.push_back('}'); break;
                case '[': stack.push_back(']'); break;
                case '}':
                case ']':
                    if (stack.empty() || stack.back() != c)
                        return std::string_view::npos;
                    stack.pop_back();
                    if (stack.empty())
                        return i + 1;
                    break;
                default: break;
            }
        }
        return std::string_view::npos;
    }

    auto fenced_body(std::string_view text) -> std::optional<std::string_view>
    {
        auto const open = text.find("```");
        if (open == std::string_view::npos)
            return std::nullopt;
        auto const line_end = text.find('\n', open);
        if (line_end == std::string_view::npos)
            return std::nullopt;
        auto const close = text.find("```", line_end);
        if (close == std::string_view::npos)
            return text.substr(line_end + 1);
        return text.substr(line_end + 1, close - line_end - 1);
    }

    auto extract_from(std::string_view text) -> std::optional<json>
    {
        auto const start = text.find_first_of("{[");
        if (start == std::string_view::npos)
            return std::nullopt;
        auto const end = balanced_end(text, start);
        if (end == std::string_view::npos)
            throw Error(ErrorCode::MalformedJson, "unbalanced JSON starting at offset " + std::to_string(start));
        auto parsed = json::parse(text.substr(start, end - start), nullptr, false);
        if (parsed.is_discarded())
            throw Error(ErrorCode::MalformedJson, "JSON value does not parse");
        return parsed;
    }

    auto type_matches(json const& value, std::string const& type) -> bool
    {
        if (type == "object")
            return value.is_object();
        if (type == "array")
            return value.is_array();
        if (type == "string")
            return value.is_string();
        if (type == "number")
            return value.is_number();
        if (type == "integer")
            return value.is_number_integer();
        if (type == "boolean")
            return value.is_boolean();
        if (type == "null")
            return value.is_null();
        return true;
    }

    void check_value(json const& schema, json const& value, std::string const& path, std::vector<std::string>& out)
    {
        if (auto t = schema.find("type"); t != schema.end() && t->is_string() && !type_matches(value, t->get<std::string>()))
        {
            out.push_back(path + ": expected " + t->get<std::string>());
            return;
        }
        if (auto e = schema.find("enum"); e != schema.end() && e->is_array()
            && std::find(e->begin(), e->end(), value) == e->end())
            out.push_back(path + ": value not in enum");
        if (value.is_object())
        {
            if (auto r = schema.find("required"); r != schema.end())
                for (auto const& key: *r)
                    if (!value.contains(key.get<std::string>()))
                        out.push_back(path + ": missing required field '" + key.get<std::string>() + "'");
            if (auto p = schema.find("properties"); p != schema.end())
                for (auto const& [key, sub]: p->items())
                    if (auto v = value.find(key); v != value.end())
                        check_value(sub, *v, path + "." + key, out);
        }
        if (value.is_array())
        {
            if (auto m = schema.find("minItems"); m != schema.end() && value.size() < m->get<std::size_t>())
                out.push_back(path + ": expected at least " + std::to_string(m->get<std::size_t>()) + " items");
            if (auto m = schema.find("maxItems"); m != schema.end() && value.size() > m->get<std::size_t>())
                out.push_back(path + ": expected at most " + std::to_string(m->get<std::size_t>()) + " items");
            if (auto items = schema.find("items"); items != schema.end())
                for (std::size_t i = 0; i < value.size(); ++i)
                    check_value(*items, value[i], path + "[" + std::to_string(i) + "]", out);
        }
    }
} // namespace

auto to_string(Role role) -> std::string_view
{
    switch (role)
    {
        case Role::System: return "system";
        case Role::User: return "user";
        case Role::Assistant: return "assistant";
        case Role::Tool: return "tool";
    }
    return "user";
}

auto ChatMessage::system(std::string text) -> ChatMessage { return text_message(Role::System, std::move(text)); }
auto ChatMessage::user(std::string text) -> ChatMessage { return text_message(Role::User, std::move(text)); }
auto ChatMessage::assistant(std::string text) -> ChatMessage { return text_message(Role::Assistant, std::move(text)); }

auto CompletionResponse::to_json() const -> json
{
    json calls = json::array();
    for (auto const& c: tool_calls)
        calls.push_back({ { "id", c.id }, { "name", c.name }, { "arguments", c.arguments } });
    return { { "text", text }, { "tool_calls", calls } };
}

auto CompletionResponse::from_json(json const& j) -> CompletionResponse
{
    CompletionResponse r;
    r.text = j.value("text", std::string {});
    if (auto calls = j.find("tool_calls"); calls != j.end())
        for (auto const& c: *calls)
            r.tool_calls.push_back({ c.value("id", std::string {}), c.at("name").get<std::string>(),
                                     c.value("arguments", json::object()) });
    return r;
}

auto canonical_request(CompletionRequest const& request) -> json
{
    json messages = json::array();
    for (auto const& m: request.messages)
    {
        json parts = json::array();
        for (auto const& p: m.parts)
        {
            if (auto const* t = std::get_if<TextPart>(&p))
                parts.push_back({ { "text", trim_edges(t->text) } });
            else
            {
                auto const& img = std::get<ImagePart>(p);
                parts.push_back({ { "image_sha256", sha256_hex(img.bytes) }, { "media_type", img.media_type } });
            }
        }
        json msg = { { "role", to_string(m.role) }, { "parts", parts } };
        if (!m.tool_call_id.empty())
            msg["tool_call_id"] = m.tool_call_id;
        messages.push_back(std::move(msg));
    }

    auto tools = request.tools;
    std::sort(tools.begin(), tools.end(), [](ToolSchema const& a, ToolSchema const& b) { return a.name < b.name; });
    json tool_list = json::array();
    for (auto const& t: tools)
        tool_list.push_back({ { "name", t.name }, { "description", trim_edges(t.description) }, { "parameters", t.parameters } });

    auto const& s = request.sampling;
    return { { "messages", messages },
             { "tools", tool_list },
             { "sampling",
               { { "temperature", s.temperature },
                 { "top_p", s.top_p },
                 { "frequency_penalty", s.frequency_penalty },
                 { "presence_penalty", s.presence_penalty },
                 { "max_tokens", s.max_tokens } } } };
}

auto fingerprint(CompletionRequest const& request) -> std::string
{
    return sha256_hex(canonical_request(request).dump());
}

auto sha256_hex(std::string_view bytes) -> std::string
{
    std::array<unsigned char, SHA256_DIGEST_LENGTH> digest {};
    unsigned int len = 0;
    EVP_Digest(bytes.data(), bytes.size(), digest.data(), &len, EVP_sha256(), nullptr);
    std::string out;
    out.reserve(2 * len);
    for (unsigned i = 0; i < len; ++i)
    {
        std::array<char, 3> buf {};
        std::snprintf(buf.data(), buf.size(), "%02x", digest[i]);
        out += buf.data();
    }
    return out;
}

auto base64_encode(std::string_view bytes) -> std::string
{
    std::string out(4 * ((bytes.size() + 2) / 3), '\0');
    auto const n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()),
                                   reinterpret_cast<unsigned char const*>(bytes.data()), static_cast<int>(bytes.size()));
    out.resize(static_cast<std::size_t>(n));
    return out;
}

auto extract_json(std::string_view text) -> json
{
    if (auto body = fenced_body(text))
        if (auto j = extract_from(*body))
            return *j;
    if (auto j = extract_from(text))
        return *j;
    throw Error(ErrorCode::NoJsonFound, "response contains no JSON object or array");
}

auto check_arguments(ToolSchema const& schema, json const& arguments) -> std::vector<std::string>
{
    std::vector<std::string> out;
    if (!arguments.is_object())
    {
        out.push_back("arguments: expected a JSON object");
        return out;
    }
    auto params = schema.parameters;
    if (!params.contains("type"))
        params["type"] = "object";
    check_value(params, arguments, "arguments", out);
    return out;
}

auto check_tool_call(std::vector<ToolSchema> const& tools, ToolCall const& call) -> std::vector<std::string>
{
    auto const it = std::find_if(tools.begin(), tools.end(), [&](ToolSchema const& t) { return t.name == call.name; });
    if (it == tools.end())
        return { "unknown tool '" + call.name + "'" };
    return check_arguments(*it, call.arguments);
}

void check_request(CompletionRequest const& request)
{
    for (std::size_t i = 0; i < request.messages.size(); ++i)
    {
        auto const& m = request.messages[i];
        if (m.parts.empty())
            throw Error(ErrorCode::InvalidArgument, "message " + std::to_string(i) + " has no parts");
        if (m.role != Role::User)
            for (auto const& p: m.parts)
                if (std::holds_alternative<ImagePart>(p))
                    throw Error(ErrorCode::InvalidArgument, "image in a non-user message " + std::to_string(i));
    }
}

} // namespace morphoforge::vlm
