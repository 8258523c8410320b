// SPDX-License-Identifier: Apache-2.0
#include <httplib.h>

#include <morphoforge/core/error.hpp>
#include <morphoforge/vlm/gateway.hpp>

#include <cstdlib>
#include <thread>

namespace morphoforge::vlm
{

namespace
{
    struct SplitUrl
    {
        std::string origin;
        std::string path;
    };

    auto split_url(std::string const& url) -> SplitUrl
    {
        auto const scheme = url.find("://");
        if (scheme == std::string::npos)
            throw Error(ErrorCode::ConfigError, "VLM URL has no scheme: " + url);
        auto const slash = url.find('/', scheme + 3);
        if (slash == std::string::npos)
            return { url, "/" };
        return { url.substr(0, slash), url.substr(slash) };
    }

    auto retryable(int status) -> bool { return status == 429 || (status >= 500 && status <= 599); }

    auto wire_message(ChatMessage const& m) -> json
    {
        json content = json::array();
        for (auto const& p: m.parts)
        {
            if (auto const* t = std::get_if<TextPart>(&p))
                content.push_back({ { "type", "text" }, { "text", t->text } });
            else
            {
                auto const& img = std::get<ImagePart>(p);
                auto url = "data:" + img.media_type + ";base64," + base64_encode(img.bytes);
                content.push_back({ { "type", "image_url" }, { "image_url", { { "url", std::move(url) } } } });
            }
        }
        json out = { { "role", to_string(m.role) }, { "content", content } };
        if (!m.tool_call_id.empty())
            out["tool_call_id"] = m.tool_call_id;
        return out;
    }
} // namespace

auto LiveConfig::from_environment() -> LiveConfig
{
    LiveConfig cfg;
    auto const* url = std::getenv("MORPHOFORGE_VLM_URL");
    auto const* key = std::getenv("MORPHOFORGE_VLM_KEY");
    if (url == nullptr || *url == '\0')
        throw Error(ErrorCode::ConfigError, "MORPHOFORGE_VLM_URL is not set");
    if (key == nullptr || *key == '\0')
        throw Error(ErrorCode::ConfigError, "MORPHOFORGE_VLM_KEY is not set");
    cfg.url = url;
    cfg.api_key = key;
    return cfg;
}

auto wire_request(CompletionRequest const& request) -> json
{
    json messages = json::array();
    for (auto const& m: request.messages)
        messages.push_back(wire_message(m));
    json body = { { "model", request.model },
                  { "messages", messages },
                  { "temperature", request.sampling.temperature },
                  { "top_p", request.sampling.top_p },
                  { "frequency_penalty", request.sampling.frequency_penalty },
                  { "presence_penalty", request.sampling.presence_penalty },
                  { "max_tokens", request.sampling.max_tokens } };
    if (!request.tools.empty())
    {
        json tools = json::array();
        for (auto const& t: request.tools)
            tools.push_back({ { "type", "function" },
                              { "function",
                                { { "name", t.name }, { "description", t.description }, { "parameters", t.parameters } } } });
        body["tools"] = std::move(tools);
    }
    return body;
}

auto parse_wire_response(std::string const& body) -> CompletionResponse
{
    auto const j = json::parse(body, nullptr, false);
    if (j.is_discarded() || !j.is_object())
        throw Error(ErrorCode::TransportError, "response body is not JSON");
    auto const choices = j.find("choices");
    if (choices == j.end() || !choices->is_array() || choices->empty() || !(*choices)[0].contains("message"))
        throw Error(ErrorCode::TransportError, "response has no choices");
    auto const& msg = (*choices)[0]["message"];

    CompletionResponse out;
    if (auto c = msg.find("content"); c != msg.end() && c->is_string())
        out.text = c->get<std::string>();
    if (auto calls = msg.find("tool_calls"); calls != msg.end() && calls->is_array())
        for (auto const& c: *calls)
        {
            ToolCall call;
            call.id = c.value("id", std::string {});
            auto const fn = c.value("function", json::object());
            call.name = fn.value("name", std::string {});
            auto const raw = fn.value("arguments", std::string {});
            auto parsed = json::parse(raw, nullptr, false);
            call.arguments = parsed.is_discarded() ? json(raw) : std::move(parsed);
            out.tool_calls.push_back(std::move(call));
        }
    return out;
}

auto http_transport(std::chrono::seconds timeout) -> Transport
{
    return [timeout](std::string const& url, std::string const& api_key, std::string const& body) -> HttpResult {
        auto const [origin, path] = split_url(url);
        httplib::Client client(origin);
        client.set_connection_timeout(timeout);
        client.set_read_timeout(timeout);
        client.set_write_timeout(timeout);
        httplib::Headers headers { { "Authorization", "Bearer " + api_key } };
        auto res = client.Post(path, headers, body, "application/json");
        if (!res)
            throw TransportFailure { httplib::to_string(res.error()) };
        return { res->status, res->body };
    };
}

LiveBackend::LiveBackend(LiveConfig config, Transport transport, Sleeper sleeper):
    _config(std::move(config)), _transport(std::move(transport)), _sleeper(std::move(sleeper))
{
    if (!_transport)
        _transport = http_transport(_config.timeout);
    if (!_sleeper)
        _sleeper = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
}

auto LiveBackend::complete(CompletionRequest const& request) -> CompletionResponse
{
    check_request(request);
    for (auto const& m: request.messages)
        for (auto const& p: m.parts)
            if (auto const* img = std::get_if<ImagePart>(&p); img && img->bytes.size() > _config.max_image_bytes)
                throw Error(ErrorCode::ImageTooLarge, "image of " + std::to_string(img->bytes.size())
                                                          + " bytes exceeds " + std::to_string(_config.max_image_bytes));

    auto const body = wire_request(request).dump();
    std::string last_failure;
    int last_status = 0;
    for (std::size_t attempt = 0; attempt <= _config.retry_delays.size(); ++attempt)
    {
        if (attempt > 0)
            _sleeper(_config.retry_delays[attempt - 1]);
        try
        {
            auto const res = _transport(_config.url, _config.api_key, body);
            if (res.status >= 200 && res.status < 300)
                return parse_wire_response(res.body);
            last_status = res.status;
            last_failure = "HTTP " + std::to_string(res.status);
            if (!retryable(res.status))
                throw Error(ErrorCode::TransportError, last_failure + ": " + res.body.substr(0, 200));
        }
        catch (TransportFailure const& f)
        {
            last_status = 0;
            last_failure = f.message;
        }
    }
    auto const attempts = std::to_string(_config.retry_delays.size() + 1);
    if (last_status == 429)
        throw Error(ErrorCode::RateLimited, "still rate limited after " + attempts + " attempts");
    throw Error(ErrorCode::TransportError, last_failure + " after " + attempts + " attempts");
}

} // namespace morphoforge::vlm
