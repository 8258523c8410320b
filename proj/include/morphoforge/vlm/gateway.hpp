// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <json.hpp>

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace morphoforge::vlm
{

using nlohmann::json;

enum class Role
{
    System,
    User,
    Assistant,
    Tool,
};

[[nodiscard]] auto to_string(Role role) -> std::string_view;

struct TextPart
{
    std::string text;
};

/// Encoded image bytes (PNG or JPEG).
struct ImagePart
{
    std::string bytes;
    std::string media_type = "image/png";
};

using Part = std::variant<TextPart, ImagePart>;

struct ChatMessage
{
    Role role = Role::User;
    std::vector<Part> parts;
    /// Set on tool-result messages.
    std::string tool_call_id;

    [[nodiscard]] static auto system(std::string text) -> ChatMessage;
    [[nodiscard]] static auto user(std::string text) -> ChatMessage;
    [[nodiscard]] static auto assistant(std::string text) -> ChatMessage;
};

struct ToolSchema
{
    std::string name;
    std::string description;
    /// JSON-schema subset: type, properties, required, items, enum, minItems, maxItems.
    json parameters = json::object();
};

struct ToolCall
{
    std::string id;
    std::string name;
    /// Parsed arguments; a JSON string holding the raw text when the model sent invalid JSON.
    json arguments = json::object();
};

struct SamplingParams
{
    double temperature = 0.0;
    double top_p = 1.0;
    double frequency_penalty = 0.0;
    double presence_penalty = 0.0;
    int max_tokens = 16383;
};

struct CompletionRequest
{
    std::vector<ChatMessage> messages;
    std::vector<ToolSchema> tools;
    std::string model = "gpt-4o";
    SamplingParams sampling;
};

struct CompletionResponse
{
    std::string text;
    std::vector<ToolCall> tool_calls;

    [[nodiscard]] auto to_json() const -> json;
    [[nodiscard]] static auto from_json(json const& j) -> CompletionResponse;
    friend auto operator==(CompletionResponse const& a, CompletionResponse const& b) -> bool
    {
        return a.to_json() == b.to_json();
    }
};

/// Canonical form hashed by fingerprint(): text parts trimmed at the edges, images
/// replaced by their SHA-256, tools sorted by name, sampling parameters included.
/// The model id is left out so transcripts survive a model rename.
[[nodiscard]] auto canonical_request(CompletionRequest const& request) -> json;
/// Hex SHA-256 of the canonical request.
[[nodiscard]] auto fingerprint(CompletionRequest const& request) -> std::string;

[[nodiscard]] auto sha256_hex(std::string_view bytes) -> std::string;
[[nodiscard]] auto base64_encode(std::string_view bytes) -> std::string;

/// First balanced JSON object or array in free text, looking inside a Markdown code
/// fence first. Throws NoJsonFound or MalformedJson.
[[nodiscard]] auto extract_json(std::string_view text) -> json;

/// Problems with `arguments` against the schema's parameter spec; empty when valid.
[[nodiscard]] auto check_arguments(ToolSchema const& schema, json const& arguments) -> std::vector<std::string>;
/// As check_arguments, after looking the tool up by name.
[[nodiscard]] auto check_tool_call(std::vector<ToolSchema> const& tools, ToolCall const& call) -> std::vector<std::string>;

/// Every message has a part and images appear only in user messages. Throws InvalidArgument.
void check_request(CompletionRequest const& request);

class Backend
{
  public:
    virtual ~Backend() = default;
    virtual auto complete(CompletionRequest const& request) -> CompletionResponse = 0;
};

// --- live ---------------------------------------------------------------------

struct HttpResult
{
    int status = 0;
    std::string body;
};

/// Thrown by transports when no HTTP response arrived (connect failure or timeout).
struct TransportFailure
{
    std::string message;
};

using Transport = std::function<HttpResult(std::string const& url, std::string const& api_key, std::string const& body)>;
using Sleeper = std::function<void(std::chrono::milliseconds)>;

struct LiveConfig
{
    /// Full chat-completions URL, e.g. https://api.openai.com/v1/chat/completions.
    std::string url;
    std::string api_key;
    std::size_t max_image_bytes = 4u << 20u;
    std::chrono::seconds timeout { 120 };
    /// Waits before each retry; the initial attempt is not delayed.
    std::vector<std::chrono::milliseconds> retry_delays { std::chrono::seconds(1), std::chrono::seconds(4),
                                                          std::chrono::seconds(16) };

    /// Reads MORPHOFORGE_VLM_URL and MORPHOFORGE_VLM_KEY. Throws ConfigError when unset.
    [[nodiscard]] static auto from_environment() -> LiveConfig;
};

/// OpenAI-compatible request body for the wire.
[[nodiscard]] auto wire_request(CompletionRequest const& request) -> json;
/// Parses an OpenAI-compatible response body. Throws TransportError when malformed.
[[nodiscard]] auto parse_wire_response(std::string const& body) -> CompletionResponse;

/// Default transport over cpp-httplib (HTTP and HTTPS).
[[nodiscard]] auto http_transport(std::chrono::seconds timeout) -> Transport;

class LiveBackend final : public Backend
{
  public:
    explicit LiveBackend(LiveConfig config, Transport transport = {}, Sleeper sleeper = {});
    auto complete(CompletionRequest const& request) -> CompletionResponse override;

  private:
    LiveConfig _config;
    Transport _transport;
    Sleeper _sleeper;
};

// --- transcripts ----------------------------------------------------------------

struct TranscriptEntry
{
    std::string fingerprint;
    CompletionResponse response;
};

enum class ReplayMode
{
    /// Each request must match the fingerprint of the next entry.
    Strict,
    /// Entries are returned in order regardless of the request.
    Ordered,
};

[[nodiscard]] auto transcript_line(TranscriptEntry const& entry) -> std::string;
[[nodiscard]] auto parse_transcript(std::string_view jsonl) -> std::vector<TranscriptEntry>;
/// Throws NotFound or ConfigError.
[[nodiscard]] auto load_transcript(std::filesystem::path const& path) -> std::vector<TranscriptEntry>;

/// Wraps another backend and appends every exchange to a JSON Lines file.
class RecordingBackend final : public Backend
{
  public:
    RecordingBackend(Backend& inner, std::filesystem::path path);
    auto complete(CompletionRequest const& request) -> CompletionResponse override;

  private:
    Backend& _inner;
    std::filesystem::path _path;
    std::mutex _mutex;
};

class ReplayBackend final : public Backend
{
  public:
    /// Throws ConfigError when strict mode sees a repeated fingerprint.
    ReplayBackend(std::vector<TranscriptEntry> entries, ReplayMode mode = ReplayMode::Strict, std::size_t cursor = 0);
    auto complete(CompletionRequest const& request) -> CompletionResponse override;

    [[nodiscard]] auto cursor() const -> std::size_t;
    [[nodiscard]] auto size() const -> std::size_t { return _entries.size(); }

  private:
    std::vector<TranscriptEntry> _entries;
    ReplayMode _mode;
    std::size_t _cursor;
    mutable std::mutex _mutex;
};

/// Backend answering from a callback; used by tests and the transcript generator.
class CallbackBackend final : public Backend
{
  public:
    using Handler = std::function<CompletionResponse(CompletionRequest const&)>;
    explicit CallbackBackend(Handler handler): _handler(std::move(handler)) {}
    auto complete(CompletionRequest const& request) -> CompletionResponse override { return _handler(request); }

  private:
    Handler _handler;
};

} // namespace morphoforge::vlm
