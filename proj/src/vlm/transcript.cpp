// SPDX-License-Identifier: Apache-2.0
#include <morphoforge/core/error.hpp>
#include <morphoforge/vlm/gateway.hpp>

#include <fstream>
#include <set>
#include <sstream>

namespace morphoforge::vlm
{

auto transcript_line(TranscriptEntry const& entry) -> std::string
{
    json j = { { "fingerprint", entry.fingerprint }, { "response", entry.response.to_json() } };
    return j.dump() + "\n";
}

auto parse_transcript(std::string_view jsonl) -> std::vector<TranscriptEntry>
{
    std::vector<TranscriptEntry> out;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos < jsonl.size())
    {
        auto end = jsonl.find('\n', pos);
        if (end == std::string_view::npos)
            end = jsonl.size();
        auto const line = jsonl.substr(pos, end - pos);
        pos = end + 1;
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string_view::npos)
            continue;
        auto const j = json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.is_object() || !j.contains("fingerprint") || !j.contains("response"))
            throw Error(ErrorCode::ConfigError, "transcript line " + std::to_string(line_no) + " is not a valid entry");
        out.push_back({ j["fingerprint"].get<std::string>(), CompletionResponse::from_json(j["response"]) });
    }
    return out;
}

auto load_transcript(std::filesystem::path const& path) -> std::vector<TranscriptEntry>
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw Error(ErrorCode::NotFound, "transcript not found: " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_transcript(ss.str());
}

RecordingBackend::RecordingBackend(Backend& inner, std::filesystem::path path): _inner(inner), _path(std::move(path)) {}

auto RecordingBackend::complete(CompletionRequest const& request) -> CompletionResponse
{
    auto response = _inner.complete(request);
    std::lock_guard lock(_mutex);
    std::ofstream out(_path, std::ios::binary | std::ios::app);
    if (!out)
        throw Error(ErrorCode::IoError, "cannot append to transcript " + _path.string());
    out << transcript_line({ fingerprint(request), response });
    return response;
}

ReplayBackend::ReplayBackend(std::vector<TranscriptEntry> entries, ReplayMode mode, std::size_t cursor):
    _entries(std::move(entries)), _mode(mode), _cursor(cursor)
{
    if (_mode == ReplayMode::Strict)
    {
        std::set<std::string> seen;
        for (auto const& e: _entries)
            if (!seen.insert(e.fingerprint).second)
                throw Error(ErrorCode::ConfigError, "transcript repeats fingerprint " + e.fingerprint);
    }
}

auto ReplayBackend::complete(CompletionRequest const& request) -> CompletionResponse
{
    std::lock_guard lock(_mutex);
    if (_cursor >= _entries.size())
        throw Error(ErrorCode::TranscriptExhausted,
                    "transcript has " + std::to_string(_entries.size()) + " entries, all consumed");
    auto const& entry = _entries[_cursor];
    if (_mode == ReplayMode::Strict)
    {
        auto const fp = fingerprint(request);
        if (fp != entry.fingerprint)
            throw Error(ErrorCode::FingerprintMismatch, "entry " + std::to_string(_cursor) + " expects "
                                                            + entry.fingerprint + ", request is " + fp);
    }
    ++_cursor;
    return entry.response;
}

auto ReplayBackend::cursor() const -> std::size_t
{
    std::lock_guard lock(_mutex);
    return _cursor;
}

} // namespace morphoforge::vlm
