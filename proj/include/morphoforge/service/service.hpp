// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <morphoforge/core/error.hpp>
#include <morphoforge/pipeline/pipeline.hpp>
#include <morphoforge/vlm/gateway.hpp>

#include <filesystem>
#include <functional>
#include <memory>
#include <string>

namespace morphoforge::service
{

inline constexpr std::size_t max_reference_bytes = 8u << 20;

struct ServiceConfig
{
    std::filesystem::path session_dir = "sessions";
    /// "replay" or "live".
    std::string backend = "replay";
    /// Replay mode reads <transcript_dir>/<label id>.jsonl.
    std::filesystem::path transcript_dir;
    pipeline::PipelineConfig pipeline;
    pipeline::BuildConstraints constraints;
};

/// Makes the backend for one session operation. Replay backends should resume at
/// session.backend.cursor. Throws when the backend cannot be reached.
using BackendFactory = std::function<std::unique_ptr<vlm::Backend>(pipeline::DesignSession const&)>;

/// The factory implied by the config: strict replay from the session's transcript, or live.
[[nodiscard]] auto default_factory(ServiceConfig const& config) -> BackendFactory;

/// HTTP front end over a SessionStore. Creation runs structure, build and visual
/// refinement on a worker thread; state-changing requests on one session are
/// serialized and a request that finds the session busy gets 409.
class SessionService
{
  public:
    explicit SessionService(ServiceConfig config, BackendFactory factory = {});
    ~SessionService();
    SessionService(SessionService const&) = delete;
    auto operator=(SessionService const&) -> SessionService& = delete;

    /// Binds and serves on a background thread; returns the port (a free one when `port` is 0).
    auto start(std::string const& host = "127.0.0.1", int port = 0) -> int;
    /// Serves on the calling thread until stop().
    auto listen(std::string const& host, int port) -> bool;
    void stop();
    /// Blocks until no pipeline work is running.
    void wait_idle();

  private:
    struct Impl;
    std::unique_ptr<Impl> _impl;
};

/// HTTP status for a pipeline error.
[[nodiscard]] auto http_status(ErrorCode code) -> int;

} // namespace morphoforge::service
