// SPDX-License-Identifier: Apache-2.0
#include <morphoforge/service/service.hpp>

#include <CLI11.hpp>

#include <csignal>
#include <iostream>

namespace
{
morphoforge::service::SessionService* running = nullptr;

void on_signal(int)
{
    if (running)
        running->stop();
}
} // namespace

auto main(int argc, char** argv) -> int
{
    CLI::App app { "Design session HTTP service", "morphoforge-service" };
    std::string host = "127.0.0.1";
    int port = 8080;
    morphoforge::service::ServiceConfig config;
    std::string session_dir = "sessions";
    std::string transcript_dir = MORPHOFORGE_DEFAULT_TRANSCRIPTS;
    app.add_option("--host", host, "Address to bind");
    app.add_option("--port", port, "Port to bind");
    app.add_option("--session-dir", session_dir, "Directory holding sessions");
    app.add_option("--backend", config.backend, "replay or live")->check(CLI::IsMember({ "replay", "live" }));
    app.add_option("--transcript-dir", transcript_dir, "Replay transcripts, one <label>.jsonl per creature");
    CLI11_PARSE(app, argc, argv);
    config.session_dir = session_dir;
    config.transcript_dir = transcript_dir;

    try
    {
        morphoforge::service::SessionService service(config);
        running = &service;
        std::signal(SIGINT, on_signal);
        std::signal(SIGTERM, on_signal);
        std::cerr << "listening on " << host << ":" << port << "\n";
        if (!service.listen(host, port))
        {
            std::cerr << "cannot listen on " << host << ":" << port << "\n";
            return 1;
        }
        running = nullptr;
        return 0;
    }
    catch (std::exception const& e)
    {
        std::cerr << e.what() << "\n";
        return 1;
    }
}
