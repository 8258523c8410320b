// SPDX-License-Identifier: Apache-2.0
#include <morphoforge/core/error.hpp>
#include <morphoforge/service/service.hpp>

#include <httplib.h>

#include <condition_variable>
#include <map>
#include <mutex>
#include <thread>

namespace morphoforge::service
{

using nlohmann::json;
namespace fs = std::filesystem;

namespace
{
    struct Entry
    {
        /// Held by whoever is changing the session: a worker or a request.
        std::mutex op;
        std::mutex state;
        pipeline::DesignSession session;
        bool running = false;
    };

    auto error_body(std::string_view code, std::string const& message) -> std::string
    {
        return json { { "code", code }, { "message", message } }.dump();
    }

    void send_error(httplib::Response& res, int status, std::string_view code, std::string const& message)
    {
        res.status = status;
        res.set_content(error_body(code, message), "application/json");
    }

    auto looks_like_image(std::string const& bytes) -> bool
    {
        return bytes.starts_with("\x89PNG\r\n\x1a\n") || bytes.starts_with("\xFF\xD8\xFF");
    }

    auto trimmed_empty(std::string const& s) -> bool
    {
        return s.find_first_not_of(" \t\r\n") == std::string::npos;
    }

    /// Finalize never talks to the model.
    struct NoBackend final : vlm::Backend
    {
        auto complete(vlm::CompletionRequest const&) -> vlm::CompletionResponse override
        {
            throw Error(ErrorCode::ConfigError, "no model exchange expected");
        }
    };
} // namespace

auto http_status(ErrorCode code) -> int
{
    switch (code)
    {
        case ErrorCode::NotFound: return 404;
        case ErrorCode::InvalidArgument:
        case ErrorCode::ConfigError: return 400;
        case ErrorCode::BudgetExhausted:
        case ErrorCode::SessionClosed:
        case ErrorCode::StageViolation: return 409;
        case ErrorCode::EditRejected:
        case ErrorCode::UnknownNode:
        case ErrorCode::ValidationFailed: return 422;
        case ErrorCode::TransportError:
        case ErrorCode::RateLimited:
        case ErrorCode::TranscriptExhausted:
        case ErrorCode::FingerprintMismatch:
        case ErrorCode::ImageTooLarge:
        case ErrorCode::NoJsonFound:
        case ErrorCode::MalformedJson: return 502;
        default: return 500;
    }
}

auto default_factory(ServiceConfig const& config) -> BackendFactory
{
    return [mode = config.backend](pipeline::DesignSession const& session) -> std::unique_ptr<vlm::Backend> {
        if (mode == "replay")
            return std::make_unique<vlm::ReplayBackend>(vlm::load_transcript(session.backend.transcript),
                                                        vlm::ReplayMode::Strict, session.backend.cursor);
        if (mode == "live")
            return std::make_unique<vlm::LiveBackend>(vlm::LiveConfig::from_environment());
        throw Error(ErrorCode::ConfigError, "unknown backend '" + mode + "'");
    };
}

struct SessionService::Impl
{
    ServiceConfig config;
    BackendFactory factory;
    pipeline::SessionStore store;
    httplib::Server server;
    std::thread listener;

    std::mutex entries_mutex;
    std::map<std::string, std::shared_ptr<Entry>> entries;

    std::mutex jobs_mutex;
    std::condition_variable jobs_done;
    int active_jobs = 0;
    std::vector<std::thread> workers;

    Impl(ServiceConfig c, BackendFactory f):
        config(std::move(c)), factory(f ? std::move(f) : default_factory(config)),
        store(config.session_dir, config.pipeline.render)
    {
        routes();
    }

    auto find(std::string const& id) -> std::shared_ptr<Entry>
    {
        std::lock_guard lock(entries_mutex);
        if (auto it = entries.find(id); it != entries.end())
            return it->second;
        if (!store.exists(id))
            return nullptr;
        auto entry = std::make_shared<Entry>();
        entry->session = store.load(id);
        entries[id] = entry;
        return entry;
    }

    auto resource(std::shared_ptr<Entry> const& entry) -> json
    {
        pipeline::DesignSession s;
        bool running = false;
        {
            std::lock_guard lock(entry->state);
            s = entry->session;
            running = entry->running;
        }
        auto const base = "/sessions/" + s.id;
        auto const snapshot_links = [&](int k) {
            json renders = json::object();
            for (auto v: render::all_views)
                renders[std::string(render::view_name(v))]
                    = base + "/snapshots/" + std::to_string(k) + "/render/" + std::string(render::view_name(v)) + ".png";
            return json { { "model", base + "/snapshots/" + std::to_string(k) + "/model.xml" }, { "renders", renders } };
        };
        json snapshots = json::array();
        for (auto const& snap: s.snapshots)
        {
            auto entry_json = snapshot_links(snap.index);
            entry_json["index"] = snap.index;
            entry_json["origin"] = snap.origin;
            snapshots.push_back(entry_json);
        }
        json links = { { "self", base }, { "feedback", base + "/feedback" }, { "finalize", base + "/finalize" } };
        if (auto const* snap = s.current())
            links.update(snapshot_links(snap->index));
        return {
            { "id", s.id },
            { "label", s.label },
            { "stage", pipeline::to_string(s.stage) },
            { "running", running },
            { "closed", s.closed },
            { "error", s.error ? json(*s.error) : json(nullptr) },
            { "reference_sha256", s.reference_png ? json(vlm::sha256_hex(*s.reference_png)) : json(nullptr) },
            { "budgets",
              { { "visual_rounds_used", s.visual_rounds_used },
                { "visual_rounds_max", pipeline::max_visual_rounds },
                { "visual_rounds_remaining", pipeline::max_visual_rounds - s.visual_rounds_used },
                { "human_prompts_used", s.human_prompts_used },
                { "human_prompts_max", pipeline::max_human_prompts },
                { "human_prompts_remaining", s.closed ? 0 : pipeline::max_human_prompts - s.human_prompts_used } } },
            { "snapshot_index", s.current() ? json(s.current()->index) : json(nullptr) },
            { "snapshots", snapshots },
            { "links", links },
        };
    }

    /// Saves the working copy and makes it visible to readers.
    void publish(Entry& entry, pipeline::DesignSession& working, vlm::Backend const* backend)
    {
        if (auto const* replay = dynamic_cast<vlm::ReplayBackend const*>(backend))
            working.backend.cursor = replay->cursor();
        store.save(working);
        std::lock_guard lock(entry.state);
        entry.session = working;
    }

    void run_job(std::shared_ptr<Entry> entry, std::unique_lock<std::mutex> op)
    {
        pipeline::DesignSession s;
        {
            std::lock_guard lock(entry->state);
            s = entry->session;
        }
        std::unique_ptr<vlm::Backend> backend;
        try
        {
            backend = factory(s);
            auto config = this->config.pipeline;
            if (!s.reference_png)
                config.visual_rounds = 0;
            pipeline::Pipeline p(*backend, config);
            p.synthesize_structure(s);
            publish(*entry, s, backend.get());
            p.build(s);
            publish(*entry, s, backend.get());
            p.visual_refinement(s);
            publish(*entry, s, backend.get());
        }
        catch (Error const& e)
        {
            s.error = std::string(to_string(e.code())) + ": " + e.detail();
            publish(*entry, s, backend.get());
        }
        catch (std::exception const& e)
        {
            s.error = std::string("Internal: ") + e.what();
            publish(*entry, s, backend.get());
        }
        {
            std::lock_guard lock(entry->state);
            entry->running = false;
        }
        op.unlock();
        std::lock_guard lock(jobs_mutex);
        --active_jobs;
        jobs_done.notify_all();
    }

    void create(httplib::Request const& req, httplib::Response& res)
    {
        std::string label;
        std::optional<std::string> reference;
        json constraints_json = json::object();
        if (req.is_multipart_form_data())
        {
            if (req.has_file("label"))
                label = req.get_file_value("label").content;
            if (req.has_file("constraints"))
            {
                constraints_json = json::parse(req.get_file_value("constraints").content, nullptr, false);
                if (constraints_json.is_discarded() || !constraints_json.is_object())
                    return send_error(res, 400, "InvalidArgument", "constraints must be a JSON object");
            }
            if (req.has_file("reference"))
                reference = req.get_file_value("reference").content;
        }
        else
        {
            auto const body = json::parse(req.body, nullptr, false);
            if (body.is_discarded() || !body.is_object())
                return send_error(res, 400, "InvalidArgument", "body must be a JSON object or multipart form");
            if (auto l = body.find("label"); l != body.end() && l->is_string())
                label = l->get<std::string>();
            if (auto c = body.find("constraints"); c != body.end())
            {
                if (!c->is_object())
                    return send_error(res, 400, "InvalidArgument", "constraints must be a JSON object");
                constraints_json = *c;
            }
        }
        if (trimmed_empty(label))
            return send_error(res, 400, "InvalidArgument", "label is empty");
        if (reference && reference->size() > max_reference_bytes)
            return send_error(res, 400, "InvalidArgument", "reference image exceeds 8 MiB");
        if (reference && !looks_like_image(*reference))
            return send_error(res, 400, "InvalidArgument", "reference image must be PNG or JPEG");

        auto merged = config.constraints.to_json();
        merged.update(constraints_json);
        pipeline::BuildConstraints constraints;
        try
        {
            constraints = pipeline::BuildConstraints::from_json(merged);
        }
        catch (Error const& e)
        {
            return send_error(res, 400, "InvalidArgument", e.detail());
        }

        auto entry = std::make_shared<Entry>();
        std::unique_lock op(entry->op);
        {
            std::lock_guard lock(entries_mutex);
            auto const base = pipeline::session_id_for(label).substr(0, 56);
            std::string id;
            for (int n = 1;; ++n)
            {
                id = base + "-" + std::to_string(n);
                if (!entries.contains(id) && !store.exists(id))
                    break;
            }
            auto s = pipeline::new_session(id, label, reference, constraints);
            s.backend.mode = config.backend;
            if (config.backend == "replay")
                s.backend.transcript = (config.transcript_dir / (pipeline::session_id_for(label) + ".jsonl")).string();
            try
            {
                (void)factory(s);
            }
            catch (std::exception const& e)
            {
                return send_error(res, 503, "BackendUnavailable", e.what());
            }
            entry->session = s;
            entry->running = true;
            store.save(s);
            entries[id] = entry;
        }
        {
            std::lock_guard lock(jobs_mutex);
            ++active_jobs;
            workers.emplace_back([this, entry, op = std::move(op)]() mutable { run_job(entry, std::move(op)); });
        }
        res.status = 201;
        auto body = resource(entry);
        res.set_header("Location", body["links"]["self"].get<std::string>());
        res.set_content(body.dump(), "application/json");
    }

    /// Runs `change` on a working copy while holding the session's op lock.
    template<typename Change>
    void mutate(httplib::Request const& req, httplib::Response& res, Change change)
    {
        auto const entry = find(req.matches[1]);
        if (!entry)
            return send_error(res, 404, "NotFound", "no session '" + std::string(req.matches[1]) + "'");
        std::unique_lock op(entry->op, std::try_to_lock);
        if (!op.owns_lock())
            return send_error(res, 409, "Busy", "the session is processing another request");
        pipeline::DesignSession s;
        {
            std::lock_guard lock(entry->state);
            s = entry->session;
        }
        std::unique_ptr<vlm::Backend> backend;
        try
        {
            change(s, backend);
            publish(*entry, s, backend.get());
            res.status = 200;
            res.set_content(resource(entry).dump(), "application/json");
        }
        catch (Error const& e)
        {
            if (e.code() == ErrorCode::EditRejected)
            {
                s.error = std::string(to_string(e.code())) + ": " + e.detail();
                publish(*entry, s, backend.get());
            }
            send_error(res, http_status(e.code()), to_string(e.code()), e.detail());
        }
    }

    void feedback(httplib::Request const& req, httplib::Response& res)
    {
        auto const body = json::parse(req.body, nullptr, false);
        if (body.is_discarded() || !body.is_object() || !body.contains("text") || !body["text"].is_string())
            return send_error(res, 400, "InvalidArgument", "body must be {\"text\": \"...\"}");
        auto const text = body["text"].get<std::string>();
        mutate(req, res, [&](pipeline::DesignSession& s, std::unique_ptr<vlm::Backend>& backend) {
            if (trimmed_empty(text))
                throw Error(ErrorCode::InvalidArgument, "feedback text is empty");
            if (s.closed)
                throw Error(ErrorCode::SessionClosed, "session '" + s.id + "' is finalized");
            if (s.human_prompts_used >= pipeline::max_human_prompts)
                throw Error(ErrorCode::BudgetExhausted, "the number of prompts is limited to 3");
            if (s.stage < pipeline::Stage::VisualRefined)
                throw Error(ErrorCode::StageViolation, "the session is still being built");
            try
            {
                backend = factory(s);
            }
            catch (Error const& e)
            {
                throw Error(ErrorCode::TransportError, "backend unavailable: " + e.detail());
            }
            pipeline::Pipeline p(*backend, config.pipeline);
            (void)p.human_feedback(s, text);
            s.error.reset();
        });
    }

    void finalize(httplib::Request const& req, httplib::Response& res)
    {
        mutate(req, res, [&](pipeline::DesignSession& s, std::unique_ptr<vlm::Backend>&) {
            NoBackend none;
            (void)pipeline::Pipeline(none, config.pipeline).finalize(s, true);
        });
    }

    void snapshot_file(httplib::Request const& req, httplib::Response& res, bool model)
    {
        auto const entry = find(req.matches[1]);
        if (!entry)
            return send_error(res, 404, "NotFound", "no session '" + std::string(req.matches[1]) + "'");
        auto const k = std::stoi(req.matches[2]);
        std::size_t count = 0;
        {
            std::lock_guard lock(entry->state);
            count = entry->session.snapshots.size();
        }
        if (k < 0 || static_cast<std::size_t>(k) >= count)
            return send_error(res, 404, "NotFound", "no snapshot " + std::string(req.matches[2]));
        fs::path path;
        try
        {
            path = model ? store.snapshot_model(req.matches[1], k)
                         : store.snapshot_render(req.matches[1], k, render::parse_view(std::string(req.matches[3])));
            res.set_content(pipeline::read_file(path), model ? "application/xml" : "image/png");
        }
        catch (Error const& e)
        {
            send_error(res, 404, "NotFound", e.detail());
        }
    }

    void routes()
    {
        server.set_payload_max_length(max_reference_bytes + (1u << 20));
        server.Get("/healthz", [](httplib::Request const&, httplib::Response& res) {
            res.set_content(R"({"status":"ok"})", "application/json");
        });
        server.Post("/sessions", [this](auto const& req, auto& res) { create(req, res); });
        server.Get(R"(/sessions/([A-Za-z0-9_-]+))", [this](httplib::Request const& req, httplib::Response& res) {
            auto const entry = find(req.matches[1]);
            if (!entry)
                return send_error(res, 404, "NotFound", "no session '" + std::string(req.matches[1]) + "'");
            res.set_content(resource(entry).dump(), "application/json");
        });
        server.Get(R"(/sessions/([A-Za-z0-9_-]+)/snapshots/(\d{1,6})/model\.xml)",
                   [this](auto const& req, auto& res) { snapshot_file(req, res, true); });
        server.Get(R"(/sessions/([A-Za-z0-9_-]+)/snapshots/(\d{1,6})/render/([a-z]+)\.png)",
                   [this](auto const& req, auto& res) { snapshot_file(req, res, false); });
        server.Post(R"(/sessions/([A-Za-z0-9_-]+)/feedback)", [this](auto const& req, auto& res) { feedback(req, res); });
        server.Post(R"(/sessions/([A-Za-z0-9_-]+)/finalize)", [this](auto const& req, auto& res) { finalize(req, res); });
        server.set_exception_handler([](httplib::Request const&, httplib::Response& res, std::exception_ptr ep) {
            try
            {
                std::rethrow_exception(ep);
            }
            catch (Error const& e)
            {
                send_error(res, http_status(e.code()), to_string(e.code()), e.detail());
            }
            catch (std::exception const& e)
            {
                send_error(res, 500, "Internal", e.what());
            }
        });
        server.set_error_handler([](httplib::Request const&, httplib::Response& res) {
            if (res.body.empty())
                res.set_content(error_body(res.status == 404 ? "NotFound" : "HttpError", httplib::status_message(res.status)),
                                "application/json");
        });
    }
};

SessionService::SessionService(ServiceConfig config, BackendFactory factory):
    _impl(std::make_unique<Impl>(std::move(config), std::move(factory)))
{
}

SessionService::~SessionService()
{
    stop();
    std::vector<std::thread> workers;
    {
        std::lock_guard lock(_impl->jobs_mutex);
        workers.swap(_impl->workers);
    }
    for (auto& w: workers)
        w.join();
}

auto SessionService::start(std::string const& host, int port) -> int
{
    auto const bound = port == 0 ? _impl->server.bind_to_any_port(host) : port;
    if (port != 0 && !_impl->server.bind_to_port(host, port))
        throw Error(ErrorCode::IoError, "cannot bind " + host + ":" + std::to_string(port));
    if (bound < 0)
        throw Error(ErrorCode::IoError, "cannot bind " + host);
    _impl->listener = std::thread([this] { _impl->server.listen_after_bind(); });
    _impl->server.wait_until_ready();
    return bound;
}

auto SessionService::listen(std::string const& host, int port) -> bool
{
    return _impl->server.listen(host, port);
}

void SessionService::stop()
{
    _impl->server.stop();
    if (_impl->listener.joinable())
        _impl->listener.join();
}

void SessionService::wait_idle()
{
    std::unique_lock lock(_impl->jobs_mutex);
    _impl->jobs_done.wait(lock, [this] { return _impl->active_jobs == 0; });
}

} // namespace morphoforge::service
