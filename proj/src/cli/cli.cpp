// SPDX-License-Identifier: Apache-2.0
#include <morphoforge/cli/cli.hpp>
#include <morphoforge/mjcf/mjcf.hpp>
#include <morphoforge/pipeline/pipeline.hpp>
#include <morphoforge/render/renderer.hpp>
#include <morphoforge/validate/validator.hpp>
#include <morphoforge/vlm/gateway.hpp>

#include <CLI11.hpp>

#include <algorithm>
#include <memory>
#include <optional>
#include <ostream>
#include <set>

namespace morphoforge::cli
{

namespace fs = std::filesystem;
using nlohmann::json;

namespace
{
    struct Options
    {
        std::string backend;
        std::string transcript;
        std::string replay;
        std::string record;
        std::string session_dir = "sessions";
        std::string reference;
        std::string views = "front,left,top,threequarter";
        std::optional<double> tolerance_gap;
        std::optional<int> max_components;
        std::optional<int> max_links;
        bool no_symmetry = false;
        std::optional<int> visual_rounds;
        std::string session_id;

        // per-command
        std::string label;
        std::string text;
        std::string model;
        std::string out;
        int size = 512;
        std::optional<int> snapshot;
        bool close = false;
    };

    /// Backend chosen on the command line, owning everything it wraps.
    struct BackendStack
    {
        std::string mode;
        std::string transcript;
        std::unique_ptr<vlm::LiveBackend> live;
        std::unique_ptr<vlm::RecordingBackend> recorder;
        std::unique_ptr<vlm::ReplayBackend> replay;

        auto backend() -> vlm::Backend&
        {
            if (replay)
                return *replay;
            if (recorder)
                return *recorder;
            return *live;
        }

        [[nodiscard]] auto cursor() const -> std::size_t { return replay ? replay->cursor() : 0; }
    };

    auto resolved_mode(Options& o) -> std::string
    {
        if (!o.replay.empty())
        {
            if (!o.record.empty() || (!o.backend.empty() && o.backend != "replay"))
                throw Error(ErrorCode::ConfigError, "--replay conflicts with the chosen backend");
            o.transcript = o.replay;
            return "replay";
        }
        if (!o.record.empty())
        {
            if (!o.backend.empty() && o.backend != "record")
                throw Error(ErrorCode::ConfigError, "--record conflicts with the chosen backend");
            o.transcript = o.record;
            return "record";
        }
        if (!o.backend.empty())
            return o.backend;
        return o.transcript.empty() ? "live" : "replay";
    }

    auto make_backend(std::string const& mode, std::string const& transcript, std::size_t cursor, bool fresh_record)
        -> BackendStack
    {
        BackendStack stack;
        stack.mode = mode;
        stack.transcript = transcript;
        if ((mode == "replay" || mode == "record") && transcript.empty())
            throw Error(ErrorCode::ConfigError, "backend '" + mode + "' needs --transcript");
        if (mode == "replay")
        {
            stack.replay = std::make_unique<vlm::ReplayBackend>(vlm::load_transcript(transcript), vlm::ReplayMode::Strict,
                                                                cursor);
            return stack;
        }
        if (mode != "live" && mode != "record")
            throw Error(ErrorCode::ConfigError, "unknown backend '" + mode + "'; use live, record or replay");
        stack.live = std::make_unique<vlm::LiveBackend>(vlm::LiveConfig::from_environment());
        if (mode == "record")
        {
            if (fresh_record)
                fs::remove(transcript);
            stack.recorder = std::make_unique<vlm::RecordingBackend>(*stack.live, transcript);
        }
        return stack;
    }

    auto constraints_from(Options const& o) -> pipeline::BuildConstraints
    {
        pipeline::BuildConstraints c;
        if (o.max_components)
            c.max_components = *o.max_components;
        if (o.max_links)
            c.max_links_per_component = *o.max_links;
        c.require_symmetry = !o.no_symmetry;
        return pipeline::BuildConstraints::from_json(c.to_json());
    }

    auto tolerances_from(Options const& o) -> validate::Tolerances
    {
        validate::Tolerances t;
        if (o.tolerance_gap)
        {
            if (!(*o.tolerance_gap >= 0.0))
                throw Error(ErrorCode::ConfigError, "--tolerance-gap must be non-negative");
            t.attach_gap_max = *o.tolerance_gap;
        }
        return t;
    }

    auto parse_views(std::string const& list) -> std::vector<render::View>
    {
        std::vector<render::View> views;
        std::size_t start = 0;
        while (start <= list.size())
        {
            auto const end = std::min(list.find(',', start), list.size());
            auto const name = list.substr(start, end - start);
            if (!name.empty())
            {
                try
                {
                    views.push_back(render::parse_view(name));
                }
                catch (Error const& e)
                {
                    throw Error(ErrorCode::ConfigError, e.detail());
                }
            }
            start = end + 1;
        }
        if (views.empty())
            throw Error(ErrorCode::ConfigError, "--views names no view");
        return views;
    }

    void print_session(pipeline::SessionStore const& store, pipeline::DesignSession const& s, std::ostream& out)
    {
        auto const dir = store.session_dir(s.id);
        out << (dir / "session.json").string() << "\n";
        if (auto const* snap = s.current())
        {
            out << (dir / "model.xml").string() << "\n" << (dir / "report.json").string() << "\n";
            for (auto v: render::all_views)
                out << store.snapshot_render(s.id, snap->index, v).string() << "\n";
        }
    }

    auto summary(KinematicTree const& tree, validate::ValidationReport const& report) -> std::string
    {
        auto const counts = validate::audit_counts(tree);
        return std::to_string(counts.bodies) + " bodies, " + std::to_string(counts.joints) + " joints, "
               + std::to_string(report.errors.size()) + " errors, " + std::to_string(report.warnings.size())
               + " warnings";
    }

    auto cmd_synth(Options o, std::ostream& out) -> int
    {
        if (o.label.find_first_not_of(" \t\r\n") == std::string::npos)
            throw Error(ErrorCode::ConfigError, "label is empty");
        auto const id = o.session_id.empty() ? pipeline::session_id_for(o.label) : o.session_id;
        if (!pipeline::valid_session_id(id))
            throw Error(ErrorCode::ConfigError, "invalid session id '" + id + "'");
        auto const mode = resolved_mode(o);

        std::optional<std::string> reference;
        if (!o.reference.empty())
            reference = pipeline::read_file(o.reference);
        else if (mode == "replay" && !o.transcript.empty())
        {
            auto sidecar = fs::path(o.transcript).replace_extension(".png");
            if (fs::exists(sidecar))
                reference = pipeline::read_file(sidecar);
        }
        auto const rounds = o.visual_rounds.value_or(reference ? pipeline::max_visual_rounds : 0);
        if (rounds < 0 || rounds > pipeline::max_visual_rounds)
            throw Error(ErrorCode::ConfigError, "--visual-rounds must be within 0..3");
        if (rounds > 0 && !reference)
            throw Error(ErrorCode::MissingReference, "visual rounds need --reference");

        auto session = pipeline::new_session(id, o.label, reference, constraints_from(o), tolerances_from(o));
        auto stack = make_backend(mode, o.transcript, 0, true);
        if (mode == "record" && reference)
            pipeline::write_file(fs::path(o.transcript).replace_extension(".png"), *reference);
        session.backend = { mode, o.transcript, 0 };

        pipeline::PipelineConfig config;
        config.visual_rounds = rounds;
        pipeline::Pipeline p(stack.backend(), config);
        pipeline::SessionStore store(o.session_dir, config.render);
        fs::remove_all(store.session_dir(id));

        std::optional<pipeline::FinalResult> result;
        try
        {
            result = p.run_full(session);
        }
        catch (Error const& e)
        {
            session.error = std::string(to_string(e.code())) + ": " + e.detail();
            session.backend.cursor = stack.cursor();
            store.save(session);
            throw;
        }
        session.backend.cursor = stack.cursor();
        store.save(session);
        print_session(store, session, out);
        out << "synth " << o.label << ": " << summary(result->tree, result->report) << ", "
            << session.visual_rounds_used << " visual rounds, stage " << to_string(session.stage) << "\n";
        return result->report.passed() ? exit_codes::ok : exit_codes::validation;
    }

    auto cmd_feedback(Options o, std::ostream& out) -> int
    {
        pipeline::SessionStore store(o.session_dir);
        auto session = store.load(o.session_id);
        auto const flagged = !o.backend.empty() || !o.replay.empty() || !o.record.empty() || !o.transcript.empty();
        auto const mode = flagged ? resolved_mode(o) : session.backend.mode;
        auto const transcript = flagged ? o.transcript : session.backend.transcript;
        auto const same_transcript = mode == session.backend.mode && transcript == session.backend.transcript;
        auto stack = make_backend(mode, transcript, same_transcript ? session.backend.cursor : 0, false);
        session.backend = { mode, transcript, stack.cursor() };

        pipeline::Pipeline p(stack.backend());
        try
        {
            auto const edits = p.human_feedback(session, o.text);
            session.error.reset();
            session.backend.cursor = stack.cursor();
            store.save(session);
            print_session(store, session, out);
            auto const report = validate::validate(session.current()->tree, session.tolerances);
            out << "feedback " << session.human_prompts_used << "/" << pipeline::max_human_prompts << ": "
                << edits.size() << " edits, " << summary(session.current()->tree, report) << "\n";
            return exit_codes::ok;
        }
        catch (Error const& e)
        {
            if (e.code() == ErrorCode::EditRejected)
            {
                session.error = std::string(to_string(e.code())) + ": " + e.detail();
                session.backend.cursor = stack.cursor();
                store.save(session);
            }
            throw;
        }
    }

    auto load_model(std::string const& path) -> KinematicTree
    {
        return mjcf::parse(pipeline::read_file(path));
    }

    auto cmd_validate(Options const& o, std::ostream& out, std::ostream& err) -> int
    {
        auto const tree = load_model(o.model);
        auto const report = validate::validate(tree, tolerances_from(o));
        for (auto const& f: report.errors)
            err << "error " << to_string(f.code) << ": " << f.message << "\n";
        for (auto const& f: report.warnings)
            err << "warning " << to_string(f.code) << ": " << f.message << "\n";
        out << o.model << ": " << (report.passed() ? "passed" : "failed") << ", " << summary(tree, report) << "\n";
        return report.passed() ? exit_codes::ok : exit_codes::validation;
    }

    auto cmd_render(Options const& o, std::ostream& out) -> int
    {
        auto const tree = load_model(o.model);
        auto const views = parse_views(o.views);
        render::RenderOptions options;
        options.width = options.height = o.size;
        auto const dir = o.out.empty() ? fs::path(o.model).parent_path() / "renders" : fs::path(o.out);
        auto const framing = render::auto_framing(tree, options);
        for (auto v: views)
        {
            auto const path = dir / (std::string(render::view_name(v)) + ".png");
            pipeline::write_file(path, render::encode_png(render::render(tree, v, options, framing)));
            out << path.string() << "\n";
        }
        out << "rendered " << views.size() << " views at " << o.size << "x" << o.size << "\n";
        return exit_codes::ok;
    }

    auto cmd_export(Options const& o, std::ostream& out) -> int
    {
        pipeline::SessionStore store(o.session_dir);
        auto session = store.load(o.session_id);
        if (session.snapshots.empty())
            throw Error(ErrorCode::StageViolation, "session '" + session.id + "' has no model yet");
        auto const index = o.snapshot.value_or(session.current()->index);
        if (index < 0 || index >= static_cast<int>(session.snapshots.size()))
            throw Error(ErrorCode::NotFound, "no snapshot " + std::to_string(index));
        auto const& snap = session.snapshots[static_cast<std::size_t>(index)];
        auto const path = o.out.empty() ? fs::path(session.id + ".xml") : fs::path(o.out);
        pipeline::write_file(path, mjcf::emit(snap.tree, session.label));
        if (o.close)
        {
            vlm::CallbackBackend unused([](vlm::CompletionRequest const&) -> vlm::CompletionResponse {
                throw Error(ErrorCode::ConfigError, "finalize does not talk to the model");
            });
            pipeline::Pipeline(unused).finalize(session, true);
            store.save(session);
        }
        out << path.string() << "\n";
        out << "export " << session.id << " snapshot " << index << " (" << snap.origin << ")"
            << (session.closed ? ", session closed" : "") << "\n";
        return exit_codes::ok;
    }

    auto cmd_replay(Options o, std::ostream& out) -> int
    {
        auto const entries = vlm::load_transcript(o.transcript);
        std::set<std::string> fingerprints;
        std::size_t tool_calls = 0;
        for (auto const& e: entries)
        {
            fingerprints.insert(e.fingerprint);
            tool_calls += e.response.tool_calls.size();
        }
        out << o.transcript << ": " << entries.size() << " exchanges, " << fingerprints.size()
            << " distinct fingerprints, " << tool_calls << " tool calls\n";
        if (fingerprints.size() != entries.size())
            throw Error(ErrorCode::ConfigError, "transcript repeats a fingerprint");
        if (o.label.empty())
            return exit_codes::ok;

        std::optional<std::string> reference;
        if (!o.reference.empty())
            reference = pipeline::read_file(o.reference);
        else if (auto sidecar = fs::path(o.transcript).replace_extension(".png"); fs::exists(sidecar))
            reference = pipeline::read_file(sidecar);
        vlm::ReplayBackend backend(entries, vlm::ReplayMode::Strict);
        pipeline::PipelineConfig config;
        config.visual_rounds = o.visual_rounds.value_or(reference ? pipeline::max_visual_rounds : 0);
        pipeline::Pipeline p(backend, config);
        auto session = pipeline::new_session(pipeline::session_id_for(o.label), o.label, reference, constraints_from(o),
                                             tolerances_from(o));
        auto const result = p.run_full(session);
        out << "replay " << o.label << ": " << summary(result.tree, result.report) << ", mjcf sha256 "
            << vlm::sha256_hex(result.mjcf) << ", " << backend.cursor() << "/" << backend.size() << " exchanges used\n";
        return result.report.passed() ? exit_codes::ok : exit_codes::validation;
    }

    void add_common(CLI::App& app, Options& o)
    {
        app.add_option("--backend", o.backend, "live, record or replay");
        app.add_option("--transcript", o.transcript, "Transcript for record and replay");
        app.add_option("--replay", o.replay, "Shorthand for --backend replay --transcript PATH");
        app.add_option("--record", o.record, "Shorthand for --backend record --transcript PATH");
        app.add_option("--session-dir", o.session_dir, "Directory holding sessions");
        app.add_option("--reference", o.reference, "Reference image (PNG)");
        app.add_option("--views", o.views, "Comma-separated views: front,left,top,threequarter");
        app.add_option("--tolerance-gap", o.tolerance_gap, "Largest parent-child geom gap");
        app.add_option("--max-components", o.max_components, "Component limit for the structure plan");
        app.add_option("--max-links", o.max_links, "Link limit per component");
        app.add_flag("--no-symmetry", o.no_symmetry, "Build every body by hand, without mirroring");
        app.add_option("--visual-rounds", o.visual_rounds, "Automated visual feedback rounds, 0..3");
    }
} // namespace

auto exit_code(ErrorCode code) -> int
{
    switch (code)
    {
        case ErrorCode::ConfigError:
        case ErrorCode::InvalidArgument:
        case ErrorCode::MissingReference:
        case ErrorCode::StageViolation: return exit_codes::config;
        case ErrorCode::NotFound: return exit_codes::not_found;
        case ErrorCode::TransportError:
        case ErrorCode::RateLimited:
        case ErrorCode::TranscriptExhausted:
        case ErrorCode::FingerprintMismatch:
        case ErrorCode::NoJsonFound:
        case ErrorCode::MalformedJson:
        case ErrorCode::ImageTooLarge:
        case ErrorCode::PlanViolatesConstraints:
        case ErrorCode::ParseFailure:
        case ErrorCode::ToolCallInvalid: return exit_codes::gateway;
        case ErrorCode::BudgetExhausted:
        case ErrorCode::SessionClosed: return exit_codes::budget;
        case ErrorCode::ValidationFailed:
        case ErrorCode::EditRejected:
        case ErrorCode::AnchorSolveFailure:
        case ErrorCode::InvalidTree:
        case ErrorCode::UnsupportedElement:
        case ErrorCode::MalformedXml:
        case ErrorCode::SubsetViolation: return exit_codes::validation;
        default: return exit_codes::failure;
    }
}

auto run(std::vector<std::string> const& args, std::ostream& out, std::ostream& err) -> int
{
    CLI::App app { "Articulated robot design from a creature label" , "morphoforge" };
    app.require_subcommand(1);
    Options o;
    add_common(app, o);

    auto* synth = app.add_subcommand("synth", "Run the full pipeline for a label");
    synth->add_option("label", o.label, "Creature label")->required();
    synth->add_option("--session-id", o.session_id, "Session id (default: derived from the label)");
    auto* feedback = app.add_subcommand("feedback", "Apply one human feedback prompt");
    feedback->add_option("session", o.session_id, "Session id")->required();
    feedback->add_option("text", o.text, "Feedback text")->required();
    auto* validate_cmd = app.add_subcommand("validate", "Validate an MJCF model");
    validate_cmd->add_option("model", o.model, "model.xml")->required();
    auto* render_cmd = app.add_subcommand("render", "Render an MJCF model to PNG views");
    render_cmd->add_option("model", o.model, "model.xml")->required();
    render_cmd->add_option("--out", o.out, "Output directory (default: renders/ next to the model)");
    render_cmd->add_option("--size", o.size, "Image width and height in pixels");
    auto* export_cmd = app.add_subcommand("export", "Write a session snapshot as MJCF");
    export_cmd->add_option("session", o.session_id, "Session id")->required();
    export_cmd->add_option("--out", o.out, "Output file (default: <session>.xml)");
    export_cmd->add_option("--snapshot", o.snapshot, "Snapshot index (default: latest)");
    export_cmd->add_flag("--close", o.close, "Finalize and close the session");
    auto* replay_cmd = app.add_subcommand("replay", "Check a transcript, or replay a label against it");
    replay_cmd->add_option("transcript", o.transcript, "Transcript file")->required();
    replay_cmd->add_option("--label", o.label, "Replay the full pipeline for this label");
    for (auto* sub: { synth, feedback, validate_cmd, render_cmd, export_cmd, replay_cmd })
        sub->fallthrough();

    auto const fail = [&](std::string_view code, std::string const& message, int exit) {
        err << json { { "error", code }, { "message", message }, { "exit_code", exit } }.dump() << "\n";
        return exit;
    };

    try
    {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    }
    catch (CLI::CallForHelp const&)
    {
        out << app.help();
        return exit_codes::ok;
    }
    catch (CLI::ParseError const& e)
    {
        return fail("ConfigError", e.what(), exit_codes::config);
    }

    try
    {
        if (*synth)
            return cmd_synth(o, out);
        if (*feedback)
            return cmd_feedback(o, out);
        if (*validate_cmd)
            return cmd_validate(o, out, err);
        if (*render_cmd)
            return cmd_render(o, out);
        if (*export_cmd)
            return cmd_export(o, out);
        return cmd_replay(o, out);
    }
    catch (Error const& e)
    {
        return fail(to_string(e.code()), e.detail(), exit_code(e.code()));
    }
    catch (std::exception const& e)
    {
        return fail("Internal", e.what(), exit_codes::failure);
    }
}

} // namespace morphoforge::cli
