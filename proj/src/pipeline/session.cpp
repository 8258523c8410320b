// SPDX-License-Identifier: Apache-2.0
#include <morphoforge/core/error.hpp>
#include <morphoforge/mjcf/mjcf.hpp>
#include <morphoforge/pipeline/session.hpp>
#include <morphoforge/vlm/gateway.hpp>

#include <fstream>
#include <sstream>

namespace morphoforge::pipeline
{

namespace
{
    auto tolerances_json(validate::Tolerances const& t) -> json
    {
        return { { "attach_gap_max", t.attach_gap_max },
                 { "sibling_penetration_max",
                   t.sibling_penetration_max ? json(*t.sibling_penetration_max) : json(nullptr) },
                 { "symmetry_eps", t.symmetry_eps },
                 { "anchor_eps", t.anchor_eps } };
    }

    auto tolerances_from(json const& j) -> validate::Tolerances
    {
        validate::Tolerances t;
        t.attach_gap_max = j.value("attach_gap_max", t.attach_gap_max);
        if (auto s = j.find("sibling_penetration_max"); s != j.end() && !s->is_null())
            t.sibling_penetration_max = s->get<double>();
        t.symmetry_eps = j.value("symmetry_eps", t.symmetry_eps);
        t.anchor_eps = j.value("anchor_eps", t.anchor_eps);
        return t;
    }
} // namespace

auto to_string(Stage stage) -> std::string_view
{
    switch (stage)
    {
        case Stage::Created: return "created";
        case Stage::Structured: return "structured";
        case Stage::Built: return "built";
        case Stage::VisualRefined: return "visual_refined";
        case Stage::Finalized: return "finalized";
    }
    return "created";
}

auto parse_stage(std::string_view text) -> Stage
{
    for (auto s: { Stage::Created, Stage::Structured, Stage::Built, Stage::VisualRefined, Stage::Finalized })
        if (to_string(s) == text)
            return s;
    throw Error(ErrorCode::ConfigError, "unknown stage '" + std::string(text) + "'");
}

auto DesignSession::current() const -> Snapshot const*
{
    return snapshots.empty() ? nullptr : &snapshots.back();
}

void DesignSession::advance(Stage to)
{
    if (static_cast<int>(to) > static_cast<int>(stage))
        stage = to;
}

auto DesignSession::to_json() const -> json
{
    json snaps = json::array();
    for (auto const& s: snapshots)
        snaps.push_back({ { "index", s.index }, { "origin", s.origin }, { "mjcf", mjcf::emit(s.tree, label) } });
    json entries = json::array();
    for (auto const& e: log)
        entries.push_back({ { "event", e.event }, { "detail", e.detail } });
    return {
        { "id", id },
        { "label", label },
        { "reference_sha256", reference_png ? json(vlm::sha256_hex(*reference_png)) : json(nullptr) },
        { "constraints", constraints.to_json() },
        { "tolerances", tolerances_json(tolerances) },
        { "stage", to_string(stage) },
        { "closed", closed },
        { "plan", plan ? plan->to_json()["nodes"] : json(nullptr) },
        { "snapshots", snaps },
        { "budgets",
          { { "visual_rounds_used", visual_rounds_used },
            { "visual_rounds_max", max_visual_rounds },
            { "human_prompts_used", human_prompts_used },
            { "human_prompts_max", max_human_prompts } } },
        { "log", entries },
        { "backend", { { "mode", backend.mode }, { "transcript", backend.transcript }, { "cursor", backend.cursor } } },
        { "error", error ? json(*error) : json(nullptr) },
    };
}

auto DesignSession::from_json(json const& j) -> DesignSession
{
    DesignSession s;
    try
    {
        s.id = j.at("id").get<std::string>();
        s.label = j.at("label").get<std::string>();
        s.constraints = BuildConstraints::from_json(j.value("constraints", json::object()));
        s.tolerances = tolerances_from(j.value("tolerances", json::object()));
        s.stage = parse_stage(j.at("stage").get<std::string>());
        s.closed = j.value("closed", false);
        if (auto p = j.find("plan"); p != j.end() && !p->is_null())
            s.plan = parse_plan(*p);
        for (auto const& snap: j.at("snapshots"))
            s.snapshots.push_back({ snap.at("index").get<int>(), snap.at("origin").get<std::string>(),
                                    mjcf::parse(snap.at("mjcf").get<std::string>()) });
        auto const& b = j.at("budgets");
        s.visual_rounds_used = b.at("visual_rounds_used").get<int>();
        s.human_prompts_used = b.at("human_prompts_used").get<int>();
        for (auto const& e: j.value("log", json::array()))
            s.log.push_back({ e.at("event").get<std::string>(), e.at("detail").get<std::string>() });
        if (auto be = j.find("backend"); be != j.end())
            s.backend = { be->value("mode", std::string("replay")), be->value("transcript", std::string {}),
                          be->value("cursor", std::size_t { 0 }) };
        if (auto e = j.find("error"); e != j.end() && !e->is_null())
            s.error = e->get<std::string>();
    }
    catch (json::exception const& e)
    {
        throw Error(ErrorCode::ConfigError, std::string("session document: ") + e.what());
    }
    if (s.visual_rounds_used < 0 || s.visual_rounds_used > max_visual_rounds || s.human_prompts_used < 0
        || s.human_prompts_used > max_human_prompts)
        throw Error(ErrorCode::ConfigError, "session document has budgets out of range");
    return s;
}

auto valid_session_id(std::string_view id) -> bool
{
    if (id.empty() || id.size() > 64)
        return false;
    return std::all_of(id.begin(), id.end(), [](char c) {
        return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_' || c == '-';
    });
}

auto session_id_for(std::string_view label) -> std::string
{
    std::string id;
    for (char c: label)
    {
        if (id.size() == 64)
            break;
        auto const lower = static_cast<char>(c >= 'A' && c <= 'Z' ? c - 'A' + 'a' : c);
        auto const keep = (lower >= 'a' && lower <= 'z') || (lower >= '0' && lower <= '9') || lower == '_' || lower == '-';
        id.push_back(keep ? lower : '_');
    }
    return id.empty() ? std::string("session") : id;
}

auto read_file(std::filesystem::path const& path) -> std::string
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw Error(ErrorCode::NotFound, "cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(std::filesystem::path const& path, std::string_view bytes)
{
    std::error_code ec;
    if (path.has_parent_path())
        std::filesystem::create_directories(path.parent_path(), ec);
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out || !out.write(bytes.data(), static_cast<std::streamsize>(bytes.size())))
            throw Error(ErrorCode::IoError, "cannot write " + path.string());
    }
    std::filesystem::rename(tmp, path, ec);
    if (ec)
        throw Error(ErrorCode::IoError, "cannot move " + tmp.string() + " into place: " + ec.message());
}

SessionStore::SessionStore(std::filesystem::path root, render::RenderOptions render):
    _root(std::move(root)), _render(render)
{
}

auto SessionStore::session_dir(std::string const& id) const -> std::filesystem::path
{
    if (!valid_session_id(id))
        throw Error(ErrorCode::NotFound, "invalid session id '" + id + "'");
    return _root / id;
}

auto SessionStore::exists(std::string const& id) const -> bool
{
    return valid_session_id(id) && std::filesystem::exists(_root / id / "session.json");
}

auto SessionStore::snapshot_model(std::string const& id, int k) const -> std::filesystem::path
{
    return session_dir(id) / "snapshots" / std::to_string(k) / "model.xml";
}

auto SessionStore::snapshot_render(std::string const& id, int k, render::View view) const -> std::filesystem::path
{
    return session_dir(id) / "snapshots" / std::to_string(k) / (std::string(render::view_name(view)) + ".png");
}

auto SessionStore::store_reference(std::string const& png) const -> std::string
{
    auto const digest = vlm::sha256_hex(png);
    auto const path = _root / "references" / (digest + ".png");
    if (!std::filesystem::exists(path))
        write_file(path, png);
    return digest;
}

void SessionStore::save(DesignSession const& session) const
{
    auto const dir = session_dir(session.id);
    if (session.reference_png)
        (void)store_reference(*session.reference_png);

    for (auto const& snap: session.snapshots)
    {
        auto const model = snapshot_model(session.id, snap.index);
        if (!std::filesystem::exists(model))
            write_file(model, mjcf::emit(snap.tree, session.label));
        auto const missing = std::any_of(render::all_views.begin(), render::all_views.end(), [&](render::View v) {
            return !std::filesystem::exists(snapshot_render(session.id, snap.index, v));
        });
        if (!missing)
            continue;
        auto const views = render::render_contact_views(snap.tree, _render);
        for (std::size_t v = 0; v < views.size(); ++v)
            write_file(snapshot_render(session.id, snap.index, render::all_views[v]), render::encode_png(views[v]));
    }
    if (auto const* snap = session.current())
    {
        write_file(dir / "model.xml", mjcf::emit(snap->tree, session.label));
        write_file(dir / "report.json", validate::validate(snap->tree, session.tolerances).to_json().dump(2) + "\n");
    }
    write_file(dir / "session.json", session.to_json().dump(2) + "\n");
}

auto SessionStore::load(std::string const& id) const -> DesignSession
{
    if (!exists(id))
        throw Error(ErrorCode::NotFound, "no session '" + id + "' under " + _root.string());
    auto const text = read_file(session_dir(id) / "session.json");
    auto const j = json::parse(text, nullptr, false);
    if (j.is_discarded())
        throw Error(ErrorCode::ConfigError, "session.json of '" + id + "' is not JSON");
    auto session = DesignSession::from_json(j);
    if (auto sha = j.find("reference_sha256"); sha != j.end() && !sha->is_null())
        session.reference_png = read_file(_root / "references" / (sha->get<std::string>() + ".png"));
    return session;
}

} // namespace morphoforge::pipeline
