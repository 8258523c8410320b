// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <morphoforge/pipeline/plan.hpp>
#include <morphoforge/render/renderer.hpp>
#include <morphoforge/validate/validator.hpp>

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace morphoforge::pipeline
{

enum class Stage
{
    Created,
    Structured,
    Built,
    VisualRefined,
    Finalized,
};

[[nodiscard]] auto to_string(Stage stage) -> std::string_view;
/// Throws ConfigError.
[[nodiscard]] auto parse_stage(std::string_view text) -> Stage;

/// One committed model. Committed trees always pass validation.
struct Snapshot
{
    int index = 0;
    /// "build", "visual:<round>" or "human:<prompt>".
    std::string origin;
    KinematicTree tree;
};

struct LogEntry
{
    std::string event;
    std::string detail;
};

/// Which backend a session talks to; replay sessions resume from `cursor`.
struct BackendRef
{
    std::string mode = "replay";
    std::string transcript;
    std::size_t cursor = 0;
};

struct DesignSession
{
    std::string id;
    std::string label;
    /// Encoded reference image, kept next to the sessions under its SHA-256.
    std::optional<std::string> reference_png;
    BuildConstraints constraints;
    validate::Tolerances tolerances;
    Stage stage = Stage::Created;
    /// Set by an explicit finalize; no further feedback is accepted.
    bool closed = false;
    std::optional<StructurePlan> plan;
    std::vector<Snapshot> snapshots;
    int visual_rounds_used = 0;
    int human_prompts_used = 0;
    std::vector<LogEntry> log;
    BackendRef backend;
    /// Last stage failure, kept for pollers.
    std::optional<std::string> error;

    [[nodiscard]] auto current() const -> Snapshot const*;
    /// Raises the stage; never lowers it.
    void advance(Stage to);

    /// Snapshots are stored as MJCF text.
    [[nodiscard]] auto to_json() const -> nlohmann::json;
    /// The reference bytes are not part of the document; the store fills them in.
    [[nodiscard]] static auto from_json(nlohmann::json const& j) -> DesignSession;
};

/// Directory layout:
///   <root>/references/<sha256>.png
///   <root>/<id>/session.json, model.xml, report.json
///   <root>/<id>/snapshots/<k>/model.xml and <view>.png
class SessionStore
{
  public:
    explicit SessionStore(std::filesystem::path root, render::RenderOptions render = {});

    [[nodiscard]] auto root() const -> std::filesystem::path const& { return _root; }
    [[nodiscard]] auto session_dir(std::string const& id) const -> std::filesystem::path;
    [[nodiscard]] auto exists(std::string const& id) const -> bool;

    /// Writes session.json, the latest model.xml and report.json, and every snapshot
    /// not yet on disk. Snapshot files are never rewritten.
    void save(DesignSession const& session) const;
    /// Throws NotFound.
    [[nodiscard]] auto load(std::string const& id) const -> DesignSession;

    /// Stores the bytes under their SHA-256 and returns the digest.
    auto store_reference(std::string const& png) const -> std::string;

    [[nodiscard]] auto snapshot_model(std::string const& id, int k) const -> std::filesystem::path;
    [[nodiscard]] auto snapshot_render(std::string const& id, int k, render::View view) const
        -> std::filesystem::path;

  private:
    std::filesystem::path _root;
    render::RenderOptions _render;
};

/// Valid session ids: 1-64 characters from [A-Za-z0-9_-].
[[nodiscard]] auto valid_session_id(std::string_view id) -> bool;

/// Lower-cased label with anything outside [a-z0-9_-] replaced by '_', at most 64 characters.
[[nodiscard]] auto session_id_for(std::string_view label) -> std::string;

/// Reads a whole file. Throws NotFound.
[[nodiscard]] auto read_file(std::filesystem::path const& path) -> std::string;
/// Writes atomically through a temporary file. Throws IoError.
void write_file(std::filesystem::path const& path, std::string_view bytes);

} // namespace morphoforge::pipeline
