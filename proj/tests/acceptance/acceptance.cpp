// SPDX-License-Identifier: Apache-2.0
// Acceptance gate: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include "fixtures/creatures.hpp"
#include "fixtures/mutations.hpp"
#include "support/oracles.hpp"

#include <morphoforge/cli/cli.hpp>
#include <morphoforge/geometry/kernel.hpp>
#include <morphoforge/mjcf/mjcf.hpp>
#include <morphoforge/pipeline/pipeline.hpp>
#include <morphoforge/render/renderer.hpp>
#include <morphoforge/validate/validator.hpp>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <numbers>
#include <sstream>

using namespace morphoforge;
namespace fs = std::filesystem;
using nlohmann::json;

namespace
{
fs::path const transcripts = fs::path(MORPHOFORGE_ASSET_DIR) / "transcripts";

struct Outcome
{
    bool passed;
    std::string detail;
};

auto seconds_since(std::chrono::steady_clock::time_point start) -> double
{
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

auto fmt(double v) -> std::string
{
    std::ostringstream s;
    s.precision(3);
    s << v;
    return s.str();
}

auto scratch(std::string const& name) -> fs::path
{
    auto dir = fs::temp_directory_path() / ("morphoforge_acceptance_" + name);
    fs::remove_all(dir);
    return dir;
}

auto synth(std::string const& label, fs::path const& sessions) -> int
{
    std::ostringstream out, err;
    auto const code = cli::run({ "synth", label, "--replay", (transcripts / (label + ".jsonl")).string(),
                                 "--session-dir", sessions.string() },
                               out, err);
    if (code != 0)
        std::cerr << label << ": " << err.str();
    return code;
}

auto geometry_oracle() -> Outcome
{
    auto const start = std::chrono::steady_clock::now();
    std::mt19937_64 rng(7);
    double worst = 0.0;
    int rays = 0;
    for (int kind = 0; kind < 3; ++kind)
        for (int i = 0; i < 1000; ++i)
        {
            geometry::PosedShape const shape { oracle::random_shape(rng, kind), oracle::random_unit(rng),
                                               oracle::random_orientation(rng) };
            geometry::GrowthRay const ray { oracle::random_interior_point(rng, shape), oracle::random_unit(rng) };
            worst = std::max(worst, std::abs(geometry::ray_surface_alpha(shape, ray) - oracle::bisect_alpha(shape, ray)));
            ++rays;
        }
    auto const elapsed = seconds_since(start);
    return { worst <= 1e-6 && elapsed < 5.0,
             std::to_string(rays) + " rays, worst |alpha - bisection| = " + fmt(worst) + ", " + fmt(elapsed) + " s" };
}

auto fixture_reproduction() -> Outcome
{
    auto const a = scratch("fixtures_a");
    auto const b = scratch("fixtures_b");
    std::string detail;
    bool ok = true;
    for (auto const* label: { "turtle", "crab", "rabbit" })
    {
        if (synth(label, a) != 0 || synth(label, b) != 0)
            return { false, std::string(label) + " synth failed" };
        auto const bytes = pipeline::read_file(a / label / "model.xml");
        auto const identical = bytes == pipeline::read_file(b / label / "model.xml");
        auto const tree = mjcf::parse(bytes);
        auto const counts = validate::audit_counts(tree);
        auto const report = validate::validate(tree);
        ok = ok && identical && report.passed();
        detail += std::string(detail.empty() ? "" : "; ") + label + " " + std::to_string(counts.bodies) + "/"
                  + std::to_string(counts.joints) + ", " + std::to_string(report.errors.size()) + " errors"
                  + (identical ? ", identical bytes" : ", BYTES DIFFER");
        if (std::string(label) == "turtle")
            ok = ok && counts == validate::Counts { 7, 6 };
        if (std::string(label) == "crab")
            ok = ok && counts == validate::Counts { 31, 30 };
        if (std::string(label) == "rabbit")
        {
            auto const match = fixtures::parent_map(tree) == fixtures::rabbit_parent_map();
            ok = ok && match;
            detail += match ? ", parent map matches" : ", PARENT MAP DIFFERS";
        }
    }
    fs::remove_all(a);
    fs::remove_all(b);
    return { ok, detail };
}

auto mutation_suite() -> Outcome
{
    auto const r = fixtures::run_mutation_suite();
    bool ok = r.false_positives == 0 && r.classes.size() >= 4;
    std::string detail;
    for (auto const& c: r.classes)
    {
        ok = ok && c.mutants >= 20 && c.detected == c.mutants;
        detail += c.name + " " + std::to_string(c.detected) + "/" + std::to_string(c.mutants) + ", ";
    }
    return { ok, detail + std::to_string(r.false_positives) + " false positives" };
}

/// Exact equality of every body field, matched by name with parents compared by name,
/// so storage order does not matter.
auto same_bodies(KinematicTree const& a, KinematicTree const& b) -> bool
{
    if (a.size() != b.size())
        return false;
    auto const parent_name = [](KinematicTree const& t, BodyNode const& n) {
        return n.parent ? t.node(*n.parent).name : std::string {};
    };
    for (auto const& x: a.nodes())
    {
        auto const id = b.find(x.name);
        if (!id)
            return false;
        auto const& y = b.node(*id);
        if (parent_name(a, x) != parent_name(b, y))
            return false;
        auto xs = x;
        auto ys = y;
        xs.parent = ys.parent = std::nullopt;
        if (!(xs == ys))
            return false;
    }
    return true;
}

auto mjcf_round_trip() -> Outcome
{
    std::mt19937_64 rng(99);
    int equal = 0;
    int total = 0;
    for (int i = 0; i < 200; ++i, ++total)
    {
        auto const tree = fixtures::random_tree(rng, 20);
        equal += same_bodies(mjcf::parse(mjcf::emit(tree)), tree);
    }
    for (auto const& design: fixtures::all_designs())
    {
        auto const tree = fixtures::build_tree(design);
        equal += mjcf::parse(mjcf::emit(tree, design.label)) == tree;
        ++total;
    }
    return { equal == total, std::to_string(equal) + "/" + std::to_string(total) + " trees equal after parse(emit(T))" };
}

auto budgets() -> Outcome
{
    auto const load = [](std::string const& label) {
        return std::make_unique<vlm::ReplayBackend>(vlm::load_transcript(transcripts / (label + ".jsonl")));
    };
    auto const code_of = [](auto&& fn) -> std::optional<ErrorCode> {
        try
        {
            fn();
        }
        catch (Error const& e)
        {
            return e.code();
        }
        return std::nullopt;
    };

    auto rabbit_backend = load("rabbit");
    pipeline::Pipeline rabbit(*rabbit_backend);
    auto r = pipeline::new_session("rabbit", "rabbit", pipeline::read_file(transcripts / "rabbit.png"));
    rabbit.run_full(r);
    auto const fourth_round = code_of([&] { rabbit.visual_feedback_round(r); });

    auto turtle_backend = load("turtle");
    pipeline::Pipeline turtle(*turtle_backend);
    auto t = pipeline::new_session("turtle", "turtle", pipeline::read_file(transcripts / "turtle.png"));
    turtle.run_full(t);
    for (auto const* text: { "Make the legs shorter", "Make the shell a darker green", "Lift the head a little" })
        turtle.human_feedback(t, text);
    auto const fourth_prompt = code_of([&] { turtle.human_feedback(t, "Make the legs shorter"); });

    auto const ok = r.visual_rounds_used == 3 && fourth_round == ErrorCode::BudgetExhausted
                    && t.human_prompts_used == 3 && fourth_prompt == ErrorCode::BudgetExhausted;
    return { ok, "visual rounds used " + std::to_string(r.visual_rounds_used) + ", 4th round "
                     + (fourth_round ? std::string(to_string(*fourth_round)) : "accepted") + "; human prompts used "
                     + std::to_string(t.human_prompts_used) + ", 4th prompt "
                     + (fourth_prompt ? std::string(to_string(*fourth_prompt)) : "accepted") };
}

auto renderer() -> Outcome
{
    auto const crab = fixtures::build_tree(fixtures::crab());
    bool identical = true;
    for (auto v: render::all_views)
        identical = identical
                    && render::encode_png(render::render(crab, v)) == render::encode_png(render::render(crab, v));

    KinematicTree sphere;
    BodyNode n;
    n.name = "ball";
    n.joint = Free {};
    n.geom.shape = Ellipsoid { { 1, 1, 1 } };
    n.geom.color = { 1, 0, 0, 1 };
    sphere.add_node(std::nullopt, n);
    auto const img = render::render(sphere, render::View::Front, {}, render::Framing { { 0, 0, 0 }, 128.0 });
    std::size_t covered = 0;
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x)
        {
            auto const p = img.pixel(x, y);
            covered += !(p[0] == 255 && p[1] == 255 && p[2] == 255);
        }
    auto const expected = std::numbers::pi * 128.0 * 128.0;
    auto const error = std::abs(static_cast<double>(covered) / expected - 1.0);
    return { identical && error < 0.02 && img.width == 512 && img.height == 512,
             std::string(identical ? "byte-identical re-renders" : "RE-RENDERS DIFFER") + ", sphere area error "
                 + fmt(100.0 * error) + "% at 512x512" };
}

auto end_to_end() -> Outcome
{
    unsetenv("MORPHOFORGE_VLM_URL");
    unsetenv("MORPHOFORGE_VLM_KEY");
    auto const manifest = json::parse(pipeline::read_file(transcripts / "manifest.json"));
    auto const dir = scratch("e2e");
    auto const start = std::chrono::steady_clock::now();
    int failures = 0;
    int runs = 0;
    for (auto const& entry: manifest["transcripts"])
    {
        failures += synth(entry["label"].get<std::string>(), dir) != 0;
        ++runs;
    }
    auto const elapsed = seconds_since(start);
    fs::remove_all(dir);
    return { failures == 0 && runs >= 4 && elapsed < 60.0,
             std::to_string(runs - failures) + "/" + std::to_string(runs) + " transcripts, " + fmt(elapsed)
                 + " s with no endpoint configured" };
}
} // namespace

auto main() -> int
{
    std::vector<std::pair<std::string, std::function<Outcome()>>> const criteria {
        { "geometry oracle suite", geometry_oracle },
        { "fixture reproduction", fixture_reproduction },
        { "validator mutation suite", mutation_suite },
        { "mjcf round-trip", mjcf_round_trip },
        { "budget enforcement", budgets },
        { "renderer", renderer },
        { "end-to-end replay", end_to_end },
    };
    int failed = 0;
    for (auto const& [name, check]: criteria)
    {
        Outcome outcome { false, "" };
        try
        {
            outcome = check();
        }
        catch (std::exception const& e)
        {
            outcome = { false, std::string("threw ") + e.what() };
        }
        failed += !outcome.passed;
        std::cout << (outcome.passed ? "PASS " : "FAIL ") << name << ": " << outcome.detail << std::endl;
    }
    return failed == 0 ? 0 : 1;
}
