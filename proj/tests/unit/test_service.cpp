// SPDX-License-Identifier: Apache-2.0
#include "fixtures/designer.hpp"

#include <morphoforge/mjcf/mjcf.hpp>
#include <morphoforge/render/renderer.hpp>
#include <morphoforge/service/service.hpp>

#include <catch2/catch_amalgamated.hpp>
#include <httplib.h>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <thread>

using namespace morphoforge;
namespace fs = std::filesystem;
using nlohmann::json;
using namespace std::chrono_literals;

namespace
{
fs::path const transcripts = fs::path(MORPHOFORGE_ASSET_DIR) / "transcripts";

auto scratch(std::string const& name) -> fs::path
{
    auto dir = fs::temp_directory_path() / ("morphoforge_service_" + name);
    fs::remove_all(dir);
    return dir;
}

auto replay_config(fs::path const& dir) -> service::ServiceConfig
{
    service::ServiceConfig c;
    c.session_dir = dir;
    c.transcript_dir = transcripts;
    return c;
}

struct Running
{
    service::SessionService service;
    int port;
    httplib::Client client;

    explicit Running(service::ServiceConfig config, service::BackendFactory factory = {}):
        service(std::move(config), std::move(factory)), port(service.start()), client("127.0.0.1", port)
    {
        client.set_read_timeout(60, 0);
    }
};

auto create(httplib::Client& client, std::string const& label, std::optional<std::string> image) -> httplib::Result
{
    httplib::MultipartFormDataItems items { { "label", label, "", "" } };
    if (image)
        items.push_back({ "reference", *image, "reference.png", "image/png" });
    return client.Post("/sessions", items);
}

auto get_json(httplib::Client& client, std::string const& path) -> json
{
    auto const r = client.Get(path);
    REQUIRE(r);
    REQUIRE(r->status == 200);
    return json::parse(r->body);
}

auto wait_for(httplib::Client& client, std::string const& id, std::string const& stage) -> json
{
    auto const deadline = std::chrono::steady_clock::now() + 60s;
    for (;;)
    {
        auto const j = get_json(client, "/sessions/" + id);
        if ((j["stage"] == stage && !j["running"].get<bool>()) || !j["error"].is_null())
            return j;
        if (std::chrono::steady_clock::now() > deadline)
            FAIL("session " << id << " stuck at " << j["stage"]);
        std::this_thread::sleep_for(20ms);
    }
}

auto feedback(httplib::Client& client, std::string const& id, std::string const& text) -> httplib::Result
{
    return client.Post("/sessions/" + id + "/feedback", json { { "text", text } }.dump(), "application/json");
}

auto reference(std::string const& label) -> std::string
{
    return pipeline::read_file(transcripts / (label + ".png"));
}
} // namespace

TEST_CASE("rabbit under replay reaches visual refinement")
{
    auto const dir = scratch("rabbit");
    Running s(replay_config(dir));
    auto const r = create(s.client, "rabbit", reference("rabbit"));
    REQUIRE(r);
    REQUIRE(r->status == 201);
    auto const created = json::parse(r->body);
    auto const id = created["id"].get<std::string>();
    CHECK(r->get_header_value("Location") == "/sessions/" + id);

    auto const done = wait_for(s.client, id, "visual_refined");
    CHECK(done["error"].is_null());
    CHECK(done["budgets"]["visual_rounds_used"] == 3);
    CHECK(done["budgets"]["human_prompts_remaining"] == 3);
    CHECK(done["snapshot_index"] == 3);
    CHECK(done["snapshots"].size() == 4);

    auto const model = s.client.Get(done["links"]["model"].get<std::string>());
    REQUIRE(model);
    CHECK(model->status == 200);
    CHECK(model->body == pipeline::read_file(dir / id / "snapshots" / "3" / "model.xml"));
    CHECK(model->body == pipeline::read_file(dir / id / "model.xml"));
    CHECK(fixtures::parent_map(mjcf::parse(model->body)) == fixtures::rabbit_parent_map());

    auto const png = s.client.Get(done["links"]["renders"]["threequarter"].get<std::string>());
    REQUIRE(png);
    CHECK(png->status == 200);
    auto const image = render::decode_png(png->body);
    CHECK(image.width == 512);

    CHECK(s.client.Get("/sessions/" + id + "/snapshots/9/model.xml")->status == 404);
    CHECK(s.client.Get("/sessions/" + id + "/snapshots/0/render/sideways.png")->status == 404);
    CHECK(get_json(s.client, "/healthz")["status"] == "ok");
}

TEST_CASE("create rejects bad input")
{
    auto const dir = scratch("bad_input");
    Running s(replay_config(dir));

    auto const empty = create(s.client, "   ", std::nullopt);
    REQUIRE(empty);
    CHECK(empty->status == 400);
    auto const body = json::parse(empty->body);
    CHECK(body["code"] == "InvalidArgument");
    CHECK(body.contains("message"));

    CHECK(create(s.client, "rabbit", std::string("GIF89a not an image"))->status == 400);
    CHECK(create(s.client, "rabbit", "\x89PNG\r\n\x1a\n" + std::string(service::max_reference_bytes, 'x'))->status
          == 400);
    CHECK(s.client.Post("/sessions", "{not json", "application/json")->status == 400);
    CHECK(s.client.Post("/sessions", R"({"label":"rabbit","constraints":{"max_components":0}})", "application/json")
              ->status
          == 400);

    // No transcript for this label: the replay backend is unavailable.
    auto const dragon = create(s.client, "dragon", std::nullopt);
    CHECK(dragon->status == 503);
    CHECK_FALSE(fs::exists(dir / "dragon-1"));

    CHECK(s.client.Get("/sessions/nobody")->status == 404);
    CHECK(feedback(s.client, "nobody", "hello")->status == 404);
    CHECK(s.client.Post("/sessions/nobody/finalize", "", "application/json")->status == 404);
}

TEST_CASE("three prompts then 409")
{
    auto const dir = scratch("turtle");
    Running s(replay_config(dir));
    auto const r = create(s.client, "turtle", reference("turtle"));
    REQUIRE(r->status == 201);
    auto const id = json::parse(r->body)["id"].get<std::string>();
    wait_for(s.client, id, "visual_refined");

    auto const first_model = s.client.Get("/sessions/" + id + "/snapshots/0/model.xml")->body;
    CHECK(feedback(s.client, id, "   ")->status == 400);
    int index = 0;
    for (auto const* text: { "Make the legs shorter", "Make the shell a darker green", "Lift the head a little" })
    {
        auto const f = feedback(s.client, id, text);
        REQUIRE(f);
        INFO(f->body);
        CHECK(f->status == 200);
        auto const j = json::parse(f->body);
        CHECK(j["snapshot_index"] == ++index);
        CHECK(j["budgets"]["human_prompts_remaining"] == 3 - index);
    }
    auto const fourth = feedback(s.client, id, "Make the legs shorter");
    CHECK(fourth->status == 409);
    CHECK(json::parse(fourth->body)["code"] == "BudgetExhausted");
    CHECK(s.client.Get("/sessions/" + id + "/snapshots/0/model.xml")->body == first_model);

    auto const fin = s.client.Post("/sessions/" + id + "/finalize", "", "application/json");
    CHECK(fin->status == 200);
    CHECK(json::parse(fin->body)["stage"] == "finalized");
    CHECK(json::parse(fin->body)["closed"] == true);

    // A fresh service over the same directory sees the stored session.
    s.service.stop();
    Running again(replay_config(dir));
    auto const j = get_json(again.client, "/sessions/" + id);
    CHECK(j["budgets"]["human_prompts_used"] == 3);
    CHECK(j["closed"] == true);
    CHECK(again.client.Get("/sessions/" + id + "/snapshots/3/model.xml")->body
          == pipeline::read_file(dir / id / "model.xml"));
}

TEST_CASE("a rejected edit leaves the snapshot alone")
{
    auto script = fixtures::designer_script("turtle");
    script.human.push_back({ "Make one flipper huge",
                             json::array({ { { "op", "set_size" },
                                             { "node", "flipper_front_left" },
                                             { "size", { 0.07, 0.3, 0.015 } } } }) });
    auto const dir = scratch("rejected");
    Running s(replay_config(dir), [script](pipeline::DesignSession const&) {
        return std::make_unique<vlm::CallbackBackend>(fixtures::designer_handler(script));
    });
    auto const id = json::parse(create(s.client, "turtle", reference("turtle"))->body)["id"].get<std::string>();
    auto const before = wait_for(s.client, id, "visual_refined");
    auto const f = feedback(s.client, id, "Make one flipper huge");
    CHECK(f->status == 422);
    CHECK(json::parse(f->body)["code"] == "EditRejected");
    auto const after = get_json(s.client, "/sessions/" + id);
    CHECK(after["snapshot_index"] == before["snapshot_index"]);
    CHECK(after["budgets"]["human_prompts_used"] == 1);
    CHECK(feedback(s.client, id, "Make the legs shorter")->status == 200);
}

TEST_CASE("concurrent feedback on one session")
{
    auto script = fixtures::designer_script("turtle");
    auto const dir = scratch("concurrent");
    Running s(replay_config(dir), [script](pipeline::DesignSession const&) {
        return std::make_unique<vlm::CallbackBackend>(
            [inner = fixtures::designer_handler(script)](vlm::CompletionRequest const& r) {
                if (r.tools.empty())
                    std::this_thread::sleep_for(200ms);
                return inner(r);
            });
    });
    auto const id = json::parse(create(s.client, "turtle", std::nullopt)->body)["id"].get<std::string>();
    wait_for(s.client, id, "visual_refined");

    for (int attempt = 0; attempt < 2; ++attempt)
    {
        int statuses[2] = { 0, 0 };
        std::thread a([&] {
            httplib::Client c("127.0.0.1", s.port);
            statuses[0] = feedback(c, id, "Make the legs shorter")->status;
        });
        std::thread b([&] {
            httplib::Client c("127.0.0.1", s.port);
            statuses[1] = feedback(c, id, "Make the shell a darker green")->status;
        });
        a.join();
        b.join();
        std::sort(std::begin(statuses), std::end(statuses));
        CHECK(statuses[0] == 200);
        CHECK(statuses[1] == 409);
    }
    CHECK(get_json(s.client, "/sessions/" + id)["budgets"]["human_prompts_used"] == 2);
}

TEST_CASE("live backend failures")
{
    auto const dir = scratch("live");
    SECTION("no endpoint configured")
    {
        unsetenv("MORPHOFORGE_VLM_URL");
        unsetenv("MORPHOFORGE_VLM_KEY");
        auto config = replay_config(dir);
        config.backend = "live";
        Running s(config);
        CHECK(create(s.client, "rabbit", std::nullopt)->status == 503);
    }
    SECTION("gateway outage surfaces as an error state")
    {
        auto config = replay_config(dir);
        config.backend = "live";
        Running s(config, [](pipeline::DesignSession const&) {
            vlm::LiveConfig live;
            live.url = "http://127.0.0.1:9/v1/chat/completions";
            live.api_key = "k";
            live.timeout = std::chrono::seconds(2);
            return std::make_unique<vlm::LiveBackend>(live, vlm::Transport {}, [](std::chrono::milliseconds) {});
        });
        auto const r = create(s.client, "rabbit", std::nullopt);
        REQUIRE(r->status == 201);
        auto const j = wait_for(s.client, json::parse(r->body)["id"].get<std::string>(), "never");
        CHECK(j["stage"] == "created");
        CHECK(j["error"].get<std::string>().starts_with("TransportError"));
    }
}
