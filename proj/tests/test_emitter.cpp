#include <doctest.h>

#include <deque>
#include <fstream>

#include "genesis/error.hpp"
#include "fixtures.hpp"

using namespace genesis;
using fixtures::TempDir;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void spit(const fs::path& p, const std::string& s) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    out << s;
}

struct Call {
    std::string sender;
    std::string recipient;
    std::string payload;
};

/// Answers "reply-<n>" for the n-th call (from 0) and records who asked whom.
struct CountingExchange {
    std::vector<Call> calls;

    ExchangeFn fn() {
        return [this](const CompletionRequest& req, const std::string& sender, const std::string& recipient) {
            CompletionResponse r;
            r.text = "reply-" + std::to_string(calls.size());
            calls.push_back({sender, recipient, req.last_user_content()});
            return r;
        };
    }
};

struct ExpectedRun {
    std::vector<Call> calls;
    Termination how = Termination::QueueDrained;
};

/// Breadth-first delivery over the flows, written without the interpreter.
ExpectedRun expected_routing(const SystemBlueprint& bp, const std::string& input, int max_steps) {
    ExpectedRun run;
    std::deque<Call> queue{{"system", bp.entry_agent, input}};
    while (!queue.empty()) {
        Call c = queue.front();
        queue.pop_front();
        if (static_cast<int>(run.calls.size()) >= max_steps) {
            run.how = Termination::MaxSteps;
            return run;
        }
        const std::string reply = "reply-" + std::to_string(run.calls.size());
        run.calls.push_back(c);
        if (c.recipient == bp.exit_agent) {
            run.how = Termination::ExitAgent;
            return run;
        }
        for (const auto& f : bp.flows) {
            if (f.from_agent == c.recipient) queue.push_back({c.recipient, f.to_agent, reply});
        }
    }
    return run;
}

}  // namespace

TEST_CASE("emitted bundle layout") {
    TempDir dir("emit");
    auto ctx = fixtures::complete_context();
    fs::path root = emit_bundle(ctx, dir.path());
    CHECK(root == dir / ctx.blueprint->system_name);
    for (const char* f : {"manifest.json", "blueprint.json", "docs.md", "supervision.json"}) {
        CHECK(fs::is_regular_file(root / f));
    }
    for (const auto& a : ctx.blueprint->agents) {
        CHECK(slurp(root / "prompts" / (a.name + ".txt")) == ctx.generated_agents->at(a.name).system_prompt);
    }
    CHECK(std::distance(fs::directory_iterator(root / "prompts"), fs::directory_iterator{}) == 3);
    CHECK(slurp(root / "docs.md") == *ctx.documentation);
    CHECK(slurp(root / "blueprint.json") == serialize_blueprint(*ctx.blueprint));

    auto manifest = Json::parse(slurp(root / "manifest.json"));
    CHECK(manifest["format_version"] == "1");
    CHECK(manifest["system_name"] == ctx.blueprint->system_name);
    CHECK(manifest["entry_agent"] == "content_creator");
    CHECK(manifest["exit_agent"] == "content_adapter");
    CHECK(manifest["max_steps"] == kDefaultMaxSteps);
    CHECK(manifest.size() == 6);

    auto sup = Json::parse(slurp(root / "supervision.json"));
    REQUIRE(sup.is_array());
    CHECK(sup.size() == 2);
    CHECK(sup[0]["step_id"] == "draft");
    CHECK(sup[0]["worker"] == "content_creator");
    CHECK(sup[0]["approver"] == "content_manager");

    auto loaded = load_bundle(root);
    CHECK(loaded.blueprint == *ctx.blueprint);
    CHECK(loaded.docs == *ctx.documentation);
}

TEST_CASE("bundle needs a complete context") {
    auto ctx = fixtures::complete_context();
    ctx.documentation.reset();
    try {
        make_bundle(ctx);
        FAIL("expected IncompleteContext");
    } catch (const IncompleteContext& e) {
        CHECK(e.field() == "documentation");
    }
    ctx = fixtures::complete_context();
    ctx.generated_agents.reset();
    CHECK_THROWS_AS(make_bundle(ctx), IncompleteContext);
    ctx = fixtures::complete_context();
    ctx.blueprint->exit_agent = "nobody";
    CHECK_THROWS_AS(make_bundle(ctx), ValidationFailed);
    ctx = fixtures::complete_context();
    ctx.generated_agents->erase("content_manager");
    CHECK_THROWS_AS(make_bundle(ctx), ValidationFailed);
}

TEST_CASE("random bundles survive write and load") {
    TempDir dir("roundtrip");
    std::mt19937_64 rng(11);
    for (int i = 0; i < 120; ++i) {
        auto bundle = fixtures::random_bundle(rng);
        fs::path root = write_bundle(bundle, dir / ("b" + std::to_string(i)));
        CHECK(load_bundle(root) == bundle);
    }
}

TEST_CASE("rewriting a bundle replaces it") {
    TempDir dir("rewrite");
    auto b = fixtures::topology_bundle({"a", "b"}, {{"a", "b"}}, "a", "b");
    write_bundle(b, dir.path());
    b.prompts["a"] = "changed";
    b.docs = "new docs\n";
    fs::path root = write_bundle(b, dir.path());
    CHECK(load_bundle(root) == b);

    fs::create_directories(dir / "blocked" / "topology");
    spit(dir / "blocked" / "topology" / "keep.txt", "x");
    CHECK_THROWS_AS(write_bundle(b, dir / "blocked"), StorageError);
    CHECK(fs::exists(dir / "blocked" / "topology" / "keep.txt"));
}

TEST_CASE("tampered bundles are rejected") {
    TempDir dir("tamper");
    auto bundle = fixtures::topology_bundle({"alpha", "beta"}, {{"alpha", "beta"}}, "alpha", "beta");
    fs::path root = write_bundle(bundle, dir.path());
    const std::string manifest = slurp(root / "manifest.json");

    auto doc = Json::parse(manifest);
    doc["format_version"] = "2";
    spit(root / "manifest.json", doc.dump(2));
    CHECK_THROWS_AS(load_bundle(root), UnsupportedVersion);

    doc = Json::parse(manifest);
    doc["extra"] = 1;
    spit(root / "manifest.json", doc.dump(2));
    CHECK_THROWS_AS(load_bundle(root), SchemaError);

    spit(root / "manifest.json", "{\"system_name\": ");
    CHECK_THROWS_AS(load_bundle(root), ParseError);

    doc = Json::parse(manifest);
    doc["entry_agent"] = "beta";
    spit(root / "manifest.json", doc.dump(2));
    CHECK_THROWS_AS(load_bundle(root), SchemaError);
    spit(root / "manifest.json", manifest);
    CHECK_NOTHROW(load_bundle(root));

    const std::string prompt = slurp(root / "prompts" / "beta.txt");
    fs::remove(root / "prompts" / "beta.txt");
    try {
        load_bundle(root);
        FAIL("expected SchemaError");
    } catch (const SchemaError& e) {
        CHECK(std::string(e.what()).find("beta") != std::string::npos);
    }
    spit(root / "prompts" / "beta.txt", prompt);
    spit(root / "prompts" / "gamma.txt", "stray");
    CHECK_THROWS_AS(load_bundle(root), SchemaError);
    fs::remove(root / "prompts" / "gamma.txt");

    fs::remove(root / "docs.md");
    CHECK_THROWS_AS(load_bundle(root), SchemaError);
    spit(root / "docs.md", bundle.docs);

    auto bp = bundle.blueprint;
    bp.flows.push_back({"alpha", "ghost", "x"});
    spit(root / "blueprint.json", serialize_blueprint(bp));
    CHECK_THROWS_AS(load_bundle(root), ValidationFailed);

    CHECK_THROWS_AS(load_bundle(dir / "nothing"), SchemaError);
}

TEST_CASE("single echo agent") {
    auto b = fixtures::topology_bundle({"solo"}, {}, "solo", "solo");
    EchoBackend echo;
    auto r = run_generated_system(b, "hi", echo, LoopGuardConfig{});
    CHECK(r.terminated_by == Termination::ExitAgent);
    CHECK(r.final_output == "hi");
    CHECK(r.backend_calls == 1);
    CHECK(r.loop_incidents == 0);
    REQUIRE(r.transcript.messages.size() == 2);
    CHECK(r.transcript.messages[0].recipient == "solo");
    CHECK(r.transcript.messages[1].sender == "solo");
    CHECK(r.transcript.messages[1].content == "hi");
}

TEST_CASE("chain hands each reply on") {
    auto b = fixtures::topology_bundle({"a", "b"}, {{"a", "b"}}, "a", "b");
    CountingExchange ex;
    auto r = run_generated_system(b, "start", ex.fn(), LoopGuardConfig{});
    CHECK(r.terminated_by == Termination::ExitAgent);
    CHECK(r.backend_calls == 2);
    REQUIRE(ex.calls.size() == 2);
    CHECK(ex.calls[0].recipient == "a");
    CHECK(ex.calls[0].payload == "start");
    CHECK(ex.calls[1].sender == "a");
    CHECK(ex.calls[1].recipient == "b");
    CHECK(ex.calls[1].payload == "reply-0");
    CHECK(r.final_output == "reply-1");
}

TEST_CASE("cycle stops at the step limit") {
    auto b = fixtures::topology_bundle({"a", "b", "c"}, {{"a", "b"}, {"b", "a"}, {"c", "a"}}, "a", "c", 5);
    CountingExchange ex;
    auto r = run_generated_system(b, "go", ex.fn(), LoopGuardConfig{});
    CHECK(r.terminated_by == Termination::MaxSteps);
    CHECK(r.backend_calls == 5);
    CHECK(ex.calls.size() == 5);
    for (std::size_t i = 0; i < ex.calls.size(); ++i) CHECK(ex.calls[i].recipient == (i % 2 == 0 ? "a" : "b"));
}

TEST_CASE("repeated replies end through the loop guard") {
    auto b = fixtures::topology_bundle({"a", "b", "c"}, {{"a", "b"}, {"b", "a"}, {"c", "a"}}, "a", "c", 100);
    ExchangeFn same = [](const CompletionRequest&, const std::string&, const std::string&) {
        return CompletionResponse{"stuck"};
    };
    LoopGuardConfig cfg;
    auto r = run_generated_system(b, "go", same, cfg);
    CHECK(r.terminated_by == Termination::LoopAbort);
    CHECK(r.loop_incidents == cfg.max_injections + 1);
    CHECK(r.final_output == "stuck");
    // a and b each answer fresh once, then a repeats until its budget is spent
    CHECK(r.backend_calls == 2 + cfg.max_injections + 1);
}

TEST_CASE("fan-out and dead ends drain the queue") {
    auto b = fixtures::topology_bundle({"root", "left", "right", "sink"}, {{"root", "left"}, {"root", "right"}, {"sink", "root"}},
                                       "root", "sink");
    CountingExchange ex;
    auto r = run_generated_system(b, "in", ex.fn(), LoopGuardConfig{});
    CHECK(r.terminated_by == Termination::QueueDrained);
    REQUIRE(ex.calls.size() == 3);
    CHECK(ex.calls[1].recipient == "left");
    CHECK(ex.calls[2].recipient == "right");
    CHECK(ex.calls[1].payload == "reply-0");
    CHECK(ex.calls[2].payload == "reply-0");
    CHECK(r.final_output == "reply-2");
}

TEST_CASE("routing follows the flows of random bundles") {
    std::mt19937_64 rng(29);
    for (int i = 0; i < 200; ++i) {
        auto bundle = fixtures::random_bundle(rng);
        bundle.manifest.max_steps = 1 + static_cast<int>(rng() % 12);
        CountingExchange ex;
        auto r = run_generated_system(bundle, "input", ex.fn(), LoopGuardConfig{});
        auto expected = expected_routing(bundle.blueprint, "input", bundle.manifest.max_steps);
        CHECK(r.terminated_by == expected.how);
        REQUIRE(ex.calls.size() == expected.calls.size());
        for (std::size_t k = 0; k < ex.calls.size(); ++k) {
            CHECK(ex.calls[k].recipient == expected.calls[k].recipient);
            CHECK(ex.calls[k].payload == expected.calls[k].payload);
        }
        for (const auto& m : r.transcript.messages) {
            if (m.sender == kSystemParty || m.recipient == kSystemParty) continue;
            bool has_flow = false;
            for (const auto& f : bundle.blueprint.flows) has_flow |= f.from_agent == m.sender && f.to_agent == m.recipient;
            CHECK(has_flow);
        }
    }
}

TEST_CASE("interpreter failures") {
    auto b = fixtures::topology_bundle({"a", "b"}, {{"a", "b"}}, "a", "b");
    EchoBackend echo;
    CHECK_THROWS_AS(run_generated_system(b, "", echo, LoopGuardConfig{}), InvalidBundle);
    auto broken = b;
    broken.prompts.erase("b");
    CHECK_THROWS_AS(run_generated_system(broken, "x", echo, LoopGuardConfig{}), InvalidBundle);

    ExchangeFn down = [](const CompletionRequest&, const std::string&, const std::string&) -> CompletionResponse {
        throw TransportError("connection refused");
    };
    CHECK_THROWS_AS(run_generated_system(b, "x", down, LoopGuardConfig{}), BackendFailed);
    ExchangeFn failing = [](const CompletionRequest&, const std::string&, const std::string&) -> CompletionResponse {
        throw ServiceError(500, "boom");
    };
    CHECK_THROWS_AS(run_generated_system(b, "x", failing, LoopGuardConfig{}), BackendFailed);
}

TEST_CASE("termination names") {
    CHECK(to_string(Termination::ExitAgent) == "EXIT_AGENT");
    CHECK(to_string(Termination::MaxSteps) == "MAX_STEPS");
    CHECK(to_string(Termination::LoopAbort) == "LOOP_ABORT");
    CHECK(to_string(Termination::QueueDrained) == "QUEUE_DRAINED");
}
