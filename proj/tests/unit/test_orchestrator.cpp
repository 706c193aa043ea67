#include <mutex>
#include <set>

#include "check.hpp"
#include "salam/orchestrator.hpp"

using namespace salam;
using student::PromptMode;

namespace {

const embed::HashingEmbedder kEmbedder;

backends::ScriptedBackend json_assistant() {
    return backends::ScriptedBackend({}, R"({"Explanation":"e","Guideline":"Count the days carefully."})");
}

std::vector<core::TaskExample> numbered(std::size_t n, const std::string& task = "t") {
    std::vector<core::TaskExample> out;
    for (std::size_t i = 0; i < n; ++i) {
        out.push_back(fixtures::make(task + "-" + std::to_string(i), task,
                                     "Question number " + std::to_string(i) + " about " + task + "?",
                                     {"first", "second", "third"}, 1));
    }
    return out;
}

}  // namespace

TEST_CASE("worked example: fail at iteration 0, pass at iteration 1") {
    const auto ex = fixtures::jane();
    std::vector<std::string> prompts;
    backends::FunctionBackend student(
        [&](std::string_view prompt, const backends::GenParams&) {
            prompts.emplace_back(prompt);
            return std::string(prompt.find("Previous wrong answer") != std::string_view::npos ? "02/12/2002"
                                                                                               : "02/11/2002");
        },
        "jane-student");
    auto assistant_backend = json_assistant();
    memory::Store store(memory::Polarity::mistakes, kEmbedder.dim());
    memory::Store correct(memory::Polarity::correct, kEmbedder.dim());
    orchestrator::TrainingConfig cfg;
    auto result =
        orchestrator::training_pass(std::vector{ex}, student, assistant_backend, kEmbedder, store, cfg, &correct);

    REQUIRE(result.rewards.size() == 2);
    CHECK(result.rewards[0] == core::RewardRecord("jane", 0, 0));
    CHECK(result.rewards[1] == core::RewardRecord("jane", 1, 1));
    REQUIRE(store.size() == 1);
    CHECK(store.entry(0).key == student::query_block(ex));
    CHECK(store.entry(0).target == "(A) 02/12/2002");
    CHECK(store.entry(0).wrong_answers == std::vector<std::string>{"02/11/2002"});
    CHECK(store.entry(0).guideline->guideline() == "Count the days carefully.");
    CHECK(correct.empty());
    REQUIRE(prompts.size() == 2);
    CHECK(prompts[0] == student::query_block(ex) + "\nThe answer is");
    CHECK(prompts[1] == student::query_block(ex) + ".\nPrevious wrong answer is (B). The correct answer is (A).\n\n" +
                            student::query_block(ex) + "\nThe correct answer is");
}

TEST_CASE("training stores every failure and fills the correct store") {
    auto train = numbered(6);
    backends::FunctionBackend student(
        [](std::string_view prompt, const backends::GenParams&) {
            // Even questions are answered right immediately; odd ones never.
            const bool even = prompt.find("number 0 ") != std::string_view::npos ||
                              prompt.find("number 2 ") != std::string_view::npos ||
                              prompt.find("number 4 ") != std::string_view::npos;
            return std::string(even ? "(B)" : "(C)");
        },
        "s");
    auto a = json_assistant();
    memory::Store store(memory::Polarity::mistakes, kEmbedder.dim());
    memory::Store correct(memory::Polarity::correct, kEmbedder.dim());
    orchestrator::TrainingConfig cfg;
    cfg.max_iters = 3;
    auto result = orchestrator::training_pass(train, student, a, kEmbedder, store, cfg, &correct);
    CHECK(store.size() == 3);
    CHECK(correct.size() == 3);
    CHECK(result.rewards.size() == 3 + 3 * 3);
    for (const auto& e : store.entries()) CHECK(e.wrong_answers == std::vector<std::string>{"(C)"});
    for (const auto& e : correct.entries()) CHECK(e.target == "(B) second");
}

TEST_CASE("feedback fraction selects exactly round(f * n) entries") {
    CHECK(orchestrator::feedback_count(100, 0.1) == 10);
    CHECK(orchestrator::feedback_count(7, 0.5) == 4);
    CHECK(orchestrator::feedback_count(3, 1.0) == 3);
    auto a = orchestrator::select_feedback_entries(100, 0.1, 9);
    CHECK(a == orchestrator::select_feedback_entries(100, 0.1, 9));
    CHECK(std::is_sorted(a.begin(), a.end()));
    CHECK(std::set<std::size_t>(a.begin(), a.end()).size() == 10);

    auto train = numbered(100);
    backends::ScriptedBackend wrong({}, "(A)");
    auto inner = json_assistant();
    backends::CountingBackend counting(inner);
    memory::Store store(memory::Polarity::mistakes, kEmbedder.dim());
    orchestrator::TrainingConfig cfg;
    cfg.max_iters = 1;
    cfg.feedback_fraction = 0.1;
    cfg.seed = 9;
    auto result = orchestrator::training_pass(train, wrong, counting, kEmbedder, store, cfg);
    CHECK(store.size() == 100);
    CHECK(result.feedback_entries == a);
    CHECK(result.annotation.annotated == 10);
    CHECK(counting.calls() == 10);
    std::size_t with = 0;
    for (const auto& e : store.entries()) with += e.guideline ? 1 : 0;
    CHECK(with == 10);

    cfg.feedback_fraction = 0.0;
    CHECK_KIND(orchestrator::training_pass(train, wrong, counting, kEmbedder, store, cfg), ErrorKind::invalid_argument);
    cfg.feedback_fraction = 1.0;
    cfg.max_iters = 0;
    CHECK_KIND(orchestrator::training_pass(train, wrong, counting, kEmbedder, store, cfg), ErrorKind::invalid_argument);
}

TEST_CASE("blank responses are stored with a placeholder") {
    backends::ScriptedBackend blank({}, "  ");
    auto a = json_assistant();
    memory::Store store(memory::Polarity::mistakes, kEmbedder.dim());
    orchestrator::TrainingConfig cfg;
    cfg.max_iters = 1;
    orchestrator::training_pass(numbered(1), blank, a, kEmbedder, store, cfg);
    CHECK(store.entry(0).wrong_answers == std::vector<std::string>{"(empty response)"});
}

TEST_CASE("live feedback puts a fresh guideline in the refinement prompt") {
    std::vector<std::string> prompts;
    backends::FunctionBackend student(
        [&](std::string_view p, const backends::GenParams&) {
            prompts.emplace_back(p);
            return std::string("(A)");
        },
        "s");
    backends::ScriptedBackend a({}, R"({"Guideline":"LIVE HINT"})");
    memory::Store store(memory::Polarity::mistakes, kEmbedder.dim());
    orchestrator::TrainingConfig cfg;
    cfg.live_feedback = true;
    orchestrator::training_pass(numbered(1), student, a, kEmbedder, store, cfg);
    REQUIRE(prompts.size() == 2);
    CHECK(prompts[1].rfind("LIVE HINT\n\n", 0) == 0);
}

TEST_CASE("checkpoint resume skips completed examples") {
    auto dir = fixtures::scratch_dir("checkpoint");
    auto train = numbered(4);
    backends::ScriptedBackend wrong({}, "(A)");
    auto a = json_assistant();
    orchestrator::TrainingConfig cfg;
    cfg.checkpoint_path = dir / "cp.json";
    cfg.store_path = dir / "store.jsonl";
    cfg.max_iters = 1;

    memory::Store store(memory::Polarity::mistakes, kEmbedder.dim());
    orchestrator::training_pass(std::span(train).first(2), wrong, a, kEmbedder, store, cfg);
    auto cp = orchestrator::load_checkpoint(dir / "cp.json");
    CHECK(cp.completed_ids == std::vector<std::string>{"t-0", "t-1"});

    auto resumed = memory::load(dir / "store.jsonl");
    backends::ScriptedBackend inner({}, "(A)");
    backends::CountingBackend counting(inner);
    auto result = orchestrator::training_pass(train, counting, a, kEmbedder, resumed, cfg);
    CHECK(result.skipped == 2);
    CHECK(counting.calls() == 2);
    CHECK(resumed.size() == 4);
    CHECK(memory::load(dir / "store.jsonl") == resumed);

    cfg.seed = 5;
    CHECK_KIND(orchestrator::training_pass(train, counting, a, kEmbedder, resumed, cfg), ErrorKind::invalid_argument);
    CHECK_KIND(orchestrator::load_checkpoint(dir / "missing.json"), ErrorKind::io_failure);
}

TEST_CASE("inference leaves the store untouched and is thread-count independent") {
    auto train = numbered(20);
    auto test = numbered(20, "u");
    backends::ScriptedBackend wrong({}, "(A)");
    auto a = json_assistant();
    memory::Store store(memory::Polarity::mistakes, kEmbedder.dim());
    orchestrator::TrainingConfig tc;
    tc.max_iters = 1;
    orchestrator::training_pass(train, wrong, a, kEmbedder, store, tc);
    const auto before = memory::serialize(store);

    backends::FunctionBackend student(
        [](std::string_view p, const backends::GenParams&) {
            return std::string(p.find("Count the days") != std::string_view::npos ? "(B)" : "(C)");
        },
        "s");
    orchestrator::InferenceConfig ic;
    ic.mode = PromptMode::salam;
    ic.theta = 0.3;
    ic.jobs = 1;
    auto serial = orchestrator::inference_pass(test, &store, kEmbedder, student, ic);
    ic.jobs = 4;
    auto parallel = orchestrator::inference_pass(test, &store, kEmbedder, student, ic);
    CHECK(serial.attempts == parallel.attempts);
    CHECK(serial.rewards == parallel.rewards);
    CHECK(serial.accuracy == parallel.accuracy);
    CHECK(memory::serialize(store) == before);
}

TEST_CASE("inference accuracy and error handling") {
    auto test = numbered(10);
    backends::FunctionBackend student(
        [](std::string_view p, const backends::GenParams&) {
            if (p.find("number 3 ") != std::string_view::npos || p.find("number 7 ") != std::string_view::npos) {
                return std::string("(A)");
            }
            return std::string("(B)");
        },
        "s");
    orchestrator::InferenceConfig ic;
    auto r = orchestrator::inference_pass(test, nullptr, kEmbedder, student, ic);
    REQUIRE(r.accuracy);
    CHECK(*r.accuracy == doctest::Approx(0.8));
    CHECK(r.per_task.at("t") == orchestrator::TaskTally{8, 10});
    CHECK(r.rewards.size() == 10);

    CHECK_FALSE(orchestrator::inference_pass({}, nullptr, kEmbedder, student, ic).accuracy);

    backends::FunctionBackend flaky(
        [](std::string_view p, const backends::GenParams&) -> std::string {
            if (p.find("number 5 ") != std::string_view::npos) throw Error(ErrorKind::provider_unavailable, "down");
            return "(B)";
        },
        "flaky");
    CHECK_KIND(orchestrator::inference_pass(test, nullptr, kEmbedder, flaky, ic), ErrorKind::provider_unavailable);
    ic.tolerate_errors = true;
    r = orchestrator::inference_pass(test, nullptr, kEmbedder, flaky, ic);
    CHECK(r.errors == 1);
    CHECK(*r.accuracy == doctest::Approx(0.9));

    // Validation failures are never tolerated.
    ic.mode = PromptMode::salam;
    CHECK_KIND(orchestrator::inference_pass(test, nullptr, kEmbedder, flaky, ic), ErrorKind::invalid_argument);
}
