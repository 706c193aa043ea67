#include "cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <memory>
#include <sstream>

#include "salam/assistant.hpp"
#include "salam/backends.hpp"
#include "salam/embed.hpp"
#include "salam/error.hpp"
#include "salam/harness.hpp"
#include "salam/memory.hpp"
#include "salam/orchestrator.hpp"
#include "salam/student.hpp"

namespace salam::cli {

using nlohmann::json;

namespace {

// Records every registered option so a run can write out exactly the
// settings it used; the snapshot doubles as a --config file.
class Snapshot {
public:
    template <typename T>
    CLI::Option* option(CLI::App* app, const std::string& name, T& value, const std::string& help) {
        auto* opt = app->add_option("--" + name, value, help)->capture_default_str();
        fields_.emplace_back(name, [&value] { return json(value); });
        return opt;
    }

    CLI::Option* flag(CLI::App* app, const std::string& name, bool& value, const std::string& help) {
        auto* opt = app->add_flag("--" + name, value, help);
        fields_.emplace_back(name, [&value] { return json(value); });
        return opt;
    }

    json to_json() const {
        json j = json::object();
        for (const auto& [name, get] : fields_) j[name] = get();
        return j;
    }

private:
    std::vector<std::pair<std::string, std::function<json()>>> fields_;
};

struct Settings {
    std::string data;
    std::string out;
    std::uint64_t split_seed = 0;
    double train_fraction = 0.8;
    std::string store;
    std::string correct_store;
    std::string student_backend;
    std::string assistant_backend;
    std::string embedder = "hash:256";
    std::uint32_t max_iters = 2;
    double feedback_fraction = 1.0;
    std::uint64_t seed = 0;
    std::size_t k = 3;
    double theta = 0.9;
    std::string checkpoint;
    std::string rewards;
    bool live_feedback = false;
    std::string mode;
    std::string modes = "zero_shot,fewshot_correct,fewshot_mistake,salam";
    std::string report;
    bool tolerate_errors = false;
    std::string preambles;
    std::string axis;
    std::string values;
    std::size_t in_domain_count = 0;
    std::size_t limit = 0;
    int jobs = 1;
    long long timeout_ms = 60'000;
    int permits = 4;
    int max_tokens = 256;
};

std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        auto t = core::trim(item);
        if (!t.empty()) out.push_back(t);
    }
    return out;
}

std::string env_or_empty(const char* name) {
    const char* v = std::getenv(name);
    return v ? std::string(v) : std::string();
}

// "<model>@<url>"
std::pair<std::string, std::string> model_at_url(const std::string& spec) {
    auto at = spec.find('@');
    if (at == std::string::npos || at == 0) {
        throw Error(ErrorKind::invalid_argument, "remote spec needs <model>@<url>: " + spec);
    }
    return {spec.substr(0, at), spec.substr(at + 1)};
}

std::unique_ptr<backends::TextBackend> make_backend(const std::string& spec, const Settings& s) {
    if (spec.rfind("scripted:", 0) == 0) {
        return std::make_unique<backends::ScriptedBackend>(backends::ScriptedBackend::from_file(spec.substr(9)));
    }
    if (spec.rfind("remote:", 0) == 0) {
        auto [model, url] = model_at_url(spec.substr(7));
        backends::RemoteBackendConfig cfg;
        cfg.url = url;
        cfg.model = model;
        cfg.api_key = env_or_empty("SALAM_MODEL_API_KEY");
        cfg.timeout = std::chrono::milliseconds(s.timeout_ms);
        cfg.permits = s.permits;
        return std::make_unique<backends::RemoteChatBackend>(cfg);
    }
    throw Error(ErrorKind::invalid_argument, "backend spec must be scripted:<rules.json> or remote:<model>@<url>, got \"" +
                                                 spec + "\"");
}

std::unique_ptr<embed::EmbeddingProvider> make_embedder(const std::string& spec, const Settings& s) {
    if (spec == "hash") return std::make_unique<embed::HashingEmbedder>();
    if (spec.rfind("hash:", 0) == 0) {
        return std::make_unique<embed::HashingEmbedder>(static_cast<std::size_t>(std::stoul(spec.substr(5))));
    }
    if (spec.rfind("remote:", 0) == 0) {
        auto rest = spec.substr(7);
        auto colon = rest.find(':');
        if (colon == std::string::npos) {
            throw Error(ErrorKind::invalid_argument, "remote embedder spec needs remote:<dim>:<model>@<url>");
        }
        embed::RemoteEmbedderConfig cfg;
        cfg.dim = static_cast<std::size_t>(std::stoul(rest.substr(0, colon)));
        std::tie(cfg.model, cfg.url) = model_at_url(rest.substr(colon + 1));
        cfg.api_key = env_or_empty("SALAM_EMBED_API_KEY");
        cfg.timeout = std::chrono::milliseconds(s.timeout_ms);
        cfg.permits = s.permits;
        return std::make_unique<embed::RemoteEmbedder>(cfg);
    }
    throw Error(ErrorKind::invalid_argument, "embedder spec must be hash[:dim] or remote:<dim>:<model>@<url>");
}

std::vector<student::PromptMode> parse_modes(const std::string& list) {
    std::vector<student::PromptMode> modes;
    for (const auto& name : split_list(list)) modes.push_back(student::parse_mode(name));
    if (modes.empty()) throw Error(ErrorKind::invalid_argument, "no modes given");
    return modes;
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw Error(ErrorKind::io_failure, "cannot write " + path);
    f << content;
    if (!f.flush()) throw Error(ErrorKind::io_failure, "write failed for " + path);
}

std::map<std::string, std::string> load_preambles(const std::string& path) {
    if (path.empty()) return {};
    std::ifstream f(path, std::ios::binary);
    if (!f) throw Error(ErrorKind::io_failure, "cannot open " + path);
    try {
        return json::parse(f).get<std::map<std::string, std::string>>();
    } catch (const json::exception& e) {
        throw Error(ErrorKind::invalid_argument, "preambles file must map task names to text: " + std::string(e.what()));
    }
}

std::vector<core::TaskExample> load_examples(const Settings& s) {
    auto examples = harness::ingest(s.data).examples;
    if (s.limit > 0 && examples.size() > s.limit) examples.erase(examples.begin() + static_cast<std::ptrdiff_t>(s.limit), examples.end());
    return examples;
}

harness::ExperimentConfig experiment(const Settings& s, const json& snapshot) {
    harness::ExperimentConfig c;
    c.k = s.k;
    c.theta = s.theta;
    c.seed = s.seed;
    c.max_iters = s.max_iters;
    c.feedback_fraction = s.feedback_fraction;
    c.live_feedback = s.live_feedback;
    c.jobs = s.jobs;
    c.tolerate_errors = s.tolerate_errors;
    c.student_gen.max_tokens = s.max_tokens;
    c.preambles = load_preambles(s.preambles);
    c.snapshot = snapshot;
    return c;
}

// Key names a config file may use for an option: "split-seed" or "split_seed".
std::string dashed(std::string key) {
    for (auto& c : key) c = c == '_' ? '-' : c;
    return key;
}

std::vector<std::string> config_args(const json& cfg, CLI::App* sub, const std::vector<std::string>& given) {
    std::vector<std::string> extra;
    const json& source = cfg.contains("config") && cfg["config"].is_object() ? cfg["config"] : cfg;
    for (const auto& [raw_key, value] : source.items()) {
        const auto name = "--" + dashed(raw_key);
        if (name == "--config" || name == "--json-errors") continue;
        auto* opt = sub->get_option_no_throw(name);
        if (!opt) continue;
        bool already = false;
        for (const auto& a : given) {
            if (a == name || a.rfind(name + "=", 0) == 0) already = true;
        }
        if (already) continue;
        if (value.is_boolean()) {
            if (value.get<bool>()) extra.push_back(name);
        } else if (value.is_string()) {
            if (!value.get<std::string>().empty()) {
                extra.push_back(name);
                extra.push_back(value.get<std::string>());
            }
        } else if (value.is_array()) {
            std::string joined;
            for (const auto& v : value) joined += (joined.empty() ? "" : ",") + (v.is_string() ? v.get<std::string>() : v.dump());
            extra.push_back(name);
            extra.push_back(joined);
        } else if (!value.is_null()) {
            extra.push_back(name);
            extra.push_back(value.dump());
        }
    }
    return extra;
}

void emit_error(std::ostream& err, bool json_errors, const std::string& kind, const std::string& message, int code) {
    if (json_errors) {
        err << json{{"error", kind}, {"message", message}, {"exit_code", code}}.dump() << '\n';
    } else {
        err << "error: " << message << '\n';
    }
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    bool json_errors = false;
    for (const auto& a : args) json_errors = json_errors || a == "--json-errors";

    Settings s;
    std::string config_path;
    CLI::App app{"Mistake-memory feedback engine for multi-choice QA"};
    app.require_subcommand(1);
    app.set_version_flag("--version", "salam 0.1.0");

    std::map<CLI::App*, std::unique_ptr<Snapshot>> snapshots;
    auto command = [&](const std::string& name, const std::string& help) {
        auto* sub = app.add_subcommand(name, help);
        snapshots[sub] = std::make_unique<Snapshot>();
        sub->add_option("--config", config_path, "JSON file supplying any flag; command-line flags win");
        sub->add_flag("--json-errors", json_errors, "Print errors as JSON on stderr");
        return std::pair{sub, snapshots[sub].get()};
    };
    auto common_data = [&](CLI::App* sub, Snapshot* snap) {
        snap->option(sub, "data", s.data, "Dataset JSONL")->required();
        snap->option(sub, "split-seed", s.split_seed, "Seed for the per-task train/test split");
        snap->option(sub, "train-fraction", s.train_fraction, "Fraction of each task used for training");
        snap->option(sub, "embedder", s.embedder, "hash[:dim] or remote:<dim>:<model>@<url>");
        snap->option(sub, "jobs", s.jobs, "Parallel workers")->check(CLI::PositiveNumber);
        snap->option(sub, "limit", s.limit, "Use only the first N examples (0 = all)");
        snap->option(sub, "timeout-ms", s.timeout_ms, "Remote request timeout");
        snap->option(sub, "permits", s.permits, "Max in-flight remote requests");
        snap->option(sub, "max-tokens", s.max_tokens, "Student generation budget");
    };
    auto training_flags = [&](CLI::App* sub, Snapshot* snap) {
        snap->option(sub, "assistant-backend", s.assistant_backend, "Study-assistant backend")->required();
        snap->option(sub, "max-iters", s.max_iters, "Attempts per training example")->check(CLI::PositiveNumber);
        snap->option(sub, "feedback-fraction", s.feedback_fraction, "Fraction of mistakes that get feedback");
        snap->flag(sub, "live-feedback", s.live_feedback, "Fresh feedback on every refinement iteration");
    };

    auto [ingest_cmd, ingest_snap] = command("ingest", "Validate and normalize a dataset");
    ingest_snap->option(ingest_cmd, "data", s.data, "Dataset JSONL")->required();
    ingest_snap->option(ingest_cmd, "out", s.out, "Normalized JSONL output")->required();

    auto [train_cmd, train_snap] = command("train", "Collect mistakes and generate feedback");
    common_data(train_cmd, train_snap);
    training_flags(train_cmd, train_snap);
    train_snap->option(train_cmd, "store", s.store, "Mistake store JSONL to write")->required();
    train_snap->option(train_cmd, "correct-store", s.correct_store, "Also write the correct-answer store here");
    train_snap->option(train_cmd, "student-backend", s.student_backend, "Student backend")->required();
    train_snap->option(train_cmd, "seed", s.seed, "Seed for feedback selection");
    train_snap->option(train_cmd, "k", s.k, "Retrieval top-k for refinement")->check(CLI::PositiveNumber);
    train_snap->option(train_cmd, "theta", s.theta, "Retrieval similarity threshold for refinement");
    train_snap->option(train_cmd, "checkpoint", s.checkpoint, "Resumable checkpoint file");
    train_snap->option(train_cmd, "rewards", s.rewards, "Write the reward log (JSONL) here");

    auto [eval_cmd, eval_snap] = command("eval", "Evaluate one prompting mode on the test split");
    common_data(eval_cmd, eval_snap);
    eval_snap->option(eval_cmd, "store", s.store, "Store JSONL (mistakes, or correct answers for fewshot_correct)");
    eval_snap->option(eval_cmd, "mode", s.mode, "Prompting mode")->required();
    eval_snap->option(eval_cmd, "k", s.k, "Retrieval top-k")->check(CLI::PositiveNumber);
    eval_snap->option(eval_cmd, "theta", s.theta, "Retrieval similarity threshold");
    eval_snap->option(eval_cmd, "student-backend", s.student_backend, "Student backend")->required();
    eval_snap->option(eval_cmd, "report", s.report, "EvalReport JSON output")->required();
    eval_snap->option(eval_cmd, "seed", s.seed, "Seed for pseudo labels");
    eval_snap->option(eval_cmd, "preambles", s.preambles, "JSON map task -> instruction line");
    eval_snap->flag(eval_cmd, "tolerate-errors", s.tolerate_errors, "Count backend failures as wrong answers");

    auto [matrix_cmd, matrix_snap] = command("matrix", "Train once, evaluate several modes");
    common_data(matrix_cmd, matrix_snap);
    training_flags(matrix_cmd, matrix_snap);
    matrix_snap->option(matrix_cmd, "modes", s.modes, "Comma-separated modes");
    matrix_snap->option(matrix_cmd, "k", s.k, "Retrieval top-k")->check(CLI::PositiveNumber);
    matrix_snap->option(matrix_cmd, "theta", s.theta, "Retrieval similarity threshold");
    matrix_snap->option(matrix_cmd, "student-backend", s.student_backend, "Student backend")->required();
    matrix_snap->option(matrix_cmd, "seed", s.seed, "Seed for feedback selection and pseudo labels");
    matrix_snap->option(matrix_cmd, "report", s.report, "JSON array of EvalReports")->required();
    matrix_snap->option(matrix_cmd, "preambles", s.preambles, "JSON map task -> instruction line");
    matrix_snap->flag(matrix_cmd, "tolerate-errors", s.tolerate_errors, "Count backend failures as wrong answers");

    auto [sweep_cmd, sweep_snap] = command("sweep", "Accuracy curve over top-k or theta");
    common_data(sweep_cmd, sweep_snap);
    training_flags(sweep_cmd, sweep_snap);
    sweep_snap->option(sweep_cmd, "axis", s.axis, "topk or theta")->required()->check(CLI::IsMember({"topk", "theta"}));
    sweep_snap->option(sweep_cmd, "values", s.values, "Comma-separated ascending values")->required();
    sweep_snap->option(sweep_cmd, "modes", s.modes, "Comma-separated modes");
    sweep_snap->option(sweep_cmd, "student-backend", s.student_backend, "Student backend")->required();
    sweep_snap->option(sweep_cmd, "seed", s.seed, "Seed for feedback selection");
    sweep_snap->option(sweep_cmd, "out", s.out, "CSV output (stdout when empty)");
    sweep_snap->option(sweep_cmd, "k", s.k, "Top-k for training refinement")->check(CLI::PositiveNumber);
    sweep_snap->option(sweep_cmd, "theta", s.theta, "Threshold for training refinement");

    auto [pseudo_cmd, pseudo_snap] = command("pseudo", "Pseudo-mistake prompting over the whole dataset");
    pseudo_snap->option(pseudo_cmd, "data", s.data, "Dataset JSONL")->required();
    pseudo_snap->option(pseudo_cmd, "embedder", s.embedder, "hash[:dim] or remote:<dim>:<model>@<url>");
    pseudo_snap->option(pseudo_cmd, "mode", s.mode, "pseudo_zero or pseudo_fewshot")
        ->required()
        ->check(CLI::IsMember({"pseudo_zero", "pseudo_fewshot"}));
    pseudo_snap->option(pseudo_cmd, "seed", s.seed, "Seed for pseudo labels and demonstrations");
    pseudo_snap->option(pseudo_cmd, "student-backend", s.student_backend, "Student backend")->required();
    pseudo_snap->option(pseudo_cmd, "report", s.report, "EvalReport JSON output")->required();
    pseudo_snap->option(pseudo_cmd, "preambles", s.preambles, "JSON map task -> instruction line");
    pseudo_snap->option(pseudo_cmd, "jobs", s.jobs, "Parallel workers")->check(CLI::PositiveNumber);
    pseudo_snap->option(pseudo_cmd, "limit", s.limit, "Use only the first N examples (0 = all)");
    pseudo_snap->flag(pseudo_cmd, "tolerate-errors", s.tolerate_errors, "Count backend failures as wrong answers");

    auto [ood_cmd, ood_snap] = command("ood", "Collect mistakes on the first tasks, evaluate on the rest");
    ood_snap->option(ood_cmd, "data", s.data, "Dataset JSONL")->required();
    ood_snap->option(ood_cmd, "embedder", s.embedder, "hash[:dim] or remote:<dim>:<model>@<url>");
    ood_snap->option(ood_cmd, "jobs", s.jobs, "Parallel workers")->check(CLI::PositiveNumber);
    training_flags(ood_cmd, ood_snap);
    ood_snap->option(ood_cmd, "in-domain-count", s.in_domain_count, "Number of leading tasks used for mistakes")
        ->required();
    ood_snap->option(ood_cmd, "modes", s.modes, "Comma-separated modes");
    ood_snap->option(ood_cmd, "theta", s.theta, "Retrieval similarity threshold");
    ood_snap->option(ood_cmd, "student-backend", s.student_backend, "Student backend")->required();
    ood_snap->option(ood_cmd, "seed", s.seed, "Seed for feedback selection");
    ood_snap->option(ood_cmd, "report", s.report, "JSON array of EvalReports")->required();

    auto [export_cmd, export_snap] = command("export-finetune", "Write assistant finetune records");
    export_snap->option(export_cmd, "store", s.store, "Annotated mistake store")->required();
    export_snap->option(export_cmd, "out", s.out, "JSONL output")->required();
    export_snap->option(export_cmd, "embedder", s.embedder, "Embedder the store was built with");

    try {
        // A --config file fills in flags the command line left out.
        std::vector<std::string> argv = args;
        for (std::size_t i = 1; i + 1 < args.size(); ++i) {
            if (args[i] == "--config" && i >= 2) {
                std::ifstream f(args[i + 1], std::ios::binary);
                if (!f) throw Error(ErrorKind::io_failure, "cannot open config " + args[i + 1]);
                json cfg;
                try {
                    cfg = json::parse(f);
                } catch (const json::exception& e) {
                    throw Error(ErrorKind::invalid_argument, "config is not JSON: " + std::string(e.what()));
                }
                auto* sub = app.get_subcommand_ptr(args[1]).get();
                auto extra = config_args(cfg, sub, args);
                argv.insert(argv.begin() + 2, extra.begin(), extra.end());
                break;
            }
        }
        std::vector<std::string> reversed(argv.rbegin(), argv.rend() - 1);
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) {
            app.exit(e, out, err);
            return 0;
        }
        emit_error(err, json_errors, "usage", e.what(), 1);
        return 1;
    } catch (const Error& e) {
        const int code = is_validation_error(e.kind()) ? 1 : 2;
        emit_error(err, json_errors, std::string(to_string(e.kind())), e.what(), code);
        return code;
    } catch (const CLI::Error& e) {
        emit_error(err, json_errors, "usage", e.what(), 1);
        return 1;
    }

    try {
        auto* sub = app.get_subcommands().front();
        const json snapshot = snapshots.at(sub)->to_json();
        const auto name = sub->get_name();

        if (name == "ingest") {
            auto result = harness::ingest(s.data);
            std::string text;
            for (const auto& ex : result.examples) text += harness::to_json(ex).dump() + "\n";
            write_file(s.out, text);
            for (const auto& [task, n] : result.task_counts) out << task << '\t' << n << '\n';
            out << "total\t" << result.examples.size() << '\n';
            return 0;
        }

        if (name == "export-finetune") {
            auto embedder = make_embedder(s.embedder, s);
            auto store = memory::load(s.store, {embedder->dim(), memory::Polarity::mistakes});
            auto n = assistant::export_finetune_records(store, s.out);
            out << n << " records written to " << s.out << '\n';
            return 0;
        }

        auto embedder = make_embedder(s.embedder, s);
        auto examples = load_examples(s);
        auto cfg = experiment(s, snapshot);

        if (name == "train") {
            auto parts = harness::split(examples, {s.train_fraction, s.split_seed});
            auto student_backend = make_backend(s.student_backend, s);
            auto assistant_backend = make_backend(s.assistant_backend, s);
            orchestrator::TrainingConfig tc;
            tc.max_iters = s.max_iters;
            tc.feedback_fraction = s.feedback_fraction;
            tc.seed = s.seed;
            tc.k = s.k;
            tc.theta = s.theta;
            tc.live_feedback = s.live_feedback;
            tc.student_gen = cfg.student_gen;
            tc.jobs = s.jobs;
            tc.store_path = s.store;
            if (!s.correct_store.empty()) tc.correct_store_path = s.correct_store;

            memory::Store store(memory::Polarity::mistakes, embedder->dim());
            memory::Store correct(memory::Polarity::correct, embedder->dim());
            if (!s.checkpoint.empty()) {
                tc.checkpoint_path = s.checkpoint;
                if (std::filesystem::exists(s.checkpoint)) {
                    store = memory::load(s.store, {embedder->dim(), memory::Polarity::mistakes});
                    if (!s.correct_store.empty() && std::filesystem::exists(s.correct_store)) {
                        correct = memory::load(s.correct_store, {embedder->dim(), memory::Polarity::correct});
                    }
                }
            }
            auto result = orchestrator::training_pass(parts.train, *student_backend, *assistant_backend, *embedder,
                                                      store, tc, &correct);
            memory::save(store, s.store);
            if (!s.correct_store.empty()) memory::save(correct, s.correct_store);
            if (!s.rewards.empty()) {
                std::string text;
                for (const auto& r : result.rewards) {
                    text += json{{"example_id", r.example_id()}, {"iteration", r.iteration()}, {"reward", r.reward()}}
                                .dump() +
                            "\n";
                }
                write_file(s.rewards, text);
            }
            out << parts.train.size() - result.skipped << " training examples, " << store.size()
                << " mistake entries, " << result.annotation.annotated << " annotated ("
                << result.annotation.degraded << " degraded)\n";
            return 0;
        }

        if (name == "eval") {
            const auto mode = student::parse_mode(s.mode);
            auto parts = harness::split(examples, {s.train_fraction, s.split_seed});
            auto student_backend = make_backend(s.student_backend, s);
            harness::TrainedStores stores{memory::Store(memory::Polarity::mistakes, embedder->dim()),
                                          memory::Store(memory::Polarity::correct, embedder->dim()),
                                          {}};
            if (student::uses_retrieval(mode)) {
                if (s.store.empty()) throw Error(ErrorKind::invalid_argument, s.mode + " needs --store");
                auto loaded = memory::load(s.store, {embedder->dim(), student::store_polarity(mode)});
                (loaded.polarity() == memory::Polarity::correct ? stores.correct : stores.mistakes) = std::move(loaded);
            }
            backends::ScriptedBackend no_assistant({}, std::nullopt, "none");
            harness::Backends b{*student_backend, no_assistant, *embedder};
            auto report = harness::evaluate(parts.test, mode, stores, b, cfg, s.k, s.theta, parts.test);
            report.config["assistant_backend_id"] = nullptr;
            write_file(s.report, harness::to_json(report).dump(2) + "\n");
            out << harness::to_text(report);
            return 0;
        }

        auto student_backend = make_backend(s.student_backend, s);

        if (name == "pseudo") {
            backends::ScriptedBackend no_assistant({}, std::nullopt, "none");
            harness::Backends b{*student_backend, no_assistant, *embedder};
            auto report = harness::pseudo_mistake_eval(examples, student::parse_mode(s.mode), b, cfg);
            report.config["assistant_backend_id"] = nullptr;
            write_file(s.report, harness::to_json(report).dump(2) + "\n");
            out << harness::to_text(report);
            return 0;
        }

        auto assistant_backend = make_backend(s.assistant_backend, s);
        harness::Backends b{*student_backend, *assistant_backend, *embedder};
        const auto modes = parse_modes(s.modes);

        auto write_reports = [&](const std::vector<harness::EvalReport>& reports) {
            json arr = json::array();
            for (const auto& r : reports) {
                arr.push_back(harness::to_json(r));
                out << harness::to_text(r) << '\n';
            }
            write_file(s.report, arr.dump(2) + "\n");
        };

        if (name == "matrix") {
            auto parts = harness::split(examples, {s.train_fraction, s.split_seed});
            write_reports(harness::run_matrix(parts.train, parts.test, modes, b, cfg));
            return 0;
        }

        if (name == "ood") {
            write_reports(harness::ood_eval(examples, s.in_domain_count, modes, b, cfg));
            return 0;
        }

        if (name == "sweep") {
            auto parts = harness::split(examples, {s.train_fraction, s.split_seed});
            auto stores = harness::build_stores(parts.train, b, cfg);
            std::vector<harness::CurvePoint> curve;
            const auto items = split_list(s.values);
            if (s.axis == "topk") {
                std::vector<std::size_t> ks;
                for (const auto& v : items) ks.push_back(static_cast<std::size_t>(std::stoul(v)));
                curve = harness::sweep_topk(parts.test, stores, modes, ks, b, cfg, 0.0);
            } else {
                std::vector<double> thetas;
                for (const auto& v : items) thetas.push_back(std::stod(v));
                curve = harness::sweep_theta(parts.test, stores, modes, thetas, b, cfg, 10);
            }
            const auto csv = harness::to_csv(curve);
            if (s.out.empty()) {
                out << csv;
            } else {
                write_file(s.out, csv);
            }
            return 0;
        }
        throw Error(ErrorKind::invalid_argument, "unknown command " + name);
    } catch (const Error& e) {
        const int code = is_validation_error(e.kind()) ? 1 : 2;
        emit_error(err, json_errors, std::string(to_string(e.kind())), e.what(), code);
        return code;
    } catch (const std::invalid_argument& e) {
        emit_error(err, json_errors, "invalid-argument", e.what(), 1);
        return 1;
    } catch (const std::exception& e) {
        emit_error(err, json_errors, "io-failure", e.what(), 2);
        return 2;
    }
}

}  // namespace salam::cli
