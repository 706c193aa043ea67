#include "salam/harness.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "salam/error.hpp"

namespace salam::harness {

using nlohmann::json;

namespace {

[[noreturn]] void malformed_at(std::size_t line_no, const std::string& why) {
    throw Error(ErrorKind::malformed_record, "line " + std::to_string(line_no) + ": " + why);
}

std::string shortest(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

json optional_number(const std::optional<double>& v) {
    return v ? json(*v) : json(nullptr);
}

std::optional<double> number_or_null(const json& j, const char* key) {
    if (!j.contains(key) || j[key].is_null()) return std::nullopt;
    return j[key].get<double>();
}

template <typename T>
void require_sorted(std::span<const T> values, const char* what) {
    if (values.empty()) throw Error(ErrorKind::invalid_argument, std::string(what) + " list is empty");
    if (!std::is_sorted(values.begin(), values.end())) {
        throw Error(ErrorKind::invalid_argument, std::string(what) + " values must be sorted ascending");
    }
}

}  // namespace

core::TaskExample parse_record(const json& record, std::size_t line_no) {
    if (!record.is_object()) malformed_at(line_no, "record is not a JSON object");
    core::RawRecord raw;
    try {
        if (!record.contains("task") || !record["task"].is_string()) malformed_at(line_no, "missing field \"task\"");
        raw.task = record["task"].get<std::string>();
        if (record.contains("id") && !record["id"].is_null()) {
            raw.id = record["id"].is_string() ? record["id"].get<std::string>() : record["id"].dump();
        }
        if (record.contains("question")) raw.question = record["question"].get<std::string>();
        if (record.contains("options")) raw.options = record["options"].get<std::vector<std::string>>();
        if (record.contains("labels")) raw.labels = record["labels"].get<std::vector<std::string>>();
        if (record.contains("answer")) {
            if (!record["answer"].is_number_integer()) malformed_at(line_no, "\"answer\" must be an integer index");
            raw.answer = record["answer"].get<std::int64_t>();
        }
    } catch (const json::exception& e) {
        malformed_at(line_no, e.what());
    }
    if (!raw.id) raw.id = raw.task + "-" + std::to_string(line_no);
    try {
        return core::make_example(raw);
    } catch (const Error& e) {
        malformed_at(line_no, e.what());
    }
}

json to_json(const core::TaskExample& example) {
    std::vector<std::string> options;
    for (const auto& o : example.options()) options.push_back(o.content);
    return json{{"id", example.id()},
                {"task", example.task()},
                {"question", example.question()},
                {"options", options},
                {"answer", example.answer_index()},
                {"answer_label", std::string(1, example.answer_label())}};
}

IngestResult ingest_text(std::string_view text) {
    IngestResult out;
    std::set<std::string> ids;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos < text.size()) {
        auto end = text.find('\n', pos);
        if (end == std::string_view::npos) end = text.size();
        auto line = text.substr(pos, end - pos);
        pos = end + 1;
        ++line_no;
        if (core::trim(line).empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::parse_error& e) {
            malformed_at(line_no, std::string("invalid JSON: ") + e.what());
        }
        auto ex = parse_record(j, line_no);
        if (!ids.insert(ex.id()).second) malformed_at(line_no, "duplicate id \"" + ex.id() + "\"");
        auto it = std::find_if(out.task_counts.begin(), out.task_counts.end(),
                               [&](const auto& tc) { return tc.first == ex.task(); });
        if (it == out.task_counts.end()) {
            out.task_counts.emplace_back(ex.task(), 1);
        } else {
            ++it->second;
        }
        out.examples.push_back(std::move(ex));
    }
    return out;
}

IngestResult ingest(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw Error(ErrorKind::io_failure, "cannot open dataset " + path.string());
    std::ostringstream buf;
    buf << f.rdbuf();
    return ingest_text(buf.str());
}

std::vector<std::string> task_order(std::span<const core::TaskExample> examples) {
    std::vector<std::string> tasks;
    for (const auto& ex : examples) {
        if (std::find(tasks.begin(), tasks.end(), ex.task()) == tasks.end()) tasks.push_back(ex.task());
    }
    return tasks;
}

Split split(std::span<const core::TaskExample> examples, const SplitSpec& spec) {
    if (!(spec.train_fraction > 0.0 && spec.train_fraction < 1.0)) {
        throw Error(ErrorKind::invalid_argument, "train_fraction must be in (0, 1)");
    }
    Split out;
    for (const auto& task : task_order(examples)) {
        std::vector<core::TaskExample> group;
        for (const auto& ex : examples) {
            if (ex.task() == task) group.push_back(ex);
        }
        if (group.size() < 2) {
            throw Error(ErrorKind::tiny_task, "task \"" + task + "\" has fewer than 2 examples");
        }
        core::Rng rng(spec.seed ^ core::fnv1a64(task));
        rng.shuffle(group);
        const auto n_train =
            static_cast<std::size_t>(std::floor(static_cast<double>(group.size()) * spec.train_fraction + 1e-9));
        for (std::size_t i = 0; i < group.size(); ++i) {
            (i < n_train ? out.train : out.test).push_back(std::move(group[i]));
        }
    }
    return out;
}

std::string membership_hash(std::span<const core::TaskExample> examples) {
    std::vector<std::string> ids;
    for (const auto& ex : examples) ids.push_back(ex.id());
    std::sort(ids.begin(), ids.end());
    std::uint64_t h = core::fnv1a64("");
    for (const auto& id : ids) {
        h = core::fnv1a64(id, h);
        h = core::fnv1a64("\n", h);
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

EvalReport make_report(const orchestrator::InferenceResult& result, json config) {
    EvalReport r;
    r.examples = result.attempts.size();
    r.config = std::move(config);
    r.rewards = result.rewards;
    double sum = 0.0;
    for (const auto& [task, tally] : result.per_task) {
        const double acc = static_cast<double>(tally.correct) / static_cast<double>(tally.total);
        r.per_task[task] = acc;
        sum += acc;
        r.min = r.min ? std::min(*r.min, acc) : acc;
        r.max = r.max ? std::max(*r.max, acc) : acc;
    }
    if (!r.per_task.empty()) r.average = sum / static_cast<double>(r.per_task.size());
    return r;
}

json to_json(const EvalReport& report) {
    json rewards = json::array();
    for (const auto& rr : report.rewards) {
        rewards.push_back({{"example_id", rr.example_id()}, {"iteration", rr.iteration()}, {"reward", rr.reward()}});
    }
    return json{{"per_task", report.per_task},
                {"min", optional_number(report.min)},
                {"max", optional_number(report.max)},
                {"average", optional_number(report.average)},
                {"examples", report.examples},
                {"config", report.config},
                {"rewards", rewards}};
}

EvalReport report_from_json(const json& j) {
    EvalReport r;
    r.per_task = j.at("per_task").get<std::map<std::string, double>>();
    r.min = number_or_null(j, "min");
    r.max = number_or_null(j, "max");
    r.average = number_or_null(j, "average");
    r.examples = j.value("examples", std::size_t{0});
    r.config = j.value("config", json::object());
    for (const auto& rr : j.value("rewards", json::array())) {
        r.rewards.emplace_back(rr.at("example_id").get<std::string>(), rr.at("iteration").get<std::uint32_t>(),
                               rr.at("reward").get<int>());
    }
    return r;
}

std::string to_text(const EvalReport& report) {
    std::size_t width = 8;
    for (const auto& [task, _] : report.per_task) width = std::max(width, task.size());
    auto row = [&](const std::string& name, const std::optional<double>& v) {
        std::string line = name + std::string(width - name.size() + 2, ' ');
        if (v) {
            char buf[32];
            std::snprintf(buf, sizeof buf, "%6.1f", *v * 100.0);
            line += buf;
        } else {
            line += "    --";
        }
        return line + "\n";
    };
    std::string out;
    if (report.config.contains("mode")) out += "mode: " + report.config["mode"].get<std::string>() + "\n";
    out += "task" + std::string(width - 4 + 2, ' ') + "acc(%)\n";
    for (const auto& [task, acc] : report.per_task) out += row(task, acc);
    out += row("min", report.min);
    out += row("max", report.max);
    out += row("average", report.average);
    return out;
}

TrainedStores build_stores(std::span<const core::TaskExample> train, const Backends& backends,
                           const ExperimentConfig& config) {
    TrainedStores stores{memory::Store(memory::Polarity::mistakes, backends.embedder.dim()),
                         memory::Store(memory::Polarity::correct, backends.embedder.dim()),
                         {}};
    orchestrator::TrainingConfig tc;
    tc.max_iters = config.max_iters;
    tc.feedback_fraction = config.feedback_fraction;
    tc.seed = config.seed;
    tc.k = config.k;
    tc.theta = config.theta;
    tc.live_feedback = config.live_feedback;
    tc.student_gen = config.student_gen;
    tc.feedback = config.feedback;
    tc.jobs = config.jobs;
    stores.training = orchestrator::training_pass(train, backends.student, backends.assistant, backends.embedder,
                                                  stores.mistakes, tc, &stores.correct);
    return stores;
}

EvalReport evaluate(std::span<const core::TaskExample> test, student::PromptMode mode, const TrainedStores& stores,
                    const Backends& backends, const ExperimentConfig& config, std::size_t k, double theta,
                    std::span<const core::TaskExample> pseudo_pool) {
    orchestrator::InferenceConfig ic;
    ic.mode = mode;
    ic.k = k;
    ic.theta = theta;
    ic.gen = config.student_gen;
    ic.jobs = config.jobs;
    ic.tolerate_errors = config.tolerate_errors;
    ic.pseudo_seed = config.seed;
    ic.pseudo_pool = pseudo_pool;
    ic.preambles = config.preambles;

    const memory::Store* store = nullptr;
    if (student::uses_retrieval(mode)) {
        store = student::store_polarity(mode) == memory::Polarity::correct ? &stores.correct : &stores.mistakes;
    }
    auto result = orchestrator::inference_pass(test, store, backends.embedder, backends.student, ic);

    json cfg = config.snapshot.is_object() ? config.snapshot : json::object();
    cfg["mode"] = std::string(student::to_string(mode));
    cfg["k"] = k;
    cfg["theta"] = theta;
    cfg["seed"] = config.seed;
    cfg["test_membership_hash"] = membership_hash(test);
    cfg["student_backend_id"] = backends.student.id();
    cfg["assistant_backend_id"] = backends.assistant.id();
    cfg["embedder_id"] = backends.embedder.id();
    cfg["errors"] = result.errors;
    return make_report(result, std::move(cfg));
}

std::vector<EvalReport> run_matrix(std::span<const core::TaskExample> train, std::span<const core::TaskExample> test,
                                   std::span<const student::PromptMode> modes, const Backends& backends,
                                   const ExperimentConfig& config) {
    if (modes.empty()) throw Error(ErrorKind::invalid_argument, "no modes requested");
    const auto stores = build_stores(train, backends, config);
    std::vector<EvalReport> reports;
    for (auto mode : modes) {
        reports.push_back(evaluate(test, mode, stores, backends, config, config.k, config.theta, test));
    }
    return reports;
}

std::vector<CurvePoint> sweep_topk(std::span<const core::TaskExample> test, const TrainedStores& stores,
                                   std::span<const student::PromptMode> modes, std::span<const std::size_t> k_values,
                                   const Backends& backends, const ExperimentConfig& config, double theta) {
    require_sorted(k_values, "k");
    if (k_values.front() < 1) throw Error(ErrorKind::invalid_argument, "k values must be >= 1");
    std::vector<CurvePoint> curve;
    for (auto k : k_values) {
        for (auto mode : modes) {
            auto r = evaluate(test, mode, stores, backends, config, k, theta, test);
            curve.push_back({static_cast<double>(k), mode, r.average});
        }
    }
    return curve;
}

std::vector<CurvePoint> sweep_theta(std::span<const core::TaskExample> test, const TrainedStores& stores,
                                    std::span<const student::PromptMode> modes, std::span<const double> theta_values,
                                    const Backends& backends, const ExperimentConfig& config, std::size_t k) {
    require_sorted(theta_values, "theta");
    std::vector<CurvePoint> curve;
    for (auto theta : theta_values) {
        for (auto mode : modes) {
            auto r = evaluate(test, mode, stores, backends, config, k, theta, test);
            curve.push_back({theta, mode, r.average});
        }
    }
    return curve;
}

std::string to_csv(std::span<const CurvePoint> curve) {
    std::string out = "value,mode,accuracy\n";
    for (const auto& p : curve) {
        out += shortest(p.value) + "," + std::string(student::to_string(p.mode)) + "," +
               (p.accuracy ? shortest(*p.accuracy) : std::string("NA")) + "\n";
    }
    return out;
}

EvalReport pseudo_mistake_eval(std::span<const core::TaskExample> full_set, student::PromptMode mode,
                               const Backends& backends, const ExperimentConfig& config) {
    if (!student::is_pseudo(mode)) {
        throw Error(ErrorKind::invalid_argument, "pseudo evaluation needs pseudo_zero or pseudo_fewshot");
    }
    const TrainedStores none{memory::Store(memory::Polarity::mistakes, backends.embedder.dim()),
                             memory::Store(memory::Polarity::correct, backends.embedder.dim()),
                             {}};
    return evaluate(full_set, mode, none, backends, config, config.k, config.theta, full_set);
}

OodSplit ood_split(std::span<const core::TaskExample> examples, std::size_t in_domain_count) {
    const auto tasks = task_order(examples);
    if (in_domain_count < 1 || in_domain_count >= tasks.size()) {
        throw Error(ErrorKind::invalid_argument, "in-domain count must be in [1, " +
                                                     std::to_string(tasks.size()) + ") for " +
                                                     std::to_string(tasks.size()) + " tasks");
    }
    const std::set<std::string> in_domain(tasks.begin(), tasks.begin() + static_cast<std::ptrdiff_t>(in_domain_count));
    OodSplit out;
    for (const auto& ex : examples) (in_domain.count(ex.task()) ? out.in_domain : out.out_of_domain).push_back(ex);
    return out;
}

std::vector<EvalReport> ood_eval(std::span<const core::TaskExample> examples, std::size_t in_domain_count,
                                 std::span<const student::PromptMode> modes, const Backends& backends,
                                 const ExperimentConfig& config) {
    if (modes.empty()) throw Error(ErrorKind::invalid_argument, "no modes requested");
    const auto parts = ood_split(examples, in_domain_count);
    const auto stores = build_stores(parts.in_domain, backends, config);
    std::vector<EvalReport> reports;
    for (auto mode : modes) {
        auto r = evaluate(parts.out_of_domain, mode, stores, backends, config, 1, config.theta, parts.out_of_domain);
        r.config["in_domain_count"] = in_domain_count;
        reports.push_back(std::move(r));
    }
    return reports;
}

}  // namespace salam::harness
