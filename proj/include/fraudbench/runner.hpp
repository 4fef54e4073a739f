#pragma once

#include <atomic>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "fraudbench/corpus.hpp"
#include "fraudbench/fraud.hpp"
#include "fraudbench/metrics.hpp"
#include "fraudbench/report.hpp"
#include "fraudbench/runlog.hpp"

namespace fraudbench {

// ---------------------------------------------------------------------------
// Experiment configuration
// ---------------------------------------------------------------------------

struct CaseEntry {
    bool combination = false;
    FraudCase primary = FraudCase::kMisinformation;  // single-case entries
    std::vector<FraudCase> combo_stages;
    std::vector<int> levels;       // difficulty sweep; {0} for misinformation
    int multi_person_level = 4;    // strengths used inside combinations
    int multi_round_level = 4;
    std::vector<Scenario> scenarios;                      // empty = run config default
    std::map<std::string, AgentEndpoint> endpoint_overrides;
};

struct ExperimentConfig {
    std::string corpus_path;
    std::optional<RequestGeneratorConfig> generator;
    std::optional<std::string> requests_file;
    std::map<std::string, AgentEndpoint> endpoints;
    std::map<std::string, ScriptProgram> scripts;
    std::vector<CaseEntry> cases;
    std::vector<Scenario> scenarios{Scenario::kHotel, Scenario::kFlight};
    int trials_per_cell = 100;
    int candidate_count = 8;
    int authentic_count = 4;
    int fabricated_count = 4;
    int parse_retry = 2;
    bool ranking_format_hint = true;
    int strength_bound = 4;
    std::vector<int> k_values{1, 2, 4};
    std::uint64_t master_seed = 0;
    bool mitigation = false;
    int parallelism = 1;
    std::string output_dir = "out";
    std::string base_dir;           // config file directory; relative paths resolve against it
    std::string config_fingerprint; // hash of the raw config bytes
};

namespace detail {

inline void reject_unknown_keys(const Json& obj, const std::set<std::string>& known,
                                const std::string& where) {
    for (const auto& [key, value] : obj.items()) {
        (void)value;
        if (!known.count(key))
            throw ConfigError(where + ": unknown key \"" + key + "\"");
    }
}

inline AgentEndpoint endpoint_from_json(const Json& j, const std::string& where) {
    if (!j.is_object()) throw ConfigError(where + ": endpoint must be an object");
    reject_unknown_keys(j,
                        {"backend", "script", "base_url", "model", "api_key_env", "temperature",
                         "max_tokens", "timeout_ms", "max_attempts", "backoff_ms",
                         "rate_limit_rps"},
                        where);
    AgentEndpoint ep;
    const std::string backend = j.value("backend", std::string());
    if (backend == "scripted") {
        if (!j.contains("script")) throw ConfigError(where + ": scripted endpoint needs \"script\"");
        ep.backend = ScriptedBackend{j.at("script").get<std::string>()};
    } else if (backend == "remote") {
        RemoteBackend remote;
        if (!j.contains("base_url") || !j.contains("model"))
            throw ConfigError(where + ": remote endpoint needs \"base_url\" and \"model\"");
        remote.base_url = j.at("base_url").get<std::string>();
        remote.model_name = j.at("model").get<std::string>();
        remote.api_key_env = j.value("api_key_env", std::string());
        ep.backend = remote;
    } else {
        throw ConfigError(where + ": backend must be \"remote\" or \"scripted\"");
    }
    ep.sampling.temperature = j.value("temperature", ep.sampling.temperature);
    ep.sampling.max_tokens = j.value("max_tokens", ep.sampling.max_tokens);
    ep.timeout = std::chrono::milliseconds(j.value("timeout_ms", 60000));
    ep.retry.max_attempts = j.value("max_attempts", ep.retry.max_attempts);
    if (j.contains("backoff_ms")) {
        ep.retry.backoff.clear();
        for (const auto& ms : j.at("backoff_ms"))
            ep.retry.backoff.emplace_back(std::chrono::milliseconds(ms.get<int>()));
    }
    ep.rate_limit_rps = j.value("rate_limit_rps", 0.0);
    return ep;
}

inline std::map<std::string, AgentEndpoint> endpoints_from_json(const Json& j,
                                                                const std::string& where) {
    std::map<std::string, AgentEndpoint> out;
    static const std::set<std::string> roles = {"travel_plan", "summary", "confirmation",
                                                "scammer",     "judge",   "anti_fraud"};
    for (const auto& [role, value] : j.items()) {
        if (!roles.count(role)) throw ConfigError(where + ": unknown role \"" + role + "\"");
        AgentEndpoint ep = endpoint_from_json(value, where + "." + role);
        // Verdict stability: the judge samples at temperature 0 unless the
        // config says otherwise.
        if (role == "judge" && !value.contains("temperature")) ep.sampling.temperature = 0.0;
        out[role] = ep;
    }
    return out;
}

inline CaseEntry case_from_json(const Json& j, const std::string& where, int strength_bound) {
    if (!j.is_object()) throw ConfigError(where + ": case must be an object");
    reject_unknown_keys(j,
                        {"case", "levels", "stages", "multi_person_level", "multi_round_level",
                         "scenarios", "endpoints"},
                        where);
    CaseEntry entry;
    const std::string kind = j.value("case", std::string());
    if (kind == "combination") {
        entry.combination = true;
        if (!j.contains("stages")) throw ConfigError(where + ": combination needs \"stages\"");
        for (const auto& s : j.at("stages"))
            entry.combo_stages.push_back(fraud_case_from_name(s.get<std::string>()));
        entry.multi_person_level = j.value("multi_person_level", 4);
        entry.multi_round_level = j.value("multi_round_level", 4);
        entry.levels = {0};
    } else {
        try {
            entry.primary = fraud_case_from_name(kind);
        } catch (const SchemaError&) {
            throw ConfigError(where + ": unknown case \"" + kind + "\"");
        }
        if (entry.primary == FraudCase::kMisinformation) {
            entry.levels = {0};
            if (j.contains("levels")) throw ConfigError(where + ": misinformation has no levels");
        } else if (j.contains("levels")) {
            for (const auto& l : j.at("levels")) {
                int level = l.get<int>();
                if (level < 1 || level > strength_bound)
                    throw ConfigError(where + ".levels: " + std::to_string(level) + " outside 1.." +
                                      std::to_string(strength_bound));
                entry.levels.push_back(level);
            }
            if (entry.levels.empty()) throw ConfigError(where + ".levels: empty");
        } else {
            for (int l = 1; l <= strength_bound; ++l) entry.levels.push_back(l);
        }
    }
    if (j.contains("scenarios")) {
        for (const auto& s : j.at("scenarios"))
            entry.scenarios.push_back(scenario_from_name(s.get<std::string>()));
        if (entry.scenarios.empty()) throw ConfigError(where + ".scenarios: empty");
    }
    if (j.contains("endpoints"))
        entry.endpoint_overrides = endpoints_from_json(j.at("endpoints"), where + ".endpoints");
    return entry;
}

inline FraudCaseSpec spec_for(const CaseEntry& entry, int level) {
    if (!entry.combination) {
        if (entry.primary == FraudCase::kMisinformation) return single_case(entry.primary);
        return single_case(entry.primary, level);
    }
    FraudCaseSpec spec;
    for (FraudCase kind : entry.combo_stages) {
        int strength = 1;
        if (kind == FraudCase::kMultiPerson) strength = entry.multi_person_level;
        if (kind == FraudCase::kMultiRound) strength = entry.multi_round_level;
        spec.stages.push_back(FraudStage{kind, strength});
    }
    return spec;
}

inline std::set<std::string> roles_needed(const CaseEntry& entry, bool mitigation) {
    std::set<std::string> roles = {"summary", "scammer"};
    auto needs = [&](FraudCase kind) {
        if (kind != FraudCase::kMisinformation) roles.insert("confirmation");
        if (kind == FraudCase::kMultiRound) roles.insert("judge");
    };
    if (entry.combination)
        for (FraudCase kind : entry.combo_stages) needs(kind);
    else
        needs(entry.primary);
    if (mitigation) roles.insert("anti_fraud");
    return roles;
}

}  // namespace detail

inline ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config file not readable: " + path);
    std::string raw((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    Json doc = Json::parse(raw, nullptr, false);
    if (doc.is_discarded()) throw ConfigError(path + ": not valid JSON");
    if (!doc.is_object()) throw ConfigError(path + ": top level must be an object");

    detail::reject_unknown_keys(
        doc, {"schema_version", "corpus",      "requests",        "endpoints",
              "scripts",        "cases",       "scenarios",       "trials_per_cell",
              "candidate_count", "authentic_count", "fabricated_count", "parse_retry",
              "ranking_format_hint", "strength_bound", "k_values", "master_seed",
              "mitigation",     "parallelism", "output_dir"},
        path);

    ExperimentConfig cfg;
    cfg.base_dir = std::filesystem::absolute(std::filesystem::path(path)).parent_path().string();
    cfg.config_fingerprint = hex64(fnv1a64(raw));
    if (doc.value("schema_version", 1) != 1)
        throw ConfigError(path + ": unsupported schema_version");

    if (!doc.contains("corpus")) throw ConfigError(path + ": missing \"corpus\"");
    cfg.corpus_path = doc.at("corpus").get<std::string>();

    cfg.strength_bound = doc.value("strength_bound", 4);
    cfg.trials_per_cell = doc.value("trials_per_cell", 100);
    if (cfg.trials_per_cell < 1) throw ConfigError(path + ": trials_per_cell must be >= 1");
    cfg.candidate_count = doc.value("candidate_count", 8);
    cfg.authentic_count = doc.value("authentic_count", 4);
    cfg.fabricated_count = doc.value("fabricated_count", 4);
    cfg.parse_retry = doc.value("parse_retry", 2);
    cfg.ranking_format_hint = doc.value("ranking_format_hint", true);
    cfg.master_seed = doc.value("master_seed", std::uint64_t{0});
    cfg.mitigation = doc.value("mitigation", false);
    cfg.parallelism = doc.value("parallelism", 1);
    if (cfg.parallelism < 1) throw ConfigError(path + ": parallelism must be >= 1");
    cfg.output_dir = doc.value("output_dir", std::string("out"));
    if (doc.contains("k_values")) {
        cfg.k_values.clear();
        for (const auto& k : doc.at("k_values")) cfg.k_values.push_back(k.get<int>());
        if (cfg.k_values.empty()) throw ConfigError(path + ": k_values must be non-empty");
    }

    if (doc.contains("scenarios")) {
        cfg.scenarios.clear();
        for (const auto& s : doc.at("scenarios"))
            cfg.scenarios.push_back(scenario_from_name(s.get<std::string>()));
        if (cfg.scenarios.empty()) throw ConfigError(path + ": scenarios must be non-empty");
    }

    if (!doc.contains("requests")) throw ConfigError(path + ": missing \"requests\"");
    {
        const auto& r = doc.at("requests");
        detail::reject_unknown_keys(r, {"generator", "file"}, path + ".requests");
        if (r.contains("generator") == r.contains("file"))
            throw ConfigError(path + ".requests: exactly one of \"generator\" or \"file\"");
        if (r.contains("file")) {
            cfg.requests_file = r.at("file").get<std::string>();
        } else {
            const auto& g = r.at("generator");
            detail::reject_unknown_keys(
                g, {"nationalities", "cities", "duration_days", "dates", "count", "seed"},
                path + ".requests.generator");
            RequestGeneratorConfig gen;
            gen.nationalities = {"Singaporean", "Spanish",    "American",
                                 "Indonesian",  "South Korean", "Chinese"};
            gen.cities = {"Paris", "Berlin", "Prague"};
            if (g.contains("nationalities"))
                gen.nationalities = g.at("nationalities").get<std::vector<std::string>>();
            if (g.contains("cities")) gen.cities = g.at("cities").get<std::vector<std::string>>();
            if (g.contains("duration_days")) {
                auto range = g.at("duration_days").get<std::vector<int>>();
                if (range.size() != 2)
                    throw ConfigError(path + ".requests.generator.duration_days: need [min, max]");
                gen.min_duration_days = range[0];
                gen.max_duration_days = range[1];
            }
            if (g.contains("dates")) {
                auto range = g.at("dates").get<std::vector<std::string>>();
                if (range.size() != 2)
                    throw ConfigError(path + ".requests.generator.dates: need [first, last]");
                auto first = parse_date(range[0]), last = parse_date(range[1]);
                if (!first || !last)
                    throw ConfigError(path + ".requests.generator.dates: unparseable date");
                gen.first_date = *first;
                gen.last_date = *last;
            }
            gen.count = g.value("count", cfg.trials_per_cell);
            gen.seed = g.value("seed", derive_seed(cfg.master_seed, {"requests"}));
            validate_generator_config(gen);
            cfg.generator = gen;
        }
    }

    if (doc.contains("endpoints"))
        cfg.endpoints = detail::endpoints_from_json(doc.at("endpoints"), path + ".endpoints");

    if (doc.contains("scripts")) {
        for (const auto& [id, s] : doc.at("scripts").items()) {
            detail::reject_unknown_keys(s, {"loop", "steps"}, path + ".scripts." + id);
            ScriptProgram program;
            program.script_id = id;
            program.loop = s.value("loop", false);
            if (!s.contains("steps") || !s.at("steps").is_array() || s.at("steps").empty())
                throw ConfigError(path + ".scripts." + id + ": steps must be a non-empty array");
            for (const auto& step : s.at("steps")) {
                detail::reject_unknown_keys(step, {"match", "regex", "reply"},
                                            path + ".scripts." + id + ".steps");
                program.steps.push_back(ScriptStep{step.value("match", std::string()),
                                                   step.value("regex", false),
                                                   step.at("reply").get<std::string>()});
            }
            cfg.scripts[id] = std::move(program);
        }
    }

    if (doc.contains("cases")) {
        const auto& cases = doc.at("cases");
        if (!cases.is_array() || cases.empty())
            throw ConfigError(path + ": cases must be a non-empty array");
        for (std::size_t i = 0; i < cases.size(); ++i)
            cfg.cases.push_back(detail::case_from_json(
                cases[i], path + ".cases[" + std::to_string(i) + "]", cfg.strength_bound));
    } else {
        CaseEntry misinfo;
        misinfo.primary = FraudCase::kMisinformation;
        misinfo.levels = {0};
        CaseEntry mp;
        mp.primary = FraudCase::kMultiPerson;
        CaseEntry mr;
        mr.primary = FraudCase::kMultiRound;
        for (int l = 1; l <= cfg.strength_bound; ++l) {
            mp.levels.push_back(l);
            mr.levels.push_back(l);
        }
        cfg.cases = {misinfo, mp, mr};
    }

    // Every role a cell will need must be bound somewhere (globally or in the
    // entry's overrides); scripted endpoints must name a registered script.
    for (std::size_t i = 0; i < cfg.cases.size(); ++i) {
        const auto& entry = cfg.cases[i];
        for (const auto& role : detail::roles_needed(entry, cfg.mitigation)) {
            if (!entry.endpoint_overrides.count(role) && !cfg.endpoints.count(role))
                throw ConfigError(path + ".cases[" + std::to_string(i) + "]: role \"" + role +
                                  "\" is not bound");
        }
    }
    auto check_script = [&](const AgentEndpoint& ep, const std::string& where) {
        if (auto* scripted = std::get_if<ScriptedBackend>(&ep.backend))
            if (!cfg.scripts.count(scripted->script_id))
                throw ConfigError(where + ": script \"" + scripted->script_id +
                                  "\" is not defined");
    };
    for (const auto& [role, ep] : cfg.endpoints) check_script(ep, path + ".endpoints." + role);
    for (const auto& entry : cfg.cases)
        for (const auto& [role, ep] : entry.endpoint_overrides)
            check_script(ep, path + ".cases endpoints." + role);

    return cfg;
}

inline std::vector<TravelRequest> load_requests_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("requests file not readable: " + path);
    Json doc = Json::parse(in, nullptr, false);
    if (doc.is_discarded() || !doc.is_array())
        throw ConfigError(path + ": requests file must be a JSON array");
    std::vector<TravelRequest> out;
    for (std::size_t i = 0; i < doc.size(); ++i) {
        const auto& j = doc[i];
        const std::string where = path + "[" + std::to_string(i) + "]";
        detail::reject_unknown_keys(
            j, {"id", "nationality", "origin", "destination", "duration_days", "date"}, where);
        TravelRequest req;
        req.request_id = j.value("id", "req-" + std::to_string(i));
        req.nationality = j.at("nationality").get<std::string>();
        req.origin_city = j.at("origin").get<std::string>();
        req.destination_city = j.at("destination").get<std::string>();
        req.duration_days = j.at("duration_days").get<int>();
        auto date = parse_date(j.at("date").get<std::string>());
        if (!date) throw ConfigError(where + ": unparseable date");
        req.start_date = *date;
        validate_request(req);
        out.push_back(std::move(req));
    }
    if (out.empty()) throw ConfigError(path + ": requests file is empty");
    return out;
}

// ---------------------------------------------------------------------------
// Execution
// ---------------------------------------------------------------------------

namespace detail {

// Serializes log appends into deterministic (cell, trial) order while workers
// complete out of order.
class OrderedLogWriter {
public:
    explicit OrderedLogWriter(const std::string& path) : out_(path) {
        if (!out_) throw ConfigError("cannot open run log for writing: " + path);
    }

    void header(const Json& j) {
        std::lock_guard<std::mutex> lock(mutex_);
        out_ << j.dump() << "\n";
        out_.flush();
    }

    void append(std::size_t index, std::string line) {
        std::lock_guard<std::mutex> lock(mutex_);
        pending_[index] = std::move(line);
        while (!pending_.empty() && pending_.begin()->first == next_) {
            out_ << pending_.begin()->second << "\n";
            pending_.erase(pending_.begin());
            ++next_;
        }
        out_.flush();
    }

private:
    std::ofstream out_;
    std::mutex mutex_;
    std::size_t next_ = 0;
    std::map<std::size_t, std::string> pending_;
};

inline std::string resolve_path(const std::string& base_dir, const std::string& path) {
    std::filesystem::path p(path);
    if (p.is_absolute() || base_dir.empty()) return path;
    return (std::filesystem::path(base_dir) / p).string();
}

inline std::string iso_now() {
    std::time_t now = std::time(nullptr);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
    return buf;
}

}  // namespace detail

struct RunResult {
    std::string log_path;
    std::string report_md_path;
    std::string report_csv_path;
    MetricsReport report;
    ReportMeta meta;
    int trials_run = 0;
    int cells_skipped_offline = 0;
    bool any_cell_fully_voided = false;
};

// Executes the full (scenario x case x level x trial) matrix with bounded
// parallelism. Per-trial failures finalize conservatively; AuthError and
// ConfigError abort the run.
inline RunResult run_experiment(const ExperimentConfig& cfg, HttpPoster poster = nullptr,
                                bool offline = false) {
    const ListingCorpus corpus =
        load_corpus(detail::resolve_path(cfg.base_dir, cfg.corpus_path));
    std::vector<TravelRequest> requests =
        cfg.generator ? generate_requests(*cfg.generator)
                      : load_requests_file(detail::resolve_path(cfg.base_dir, *cfg.requests_file));

    auto store = std::make_shared<ScriptStore>();
    for (const auto& [id, program] : cfg.scripts) store->register_program(program);
    AgentGateway gateway(store, &system_clock(), poster);

    struct Cell {
        FraudCaseSpec spec;
        Scenario scenario = Scenario::kHotel;
        int level = 0;
        const CaseEntry* entry = nullptr;
    };
    std::vector<Cell> cells;
    int skipped_offline = 0;
    for (const auto& entry : cfg.cases) {
        const auto& scenario_list = entry.scenarios.empty() ? cfg.scenarios : entry.scenarios;
        for (int level : entry.levels) {
            for (Scenario scenario : scenario_list) {
                Cell cell{detail::spec_for(entry, level), scenario, level, &entry};
                validate_case_spec(cell.spec, cfg.strength_bound);
                if (offline) {
                    bool needs_network = false;
                    for (const auto& role : detail::roles_needed(entry, cfg.mitigation)) {
                        auto it = entry.endpoint_overrides.find(role);
                        auto git = cfg.endpoints.find(role);
                        if (it == entry.endpoint_overrides.end() && git == cfg.endpoints.end())
                            throw ConfigError("role \"" + role + "\" is not bound");
                        const AgentEndpoint& ep =
                            it != entry.endpoint_overrides.end() ? it->second : git->second;
                        if (!ep.scripted()) { needs_network = true; break; }
                    }
                    if (needs_network) {
                        ++skipped_offline;
                        continue;
                    }
                }
                cells.push_back(std::move(cell));
            }
        }
    }

    struct Task {
        std::size_t cell = 0;
        int trial = 0;
    };
    std::vector<Task> tasks;
    for (std::size_t c = 0; c < cells.size(); ++c)
        for (int t = 0; t < cfg.trials_per_cell; ++t) tasks.push_back(Task{c, t});

    std::filesystem::create_directories(cfg.output_dir);
    const std::string log_path = (std::filesystem::path(cfg.output_dir) / "run_log.jsonl").string();
    detail::OrderedLogWriter writer(log_path);
    {
        Json endpoints = Json::object();
        for (const auto& [role, ep] : cfg.endpoints) endpoints[role] = endpoint_identifier(ep);
        Json checksums = Json::object();
        for (const auto& [id, sum] : all_template_checksums()) checksums[id] = sum;
        Json header;
        header["schema_version"] = kRunLogSchemaVersion;
        header["kind"] = "run_header";
        header["config_fingerprint"] = cfg.config_fingerprint;
        header["master_seed"] = cfg.master_seed;
        header["trials_per_cell"] = cfg.trials_per_cell;
        header["mitigation"] = cfg.mitigation;
        header["request_count"] = requests.size();
        header["endpoints"] = endpoints;
        header["template_checksums"] = checksums;
        header["generated_at"] = detail::iso_now();
        writer.header(header);
    }

    std::vector<TrialRecord> records(tasks.size());
    std::atomic<std::size_t> cursor{0};
    std::mutex fatal_mutex;
    std::exception_ptr fatal;

    auto run_task = [&](const Task& task) -> TrialRecord {
        const Cell& cell = cells[task.cell];
        const CaseEntry& entry = *cell.entry;
        auto effective = [&](const std::string& role) -> AgentEndpoint {
            auto it = entry.endpoint_overrides.find(role);
            if (it != entry.endpoint_overrides.end()) return it->second;
            auto git = cfg.endpoints.find(role);
            if (git != cfg.endpoints.end()) return git->second;
            throw ConfigError("role \"" + role + "\" is not bound");
        };

        PipelineConfig pipe_cfg;
        pipe_cfg.candidate_count = cfg.candidate_count;
        pipe_cfg.parse_retry = cfg.parse_retry;
        pipe_cfg.ranking_format_hint = cfg.ranking_format_hint;
        pipe_cfg.role_endpoints["summary"] = effective("summary");
        pipe_cfg.role_endpoints["confirmation"] =
            cfg.endpoints.count("confirmation") || entry.endpoint_overrides.count("confirmation")
                ? effective("confirmation")
                : effective("summary");
        pipe_cfg.role_endpoints["travel_plan"] =
            cfg.endpoints.count("travel_plan") || entry.endpoint_overrides.count("travel_plan")
                ? effective("travel_plan")
                : effective("summary");
        Pipeline pipeline(gateway, pipe_cfg);

        ScamTeamConfig scam_cfg;
        scam_cfg.scammer_endpoint = effective("scammer");
        scam_cfg.judge_endpoint =
            cfg.endpoints.count("judge") || entry.endpoint_overrides.count("judge")
                ? effective("judge")
                : effective("scammer");
        scam_cfg.authentic_count = cfg.authentic_count;
        scam_cfg.fabricated_count = cfg.fabricated_count;
        scam_cfg.strength_bound = cfg.strength_bound;
        if (!entry.combination && entry.primary == FraudCase::kMultiPerson)
            scam_cfg.agent_count = cell.level;
        if (!entry.combination && entry.primary == FraudCase::kMultiRound)
            scam_cfg.max_level = cell.level;

        std::optional<Mitigator> mitigator;
        if (cfg.mitigation)
            mitigator.emplace(gateway, effective("anti_fraud"), cfg.parse_retry);
        const Mitigator* mitigation = mitigator ? &*mitigator : nullptr;

        const TravelRequest& request = requests[static_cast<std::size_t>(task.trial) %
                                                requests.size()];
        const std::uint64_t seed =
            derive_seed(cfg.master_seed, {scenario_name(cell.scenario), cell.spec.label(),
                                          std::to_string(cell.level), std::to_string(task.trial)});

        if (!cell.spec.single())
            return run_combination_trial(pipeline, corpus, scam_cfg, request, cell.scenario,
                                         cell.spec, seed, mitigation);
        switch (cell.spec.stages.front().kind) {
            case FraudCase::kMisinformation:
                return run_misinformation_trial(pipeline, corpus, scam_cfg, request, cell.scenario,
                                                seed, mitigation);
            case FraudCase::kMultiPerson:
                return run_multiperson_trial(pipeline, corpus, scam_cfg, request, cell.scenario,
                                             seed, mitigation);
            case FraudCase::kMultiRound:
                return run_multiround_trial(pipeline, corpus, scam_cfg, request, cell.scenario,
                                            seed, mitigation);
        }
        throw ConfigError("unhandled fraud case");
    };

    auto worker = [&] {
        for (;;) {
            const std::size_t i = cursor.fetch_add(1);
            if (i >= tasks.size()) return;
            try {
                records[i] = run_task(tasks[i]);
            } catch (...) {
                {
                    std::lock_guard<std::mutex> lock(fatal_mutex);
                    if (!fatal) fatal = std::current_exception();
                }
                cursor.store(tasks.size());
                return;
            }
            writer.append(i, runlog::to_json(records[i], cfg.config_fingerprint).dump());
        }
    };

    const int workers = std::max(1, std::min<int>(cfg.parallelism, static_cast<int>(tasks.size())));
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    if (fatal) std::rethrow_exception(fatal);

    RunResult result;
    result.log_path = log_path;
    result.trials_run = static_cast<int>(tasks.size());
    result.cells_skipped_offline = skipped_offline;
    result.report = aggregate(records, cfg.k_values);
    result.meta.trials_per_cell = cfg.trials_per_cell;
    result.meta.master_seed = cfg.master_seed;
    result.meta.mitigation = cfg.mitigation;
    result.meta.config_fingerprint = cfg.config_fingerprint;

    // A cell whose every trial was voided cannot report anything.
    for (std::size_t c = 0; c < cells.size(); ++c) {
        bool all_voided = cfg.trials_per_cell > 0;
        for (std::size_t i = 0; i < tasks.size(); ++i)
            if (tasks[i].cell == c && !records[i].voided) { all_voided = false; break; }
        if (all_voided) result.any_cell_fully_voided = true;
    }

    result.report_md_path = (std::filesystem::path(cfg.output_dir) / "report.md").string();
    result.report_csv_path = (std::filesystem::path(cfg.output_dir) / "report.csv").string();
    std::ofstream(result.report_md_path) << render_markdown(result.report, result.meta);
    std::ofstream(result.report_csv_path) << render_csv(result.report, result.meta);
    return result;
}

}  // namespace fraudbench
