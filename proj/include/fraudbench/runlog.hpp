#pragma once

#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "fraudbench/domain.hpp"
#include "fraudbench/errors.hpp"

namespace fraudbench {

// JSONL run log: a header object on the first line, then one TrialRecord per
// line. Key order is fixed (schema_version first, timing last) so logs from
// scripted runs are byte-identical once timing fields are dropped.
using Json = nlohmann::ordered_json;

inline constexpr int kRunLogSchemaVersion = 1;

namespace runlog {

inline Json to_json(const ListingOption& opt) {
    Json attrs = Json::object();
    for (const auto& [key, value] : opt.attributes) attrs[key] = value;
    return Json{{"id", opt.option_id},
                {"scenario", scenario_name(opt.scenario)},
                {"display", opt.display_text},
                {"attributes", attrs},
                {"authentic", opt.authentic}};
}

inline ListingOption listing_from_json(const Json& j) {
    ListingOption opt;
    opt.option_id = j.at("id").get<std::string>();
    opt.scenario = scenario_from_name(j.at("scenario").get<std::string>());
    opt.display_text = j.at("display").get<std::string>();
    for (const auto& [key, value] : j.at("attributes").items())
        opt.attributes[key] = value.get<std::string>();
    opt.authentic = j.at("authentic").get<bool>();
    return opt;
}

inline Json to_json(const StageOutcome& s) {
    Json j{{"case", fraud_case_name(s.kind)},
           {"strength", s.strength},
           {"tentative_authentic", s.tentative_authentic}};
    j["verdict"] = s.verdict ? Json(verdict_name(*s.verdict)) : Json(nullptr);
    j["deceived_at"] = s.deceived_at ? Json(*s.deceived_at) : Json(nullptr);
    j["indicator"] = s.indicator;
    return j;
}

inline StageOutcome stage_from_json(const Json& j) {
    StageOutcome s;
    s.kind = fraud_case_from_name(j.at("case").get<std::string>());
    s.strength = j.at("strength").get<int>();
    s.tentative_authentic = j.at("tentative_authentic").get<bool>();
    if (!j.at("verdict").is_null())
        s.verdict = j.at("verdict").get<std::string>() == "keep" ? Verdict::kKeep : Verdict::kSwitch;
    if (!j.at("deceived_at").is_null()) s.deceived_at = j.at("deceived_at").get<int>();
    s.indicator = j.at("indicator").get<int>();
    return s;
}

inline Json to_json(const TrialRecord& r, const std::string& config_fingerprint = "") {
    Json j;
    j["schema_version"] = kRunLogSchemaVersion;
    j["kind"] = "trial";
    if (!config_fingerprint.empty()) j["config_fingerprint"] = config_fingerprint;
    j["request_id"] = r.request_id;
    j["scenario"] = scenario_name(r.scenario);
    Json stages_spec = Json::array();
    for (const auto& s : r.case_spec.stages)
        stages_spec.push_back(Json{{"case", fraud_case_name(s.kind)}, {"strength", s.strength}});
    j["case"] = Json{{"label", r.case_spec.label()}, {"stages", stages_spec}};
    j["seed"] = r.seed;
    if (r.ranking) {
        Json options = Json::array();
        for (const auto& opt : r.ranking->options) options.push_back(to_json(opt));
        j["ranking"] = Json{{"options", options}, {"relevance", r.ranking->relevance}};
    } else {
        j["ranking"] = nullptr;
    }
    j["tentative"] = r.tentative_option ? to_json(*r.tentative_option) : Json(nullptr);
    Json outcomes = Json::array();
    for (const auto& s : r.stages) outcomes.push_back(to_json(s));
    j["stages"] = outcomes;
    j["first_deception_level"] =
        r.first_deception_level ? Json(*r.first_deception_level) : Json(nullptr);
    j["defense_success"] = r.defense_success;
    j["voided"] = r.voided;
    j["parse_failures"] = r.parse_failures;
    j["failure_reason"] = r.failure_reason;
    Json transcript = Json::array();
    for (const auto& ev : r.transcript)
        transcript.push_back(Json{{"role", ev.role},
                                  {"stage", ev.stage},
                                  {"text", ev.text},
                                  {"latency_ms", ev.latency_ms}});
    j["transcript"] = transcript;
    j["timing"] = Json{{"wall_time_ms", r.wall_time.count() * 1000.0}};
    return j;
}

inline TrialRecord trial_from_json(const Json& j) {
    TrialRecord r;
    r.request_id = j.at("request_id").get<std::string>();
    r.scenario = scenario_from_name(j.at("scenario").get<std::string>());
    for (const auto& s : j.at("case").at("stages"))
        r.case_spec.stages.push_back(
            FraudStage{fraud_case_from_name(s.at("case").get<std::string>()),
                       s.at("strength").get<int>()});
    r.seed = j.at("seed").get<std::uint64_t>();
    if (!j.at("ranking").is_null()) {
        RankedList ranking;
        for (const auto& opt : j.at("ranking").at("options"))
            ranking.options.push_back(listing_from_json(opt));
        ranking.relevance = j.at("ranking").at("relevance").get<std::vector<int>>();
        r.ranking = std::move(ranking);
    }
    if (!j.at("tentative").is_null()) r.tentative_option = listing_from_json(j.at("tentative"));
    for (const auto& s : j.at("stages")) r.stages.push_back(stage_from_json(s));
    if (!j.at("first_deception_level").is_null())
        r.first_deception_level = j.at("first_deception_level").get<int>();
    r.defense_success = j.at("defense_success").get<int>();
    r.voided = j.at("voided").get<bool>();
    r.parse_failures = j.at("parse_failures").get<int>();
    r.failure_reason = j.at("failure_reason").get<std::string>();
    for (const auto& ev : j.at("transcript"))
        r.transcript.push_back(TranscriptEvent{ev.at("role").get<std::string>(),
                                               ev.at("stage").get<std::string>(),
                                               ev.at("text").get<std::string>(),
                                               ev.at("latency_ms").get<double>()});
    r.wall_time = std::chrono::duration<double>(j.at("timing").at("wall_time_ms").get<double>() /
                                                1000.0);
    r.finalized = true;
    return r;
}

struct ParsedLog {
    Json header;  // may be null for headerless logs
    std::vector<TrialRecord> records;
};

// Reads a JSONL run log; corrupt lines report their 1-based line number.
inline ParsedLog parse_run_log(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw LogCorruptionError("run log not readable: " + path);
    ParsedLog out;
    out.header = nullptr;
    std::string line;
    int line_number = 0;
    while (std::getline(in, line)) {
        ++line_number;
        if (trim(line).empty()) continue;
        Json j = Json::parse(line, nullptr, false);
        if (j.is_discarded())
            throw LogCorruptionError(path + ":" + std::to_string(line_number) +
                                     ": line is not valid JSON");
        try {
            if (!j.contains("schema_version"))
                throw LogCorruptionError("missing schema_version");
            const std::string kind = j.value("kind", std::string("trial"));
            if (kind == "run_header") {
                out.header = j;
            } else if (kind == "trial") {
                out.records.push_back(trial_from_json(j));
            } else {
                throw LogCorruptionError("unknown record kind \"" + kind + "\"");
            }
        } catch (const Json::exception& e) {
            throw LogCorruptionError(path + ":" + std::to_string(line_number) + ": " + e.what());
        } catch (const LogCorruptionError& e) {
            throw LogCorruptionError(path + ":" + std::to_string(line_number) + ": " + e.what());
        }
    }
    return out;
}

// Drops every timing-dependent field, for byte-comparisons between runs.
inline std::string normalized_log_text(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw LogCorruptionError("run log not readable: " + path);
    std::string line, out;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        Json j = Json::parse(line, nullptr, false);
        if (j.is_discarded()) throw LogCorruptionError("corrupt line in " + path);
        j.erase("timing");
        j.erase("generated_at");
        if (j.contains("transcript"))
            for (auto& ev : j["transcript"]) ev.erase("latency_ms");
        out += j.dump();
        out += "\n";
    }
    return out;
}

}  // namespace runlog

}  // namespace fraudbench
