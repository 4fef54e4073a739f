#pragma once

#include <algorithm>
#include <cstdio>
#include <set>
#include <string>
#include <vector>

#include "fraudbench/metrics.hpp"
#include "fraudbench/runlog.hpp"

namespace fraudbench {

// Rendered tables show percentages with two decimals (run logs keep full
// precision).
inline std::string format_percent(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v * 100.0);
    return buf;
}

struct ReportMeta {
    int trials_per_cell = 0;
    std::uint64_t master_seed = 0;
    bool mitigation = false;
    std::string config_fingerprint;
};

inline ReportMeta meta_from_header(const Json& header) {
    ReportMeta meta;
    if (header.is_null()) return meta;
    meta.trials_per_cell = header.value("trials_per_cell", 0);
    meta.master_seed = header.value("master_seed", std::uint64_t{0});
    meta.mitigation = header.value("mitigation", false);
    meta.config_fingerprint = header.value("config_fingerprint", std::string());
    return meta;
}

namespace detail {

inline std::string level_text(const CellMetrics& cell) {
    return cell.level == 0 ? std::string("-") : std::to_string(cell.level);
}

inline std::vector<const CellMetrics*> sorted_cells(const MetricsReport& report) {
    std::vector<const CellMetrics*> cells;
    for (const auto& c : report.cells) cells.push_back(&c);
    std::sort(cells.begin(), cells.end(), [](const CellMetrics* a, const CellMetrics* b) {
        if (a->case_label != b->case_label) return a->case_label < b->case_label;
        return a->level < b->level;
    });
    return cells;
}

inline std::set<int> k_values_in(const MetricsReport& report) {
    std::set<int> ks;
    for (const auto& cell : report.cells)
        for (const auto& [scenario, sm] : cell.scenarios) {
            (void)scenario;
            for (const auto& [k, v] : sm.p_at_k) { (void)v; ks.insert(k); }
        }
    return ks;
}

inline std::string scenario_dsr_text(const CellMetrics& cell, Scenario s) {
    auto it = cell.scenarios.find(s);
    if (it == cell.scenarios.end() || it->second.trial_count == 0) return "-";
    return format_percent(it->second.dsr_value);
}

}  // namespace detail

// Shaped like the headline tables: one row per (case, difficulty level) with
// Hotel / Flight / Overall DSR columns, plus a ranking-quality table for
// misinformation cells.
inline std::string render_markdown(const MetricsReport& report, const ReportMeta& meta) {
    std::string out = "# Fraud robustness report\n\n";
    out += "## Defense Success Rate\n\n";
    out += "| Case | Level | Hotel | Flight | Overall | Trials | Voided |\n";
    out += "|---|---|---|---|---|---|---|\n";
    for (const auto* cell : detail::sorted_cells(report)) {
        int trials = 0, voided = 0;
        for (const auto& [s, sm] : cell->scenarios) {
            (void)s;
            trials += sm.trial_count;
            voided += sm.voided_count;
        }
        out += "| " + cell->case_label + " | " + detail::level_text(*cell) + " | " +
               detail::scenario_dsr_text(*cell, Scenario::kHotel) + " | " +
               detail::scenario_dsr_text(*cell, Scenario::kFlight) + " | " +
               (cell->overall_dsr ? format_percent(*cell->overall_dsr) : std::string("-")) + " | " +
               std::to_string(trials) + " | " + std::to_string(voided) + " |\n";
    }

    auto ks = detail::k_values_in(report);
    if (!ks.empty()) {
        out += "\n## Misinformation ranking quality\n\n";
        out += "| Case | Scenario |";
        for (int k : ks) out += " P@" + std::to_string(k) + " |";
        for (int k : ks) out += " NDCG@" + std::to_string(k) + " |";
        out += "\n|---|---|";
        for (std::size_t i = 0; i < 2 * ks.size(); ++i) out += "---|";
        out += "\n";
        for (const auto* cell : detail::sorted_cells(report)) {
            for (auto scenario : {Scenario::kHotel, Scenario::kFlight}) {
                auto it = cell->scenarios.find(scenario);
                if (it == cell->scenarios.end() || it->second.p_at_k.empty()) continue;
                out += "| " + cell->case_label + " | " + scenario_name(scenario) + " |";
                for (int k : ks) {
                    auto p = it->second.p_at_k.find(k);
                    out += p == it->second.p_at_k.end() ? " - |" : " " + format_percent(p->second) + " |";
                }
                for (int k : ks) {
                    auto n = it->second.ndcg_at_k.find(k);
                    out += n == it->second.ndcg_at_k.end() ? " - |"
                                                           : " " + format_percent(n->second) + " |";
                }
                out += "\n";
            }
        }
    }

    out += "\nAll values are percentages. N = " + std::to_string(meta.trials_per_cell) +
           " trials per (scenario, case, level) cell; voided trials are excluded from every "
           "denominator and counted separately. Master seed " +
           std::to_string(meta.master_seed) + "; mitigation " +
           (meta.mitigation ? "on" : "off") +
           ". Counts here describe this run only and are not comparable to any published "
           "results.\n";
    return out;
}

inline std::string render_csv(const MetricsReport& report, const ReportMeta& meta) {
    auto ks = detail::k_values_in(report);
    std::string out = "case,level,scenario,dsr,overall_dsr,trials,voided,parse_failures";
    for (int k : ks) out += ",p_at_" + std::to_string(k);
    for (int k : ks) out += ",ndcg_at_" + std::to_string(k);
    out += "\n";
    for (const auto* cell : detail::sorted_cells(report)) {
        for (auto scenario : {Scenario::kHotel, Scenario::kFlight}) {
            auto it = cell->scenarios.find(scenario);
            if (it == cell->scenarios.end()) continue;
            const auto& sm = it->second;
            out += cell->case_label + "," + detail::level_text(*cell) + "," +
                   scenario_name(scenario) + ",";
            out += sm.trial_count > 0 ? format_percent(sm.dsr_value) : "";
            out += ",";
            out += cell->overall_dsr ? format_percent(*cell->overall_dsr) : "";
            out += "," + std::to_string(sm.trial_count) + "," + std::to_string(sm.voided_count) +
                   "," + std::to_string(sm.parse_failures);
            for (int k : ks) {
                auto p = sm.p_at_k.find(k);
                out += ",";
                if (p != sm.p_at_k.end()) out += format_percent(p->second);
            }
            for (int k : ks) {
                auto n = sm.ndcg_at_k.find(k);
                out += ",";
                if (n != sm.ndcg_at_k.end()) out += format_percent(n->second);
            }
            out += "\n";
        }
    }
    out += "# N=" + std::to_string(meta.trials_per_cell) + " trials per cell, master_seed=" +
           std::to_string(meta.master_seed) + ", mitigation=" + (meta.mitigation ? "on" : "off") +
           "\n";
    return out;
}

// Before/after comparison when one log ran with mitigation and one without.
inline std::string render_mitigation_delta(const MetricsReport& unmitigated,
                                           const MetricsReport& mitigated) {
    std::string out = "\n## Mitigation effect (DSR percentage points)\n\n";
    out += "| Case | Level | Scenario | Before | After | Delta |\n";
    out += "|---|---|---|---|---|---|\n";
    for (const auto* base : detail::sorted_cells(unmitigated)) {
        const CellMetrics* other = nullptr;
        for (const auto& cell : mitigated.cells)
            if (cell.case_label == base->case_label && cell.level == base->level) other = &cell;
        if (!other) continue;
        for (auto scenario : {Scenario::kHotel, Scenario::kFlight}) {
            auto b = base->scenarios.find(scenario);
            auto m = other->scenarios.find(scenario);
            if (b == base->scenarios.end() || m == other->scenarios.end()) continue;
            if (b->second.trial_count == 0 || m->second.trial_count == 0) continue;
            const double delta = m->second.dsr_value - b->second.dsr_value;
            out += "| " + base->case_label + " | " + detail::level_text(*base) + " | " +
                   scenario_name(scenario) + " | " + format_percent(b->second.dsr_value) + " | " +
                   format_percent(m->second.dsr_value) + " | " +
                   (delta >= 0 ? "+" : "") + format_percent(delta) + " |\n";
        }
        if (base->overall_dsr && other->overall_dsr) {
            const double delta = *other->overall_dsr - *base->overall_dsr;
            out += "| " + base->case_label + " | " + detail::level_text(*base) + " | overall | " +
                   format_percent(*base->overall_dsr) + " | " + format_percent(*other->overall_dsr) +
                   " | " + (delta >= 0 ? "+" : "") + format_percent(delta) + " |\n";
        }
    }
    return out;
}

}  // namespace fraudbench
