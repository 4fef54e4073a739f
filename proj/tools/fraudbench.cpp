// fraudbench CLI: run fraud-robustness experiments against travel-planning
// agent pipelines, render reports from run logs, and validate corpus files.

#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fraudbench/http_client.hpp"
#include "fraudbench/runner.hpp"

using namespace fraudbench;

namespace {

int cmd_run(const std::string& config_path, bool offline, std::optional<std::uint64_t> seed,
            std::optional<std::string> out_dir) {
    ExperimentConfig cfg = load_config(config_path);
    if (seed) cfg.master_seed = *seed;
    if (out_dir) cfg.output_dir = *out_dir;

    RunResult result = run_experiment(cfg, default_http_poster(), offline);

    std::cout << render_markdown(result.report, result.meta) << "\n";
    std::cout << "run log:    " << result.log_path << "\n";
    std::cout << "report:     " << result.report_md_path << "\n";
    std::cout << "            " << result.report_csv_path << "\n";
    std::cout << "trials run: " << result.trials_run << "\n";
    if (result.cells_skipped_offline > 0)
        std::cout << "cells skipped (need network, --offline given): "
                  << result.cells_skipped_offline << "\n";
    if (result.any_cell_fully_voided) {
        std::cerr << "error: at least one cell was entirely voided (unusable judge verdicts)\n";
        return 2;
    }
    return 0;
}

int cmd_report(const std::vector<std::string>& log_paths, const std::string& format) {
    std::vector<runlog::ParsedLog> logs;
    for (const auto& path : log_paths) logs.push_back(runlog::parse_run_log(path));

    std::vector<MetricsReport> reports;
    std::vector<ReportMeta> metas;
    for (const auto& log : logs) {
        metas.push_back(meta_from_header(log.header));
        reports.push_back(aggregate(log.records));
    }

    if (format == "csv") {
        for (std::size_t i = 0; i < reports.size(); ++i)
            std::cout << render_csv(reports[i], metas[i]);
        return 0;
    }
    for (std::size_t i = 0; i < reports.size(); ++i)
        std::cout << render_markdown(reports[i], metas[i]);
    if (reports.size() == 2 && metas[0].mitigation != metas[1].mitigation) {
        const std::size_t base = metas[0].mitigation ? 1 : 0;
        std::cout << render_mitigation_delta(reports[base], reports[1 - base]);
    }
    return 0;
}

int cmd_corpus_validate(const std::string& path) {
    ListingCorpus corpus = load_corpus(path);
    std::size_t hotels = 0, flights = 0;
    for (const auto& [key, listings] : corpus.hotels) {
        (void)key;
        hotels += listings.size();
    }
    for (const auto& [key, listings] : corpus.flights) {
        (void)key;
        flights += listings.size();
    }
    std::cout << "ok: " << corpus.hotels.size() << " hotel keys (" << hotels << " listings), "
              << corpus.flights.size() << " flight routes (" << flights << " listings)\n";
    if (!corpus.provenance.empty()) std::cout << "provenance: " << corpus.provenance << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Fraud-robustness evaluation harness for travel-planning agent pipelines"};
    app.require_subcommand(1);

    std::string config_path;
    bool offline = false;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out_dir;
    auto* run = app.add_subcommand("run", "Run the experiment matrix from a config file");
    run->add_option("--config", config_path, "Experiment config (JSON)")->required();
    run->add_flag("--offline", offline, "Skip cells whose roles need remote endpoints");
    run->add_option("--seed", seed, "Override the master seed");
    run->add_option("--out", out_dir, "Override the output directory");

    std::vector<std::string> log_paths;
    std::string format = "md";
    auto* report = app.add_subcommand("report", "Render tables from one or more run logs");
    report->add_option("--log", log_paths, "Run log (JSONL); pass twice for a mitigation delta")
        ->required()
        ->expected(1, 2);
    report->add_option("--format", format, "Output format")
        ->check(CLI::IsMember({"md", "csv"}));

    std::string corpus_path;
    auto* corpus = app.add_subcommand("corpus", "Corpus utilities");
    auto* validate = corpus->add_subcommand("validate", "Validate a corpus file");
    validate->add_option("path", corpus_path, "Corpus file (JSON)")->required();
    corpus->require_subcommand(1);

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) return cmd_run(config_path, offline, seed, out_dir);
        if (report->parsed()) return cmd_report(log_paths, format);
        if (corpus->parsed()) return cmd_corpus_validate(corpus_path);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
