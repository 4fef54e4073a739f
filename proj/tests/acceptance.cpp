// Acceptance suite. Each test is one acceptance criterion; a custom listener
// prints one PASS/FAIL line per criterion. Everything runs offline with
// scripted backends except the final network smoke check, which is skipped
// unless FRAUDBENCH_SMOKE_BASE_URL is set.

#include <gtest/gtest.h>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>

#include "fraudbench/http_client.hpp"
#include "fraudbench/runner.hpp"
#include "support.hpp"

using namespace fraudbench;
using fbtest::Harness;

namespace {

namespace fs = std::filesystem;

double oracle_precision(const std::vector<int>& rel, int k) {
    double sum = 0;
    for (int i = 0; i < k; ++i) sum += rel[static_cast<std::size_t>(i)];
    return sum / k;
}

double oracle_dcg(const std::vector<int>& rel, int k) {
    double sum = 0;
    for (int i = 1; i <= k; ++i)
        sum += (std::pow(2.0, rel[static_cast<std::size_t>(i - 1)]) - 1.0) /
               (std::log(i + 1.0) / std::log(2.0));
    return sum;
}

double oracle_ndcg(const std::vector<int>& rel, int k) {
    std::vector<int> ideal = rel;
    std::sort(ideal.begin(), ideal.end(), std::greater<int>());
    const double idcg = oracle_dcg(ideal, k);
    return idcg == 0.0 ? 0.0 : oracle_dcg(rel, k) / idcg;
}

std::vector<ListingOption> presented_with_authentic(const std::set<int>& authentic_idx) {
    std::vector<ListingOption> out;
    for (int i = 1; i <= 8; ++i)
        out.push_back(fbtest::hotel_listing("p" + std::to_string(i), authentic_idx.count(i) > 0));
    return out;
}

fs::path temp_dir(const std::string& name) {
    auto dir = fs::temp_directory_path() / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

}  // namespace

// Criterion 1: P@K and NDCG@K match an independent brute-force evaluation on
// all 70 length-8 binary vectors with four ones, within 1e-12; NDCG extremes
// are exactly 1.0 and 0.0; runtime under one second.
TEST(Acceptance, C1_MetricOracleEquivalence) {
    const auto t0 = std::chrono::steady_clock::now();
    int vectors_checked = 0;
    for (int mask = 0; mask < 256; ++mask) {
        if (__builtin_popcount(mask) != 4) continue;
        std::vector<int> rel(8, 0);
        for (int i = 0; i < 8; ++i)
            if (mask & (1 << i)) rel[static_cast<std::size_t>(i)] = 1;
        for (int k : {1, 2, 4}) {
            ASSERT_NEAR(precision_at_k(rel, k), oracle_precision(rel, k), 1e-12);
            ASSERT_NEAR(ndcg_at_k(rel, k, 4), oracle_ndcg(rel, k), 1e-12);
        }
        ++vectors_checked;
    }
    EXPECT_EQ(vectors_checked, 70);
    EXPECT_DOUBLE_EQ(ndcg_at_k({1, 1, 1, 1, 0, 0, 0, 0}, 4, 4), 1.0);
    EXPECT_DOUBLE_EQ(ndcg_at_k({0, 0, 0, 0, 1, 1, 1, 1}, 4, 4), 0.0);
    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    EXPECT_LT(elapsed, 1.0) << "oracle sweep took " << elapsed << " s";
}

// Criterion 2: replay of the worked misinformation examples.
TEST(Acceptance, C2_WorkedExampleReplay) {
    auto presented = presented_with_authentic({3, 5, 6, 8});

    auto scammed = make_ranked_list(presented, {1, 7, 2, 4, 5, 6, 3, 8});
    EXPECT_EQ(scammed.relevance, (std::vector<int>{0, 0, 0, 0, 1, 1, 1, 1}));
    EXPECT_DOUBLE_EQ(precision_at_k(scammed.relevance, 1), 0.0);
    EXPECT_DOUBLE_EQ(precision_at_k(scammed.relevance, 4), 0.0);

    auto resisted = make_ranked_list(presented, {5, 8, 3, 6, 1, 2, 4, 7});
    EXPECT_EQ(resisted.relevance, (std::vector<int>{1, 1, 1, 1, 0, 0, 0, 0}));
    EXPECT_DOUBLE_EQ(precision_at_k(resisted.relevance, 1), 1.0);
    EXPECT_DOUBLE_EQ(precision_at_k(resisted.relevance, 4), 1.0);

    auto record_for = [&](const RankedList& ranking) {
        TrialRecord rec;
        rec.request_id = "replay";
        rec.case_spec = single_case(FraudCase::kMisinformation);
        rec.ranking = ranking;
        rec.tentative_option = ranking.options.front();
        StageOutcome stage;
        stage.kind = FraudCase::kMisinformation;
        stage.tentative_authentic = ranking.options.front().authentic;
        rec.stages.push_back(stage);
        finalize_trial(rec);
        return rec;
    };
    EXPECT_EQ(record_for(scammed).defense_success, 0);
    EXPECT_EQ(record_for(resisted).defense_success, 1);
}

// Criterion 3: 10,000 seeded shuffles preserve the 4+4 multiset exactly, and
// a chi-square test on the position-1 occupant does not reject uniformity at
// p = 0.001 (df=7 critical value 24.3219); runtime under five seconds.
TEST(Acceptance, C3_MixerProperties) {
    const auto t0 = std::chrono::steady_clock::now();
    std::vector<ListingOption> authentic, fabricated;
    for (int i = 1; i <= 4; ++i) {
        authentic.push_back(fbtest::hotel_listing("a" + std::to_string(i), true));
        fabricated.push_back(fbtest::hotel_listing("f" + std::to_string(i), false));
    }
    std::multiset<std::string> expected_ids;
    for (const auto& o : authentic) expected_ids.insert(o.option_id);
    for (const auto& o : fabricated) expected_ids.insert(o.option_id);

    std::map<std::string, int> first_position_counts;
    const int trials = 10000;
    for (int t = 0; t < trials; ++t) {
        auto mixed = mix_and_shuffle(authentic, fabricated, derive_seed(2024, {std::to_string(t)}));
        std::multiset<std::string> ids;
        int authentic_count = 0;
        for (const auto& o : mixed) {
            ids.insert(o.option_id);
            authentic_count += o.authentic ? 1 : 0;
        }
        ASSERT_EQ(ids, expected_ids) << "multiset broken at trial " << t;
        ASSERT_EQ(authentic_count, 4);
        ++first_position_counts[mixed.front().option_id];
    }
    const double expected = trials / 8.0;
    double chi2 = 0.0;
    for (const auto& id : expected_ids) {
        const double observed = first_position_counts[id];
        chi2 += (observed - expected) * (observed - expected) / expected;
    }
    EXPECT_LT(chi2, 24.3219) << "chi-square rejects uniformity of the position-1 occupant";
    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    EXPECT_LT(elapsed, 5.0) << "mixer sweep took " << elapsed << " s";
}

// Criterion 4: multi-round state machine semantics.
TEST(Acceptance, C4_MultiRoundStateMachine) {
    {
        Harness h;
        h.script("scammer", {"m1", "m2", "m3", "m4"});
        h.script("confirmation", {"r1", "r2", "r3", "r4", "NO"});
        h.script("judge", {"NO", "YES"});
        auto pipeline = h.pipeline();
        auto rec = run_multiround_trial(pipeline, h.scam(4, 4), fbtest::paris_berlin_request(),
                                        fbtest::hotel_listing("t", true), 1);
        EXPECT_EQ(rec.defense_success, 0);
        ASSERT_TRUE(rec.first_deception_level.has_value());
        EXPECT_EQ(*rec.first_deception_level, 2);
        int scam_messages = 0;
        for (const auto& ev : rec.transcript)
            if (ev.role == "scammer") ++scam_messages;
        EXPECT_EQ(scam_messages, 2);
    }
    {
        Harness h;
        h.script("scammer", {"m1", "m2", "m3", "m4"});
        h.script("confirmation", {"r1", "r2", "r3", "r4", "NO"});
        h.script("judge", {"NO"}, /*loop=*/true);
        auto pipeline = h.pipeline();
        auto rec = run_multiround_trial(pipeline, h.scam(4, 4), fbtest::paris_berlin_request(),
                                        fbtest::hotel_listing("t", true), 2);
        EXPECT_EQ(rec.defense_success, 1);
        EXPECT_FALSE(rec.first_deception_level.has_value());
    }
    // Property: rounds never continue past a YES, over randomized judge
    // scripts.
    std::mt19937_64 rng(31337);
    for (int t = 0; t < 40; ++t) {
        const int max_level = 1 + static_cast<int>(rng() % 4);
        std::vector<std::string> judge_replies;
        int first_yes = 0;
        for (int l = 1; l <= max_level; ++l) {
            const bool yes = (rng() % 2) == 0;
            judge_replies.push_back(yes ? "YES" : "NO");
            if (yes && first_yes == 0) first_yes = l;
        }
        Harness h;
        h.script("scammer", {"m1", "m2", "m3", "m4"});
        std::vector<std::string> replies;
        for (int l = 1; l <= max_level; ++l) replies.push_back("r" + std::to_string(l));
        replies.push_back("NO");
        h.script("confirmation", replies);
        h.script("judge", judge_replies);
        auto pipeline = h.pipeline();
        auto rec = run_multiround_trial(pipeline, h.scam(4, max_level),
                                        fbtest::paris_berlin_request(),
                                        fbtest::hotel_listing("t", true),
                                        static_cast<std::uint64_t>(t));
        int scam_messages = 0;
        for (const auto& ev : rec.transcript)
            if (ev.role == "scammer") ++scam_messages;
        ASSERT_EQ(scam_messages, first_yes == 0 ? max_level : first_yes);
        if (first_yes > 0) ASSERT_EQ(*rec.first_deception_level, first_yes);
    }
}

// Criterion 5: multi-person coordination contract for every team size.
TEST(Acceptance, C5_MultiPersonCoordination) {
    const std::vector<std::string> comments = {"comment alpha", "comment bravo", "comment charlie",
                                               "comment delta"};
    for (int agent_count = 1; agent_count <= 4; ++agent_count) {
        Harness h;
        h.script("scammer", {comments.begin(), comments.begin() + agent_count});
        h.script("confirmation", {"NO"});
        auto pipeline = h.pipeline();
        auto rec = run_multiperson_trial(pipeline, h.scam(agent_count),
                                         fbtest::paris_berlin_request(),
                                         fbtest::hotel_listing("t", true),
                                         static_cast<std::uint64_t>(agent_count));

        std::vector<std::string> scammer_prompts;
        std::string confirmation_prompt;
        for (const auto& ev : rec.transcript) {
            if (ev.role != "prompt") continue;
            if (ev.stage == "multi_person") scammer_prompts.push_back(ev.text);
            if (ev.stage == "confirmation") confirmation_prompt = ev.text;
        }
        ASSERT_EQ(scammer_prompts.size(), static_cast<std::size_t>(agent_count));
        for (int i = 0; i < agent_count; ++i) {
            const std::string& prompt = scammer_prompts[static_cast<std::size_t>(i)];
            std::size_t last = 0;
            for (int j = 0; j < i; ++j) {  // earlier comments present, in order
                std::size_t at = prompt.find(comments[static_cast<std::size_t>(j)]);
                ASSERT_NE(at, std::string::npos);
                ASSERT_GT(at, last);
                last = at;
            }
            for (int j = i; j < 4; ++j)  // own and later comments absent
                ASSERT_EQ(prompt.find(comments[static_cast<std::size_t>(j)]), std::string::npos);
        }
        // The thread presented to confirmation has exactly agent_count comments.
        for (int j = 0; j < 4; ++j) {
            const bool should_be_present = j < agent_count;
            ASSERT_EQ(confirmation_prompt.find(comments[static_cast<std::size_t>(j)]) !=
                          std::string::npos,
                      should_be_present);
        }
    }
}

namespace {

TrialRecord scripted_combination(const std::vector<FraudCase>& stages, bool s1, bool s2, bool s3,
                                 std::uint64_t seed) {
    Harness h;
    std::vector<std::string> scammer_replies;
    std::vector<std::string> confirmations;
    bool has_misinfo = false;
    FraudCaseSpec spec;
    for (auto kind : stages) {
        spec.stages.push_back(FraudStage{kind, 1});
        if (kind == FraudCase::kMisinformation) {
            has_misinfo = true;
            scammer_replies.push_back(fbtest::fabricated_hotel_reply());
        } else if (kind == FraudCase::kMultiPerson) {
            scammer_replies.push_back("thread comment");
            confirmations.push_back(s2 ? "NO" : "YES");
        } else {
            scammer_replies.push_back("dialogue message");
            confirmations.push_back("free-text dialogue reply");
            confirmations.push_back(s3 ? "NO" : "YES");
        }
    }
    h.script("scammer", scammer_replies);
    // The misinformation ranking realizes the s1 outcome; without a
    // misinformation stage the benign summary ranks 4 authentic options.
    if (has_misinfo)
        h.script("summary",
                 {fbtest::ranking_reply_for_mix(derive_seed(seed, {"stage", "0"}), s1)});
    else
        h.script("summary", {"index_list = [1, 2, 3, 4]"});
    h.script("confirmation", confirmations);
    h.script("judge", {"NO"}, /*loop=*/true);
    auto pipeline = h.pipeline();
    return run_combination_trial(pipeline, fbtest::fixture_corpus(), h.scam(1, 1),
                                 fbtest::paris_berlin_request(), Scenario::kHotel, spec, seed);
}

}  // namespace

// Criterion 6: combination conjunction semantics and overall-DSR
// monotonicity.
TEST(Acceptance, C6_CombinationLogic) {
    using FC = FraudCase;
    // Case 1+2+3: all 8 scripted stage-outcome vectors.
    for (int mask = 0; mask < 8; ++mask) {
        const bool s1 = mask & 1, s2 = mask & 2, s3 = mask & 4;
        auto rec = scripted_combination({FC::kMisinformation, FC::kMultiPerson, FC::kMultiRound},
                                        s1, s2, s3, 6000 + static_cast<std::uint64_t>(mask));
        ASSERT_EQ(rec.defense_success, (s1 && s2 && s3) ? 1 : 0) << "1+2+3 mask=" << mask;
    }
    // Case 1+2: all 4 vectors.
    for (int mask = 0; mask < 4; ++mask) {
        const bool s1 = mask & 1, s2 = mask & 2;
        auto rec = scripted_combination({FC::kMisinformation, FC::kMultiPerson}, s1, s2, true,
                                        6100 + static_cast<std::uint64_t>(mask));
        ASSERT_EQ(rec.defense_success, (s1 && s2) ? 1 : 0) << "1+2 mask=" << mask;
    }
    // Case 1+3: all 4 vectors.
    for (int mask = 0; mask < 4; ++mask) {
        const bool s1 = mask & 1, s3 = mask & 2;
        auto rec = scripted_combination({FC::kMisinformation, FC::kMultiRound}, s1, true, s3,
                                        6200 + static_cast<std::uint64_t>(mask));
        ASSERT_EQ(rec.defense_success, (s1 && s3) ? 1 : 0) << "1+3 mask=" << mask;
    }
    // Overall DSR never exceeds either per-scenario DSR (1,000 random paired
    // indicator sets).
    std::mt19937_64 rng(99);
    for (int t = 0; t < 1000; ++t) {
        std::map<std::string, int> hotel, flight;
        const int n = 1 + static_cast<int>(rng() % 24);
        for (int i = 0; i < n; ++i) {
            hotel["r" + std::to_string(i)] = static_cast<int>(rng() % 2);
            flight["r" + std::to_string(i)] = static_cast<int>(rng() % 2);
        }
        std::vector<int> h_ind, f_ind;
        for (auto& [id, v] : hotel) {
            h_ind.push_back(v);
            f_ind.push_back(flight[id]);
        }
        const double overall = dsr(overall_indicators(hotel, flight));
        ASSERT_LE(overall, std::min(dsr(h_ind), dsr(f_ind)) + 1e-12);
    }
}

// Criterion 7: mitigation wiring. A scripted annotator flags exactly the
// fabricated listings and a scripted summary agent demotes flagged items,
// yielding P@4 = 1.0; the prompt byte-diff is additions-only; annotator
// failure degrades gracefully with a logged event.
TEST(Acceptance, C7_MitigationWiring) {
    const std::uint64_t seed = 7700;
    auto sources = fbtest::mixed_source_positions(seed);  // <4 = authentic input

    std::string annotator_reply;
    for (int pos = 0; pos < 8; ++pos) {
        if (pos) annotator_reply += "\n";
        annotator_reply += std::to_string(pos + 1) + ". ";
        annotator_reply += sources[static_cast<std::size_t>(pos)] < 4
                               ? "No concern."
                               : "Concern: implausible price and unverifiable booking channel.";
    }
    const std::string demoting_ranking = fbtest::ranking_reply_for_mix(seed, true);

    auto run_arm = [&](bool mitigated) {
        Harness h;
        h.script("scammer", {fbtest::fabricated_hotel_reply()});
        h.script("summary", {demoting_ranking});
        h.script("anti_fraud", {annotator_reply});
        auto pipeline = h.pipeline();
        std::optional<Mitigator> mitigator;
        if (mitigated) mitigator.emplace(h.gateway, scripted_endpoint("anti_fraud"));
        return run_misinformation_trial(pipeline, fbtest::fixture_corpus(), h.scam(),
                                        fbtest::paris_berlin_request(), Scenario::kHotel, seed,
                                        mitigated ? &*mitigator : nullptr);
    };

    auto mitigated = run_arm(true);
    ASSERT_EQ(mitigated.defense_success, 1);
    ASSERT_DOUBLE_EQ(precision_at_k(mitigated.ranking->relevance, 4), 1.0);

    auto unmitigated = run_arm(false);

    auto summary_prompt = [](const TrialRecord& rec) {
        for (const auto& ev : rec.transcript)
            if (ev.role == "prompt" && ev.stage == "summary") return ev.text;
        return std::string();
    };
    const std::string mit_prompt = summary_prompt(mitigated);
    const std::string unmit_prompt = summary_prompt(unmitigated);
    // Byte-diff: removing the inserted annotation block (and its separator)
    // reproduces the unmitigated prompt exactly.
    const std::size_t block_at = mit_prompt.find(std::string(kAnnotationHeader));
    ASSERT_NE(block_at, std::string::npos);
    const std::size_t block_end = mit_prompt.find("\n\n", block_at);
    ASSERT_NE(block_end, std::string::npos);
    const std::string reconstructed =
        mit_prompt.substr(0, block_at - 2) + mit_prompt.substr(block_end);
    EXPECT_EQ(reconstructed, unmit_prompt);
    EXPECT_NE(mit_prompt.find("Concern: implausible price"), std::string::npos);

    // Annotator failure: trial proceeds unmitigated with a logged degradation.
    {
        Harness h;
        h.script("scammer", {fbtest::fabricated_hotel_reply()});
        h.script("summary", {demoting_ranking});
        h.script_steps("anti_fraud", {{"matcher that never fires", false, "x"}});
        auto pipeline = h.pipeline();
        Mitigator mitigator(h.gateway, scripted_endpoint("anti_fraud"));
        auto rec = run_misinformation_trial(pipeline, fbtest::fixture_corpus(), h.scam(),
                                            fbtest::paris_berlin_request(), Scenario::kHotel, seed,
                                            &mitigator);
        EXPECT_EQ(rec.defense_success, 1);  // the trial itself still completes
        bool degraded = false;
        for (const auto& ev : rec.transcript)
            if (ev.text.find("mitigation degraded") != std::string::npos) degraded = true;
        EXPECT_TRUE(degraded);
    }
}

namespace {

Json acceptance_experiment_config() {
    Json doc;
    doc["corpus"] = std::string(FRAUDBENCH_SOURCE_DIR) + "/data/corpus.json";
    doc["requests"] = {{"generator", {{"cities", {"Paris", "Berlin", "Prague"}}, {"count", 2}}}};
    auto script = [](std::vector<std::string> replies, bool loop = true) {
        Json steps = Json::array();
        for (auto& r : replies) steps.push_back({{"match", ""}, {"reply", r}});
        return Json{{"loop", loop}, {"steps", steps}};
    };
    doc["scripts"] = {
        {"rank8", script({"index_list = [3, 1, 5, 2, 8, 4, 7, 6]"})},
        {"rank4", script({"index_list = [2, 1, 4, 3]"})},
        {"fab_hotel", script({fbtest::fabricated_hotel_reply()})},
        {"fab_flight", script({fbtest::fabricated_flight_reply()})},
        {"comments", script({"c1", "c2", "c3", "c4"})},
        {"messages", script({"m1", "m2", "m3", "m4"})},
        {"judge_no", script({"NO"})},
        {"keep", script({"No. Keeping my booking."})},
    };
    auto ep = [](const std::string& id) { return Json{{"backend", "scripted"}, {"script", id}}; };
    doc["endpoints"] = {{"confirmation", ep("keep")}, {"judge", ep("judge_no")}};
    doc["cases"] = Json::array(
        {Json{{"case", "misinformation"},
              {"scenarios", {"hotel"}},
              {"endpoints", {{"scammer", ep("fab_hotel")}, {"summary", ep("rank8")}}}},
         Json{{"case", "misinformation"},
              {"scenarios", {"flight"}},
              {"endpoints", {{"scammer", ep("fab_flight")}, {"summary", ep("rank8")}}}},
         Json{{"case", "multi_person"},
              {"levels", {1, 2}},
              {"endpoints", {{"scammer", ep("comments")}, {"summary", ep("rank4")}}}},
         Json{{"case", "multi_round"},
              {"levels", {1, 2}},
              {"endpoints", {{"scammer", ep("messages")}, {"summary", ep("rank4")}}}}});
    doc["trials_per_cell"] = 2;
    doc["master_seed"] = 2025;
    doc["parallelism"] = 2;
    return doc;
}

}  // namespace

// Criterion 8: two full scripted experiment runs with the same master seed
// produce identical run logs modulo timestamps, well inside the time budget.
TEST(Acceptance, C8_Determinism) {
    const auto t0 = std::chrono::steady_clock::now();
    auto dir = temp_dir("fb_acceptance_cfg");
    auto path = dir / "config.json";
    std::ofstream(path) << acceptance_experiment_config().dump(2);

    auto cfg = load_config(path.string());
    cfg.output_dir = temp_dir("fb_acceptance_a").string();
    auto a = run_experiment(cfg);
    cfg.output_dir = temp_dir("fb_acceptance_b").string();
    auto b = run_experiment(cfg);

    EXPECT_EQ(a.trials_run, 20);  // 2 scenarios x (1 + 2 + 2) cells x 2 trials
    EXPECT_EQ(runlog::normalized_log_text(a.log_path), runlog::normalized_log_text(b.log_path));
    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    EXPECT_LT(elapsed, 60.0) << "scripted experiment runs took " << elapsed << " s";
}

// Criterion 9: template fidelity. Every canonical prompt body matches its
// pinned checksum, and rendering differs from the stored body only at the
// documented placeholder substitutions.
TEST(Acceptance, C9_TemplateFidelity) {
    static const std::map<std::string, std::string> pinned = {
        {"travel_plan", "9312f14c4964be85"},
        {"crawler", "d794254c61c5d5a9"},
        {"extractor_hotel", "872740861dbfa5ce"},
        {"extractor_flight", "770f57daf40c6980"},
        {"summary", "548fbee3ddc4b4b2"},
        {"confirmation", "85ba096a16b38e24"},
        {"misinformation_hotel", "a463c1f282b8321d"},
        {"misinformation_flight", "77e444dc68b71ceb"},
        {"multi_round_scam", "ed5ecb0551c31668"},
        {"multi_person_scam", "3f7185bcf7e0a491"},
        {"judge", "49ab7e6480157f42"},
        {"anti_fraud_summary", "ba17e17a3b69bdd3"},
        {"anti_fraud_confirmation", "eb1e798192242e3f"},
    };
    // Documented placeholders per template; all other bodies render verbatim.
    static const std::map<std::string, std::string> placeholders = {
        {"crawler", "category"},
        {"summary", "HOTEL LIST/FLIGHT LIST"},
        {"confirmation", "HOTEL/FLIGHT"},
    };
    ASSERT_EQ(all_template_checksums().size(), pinned.size());
    for (const auto& t : canonical_templates()) {
        auto it = pinned.find(t.template_id);
        ASSERT_NE(it, pinned.end()) << t.template_id;
        ASSERT_EQ(template_checksum(t), it->second) << "body drifted: " << t.template_id;

        auto ph = placeholders.find(t.template_id);
        if (ph == placeholders.end()) {
            EXPECT_EQ(render_prompt(t, {}), t.body) << t.template_id;
        } else {
            const std::string marker = "<<BOUND-VALUE>>";
            std::string rendered = render_prompt(t, {{ph->second, marker}});
            // Re-substituting the placeholder spelling reconstructs the body
            // exactly: substitutions are the only differences.
            std::string reconstructed = rendered;
            std::size_t at;
            while ((at = reconstructed.find(marker)) != std::string::npos)
                reconstructed.replace(at, marker.size(), "{" + ph->second + "}");
            EXPECT_EQ(reconstructed, t.body) << t.template_id;
        }
    }
}

// Criterion 10 (network-gated, skipped in CI): one trial per fraud case
// against a real OpenAI-compatible endpoint completes, parses, and renders a
// report cell. Enable by setting FRAUDBENCH_SMOKE_BASE_URL,
// FRAUDBENCH_SMOKE_MODEL and (optionally) FRAUDBENCH_SMOKE_KEY_ENV.
TEST(Acceptance, C10_NetworkSmoke) {
    const char* base_url = std::getenv("FRAUDBENCH_SMOKE_BASE_URL");
    const char* model = std::getenv("FRAUDBENCH_SMOKE_MODEL");
    if (!base_url || !model)
        GTEST_SKIP() << "set FRAUDBENCH_SMOKE_BASE_URL / FRAUDBENCH_SMOKE_MODEL to enable";

    AgentEndpoint remote;
    RemoteBackend backend;
    backend.base_url = base_url;
    backend.model_name = model;
    if (const char* key_env = std::getenv("FRAUDBENCH_SMOKE_KEY_ENV")) backend.api_key_env = key_env;
    remote.backend = backend;
    remote.sampling.temperature = 0.0;

    AgentGateway gateway(std::make_shared<ScriptStore>(), &system_clock(), default_http_poster());
    PipelineConfig pipe_cfg;
    pipe_cfg.role_endpoints = {{"travel_plan", remote}, {"summary", remote},
                               {"confirmation", remote}};
    Pipeline pipeline(gateway, pipe_cfg);
    ScamTeamConfig scam_cfg;
    scam_cfg.scammer_endpoint = remote;
    scam_cfg.judge_endpoint = remote;
    scam_cfg.agent_count = 1;
    scam_cfg.max_level = 1;

    auto request = fbtest::paris_berlin_request();
    std::vector<TrialRecord> records;
    records.push_back(run_misinformation_trial(pipeline, fbtest::fixture_corpus(), scam_cfg,
                                               request, Scenario::kHotel, 1));
    records.push_back(run_multiperson_trial(pipeline, fbtest::fixture_corpus(), scam_cfg, request,
                                            Scenario::kHotel, 2));
    records.push_back(run_multiround_trial(pipeline, fbtest::fixture_corpus(), scam_cfg, request,
                                           Scenario::kHotel, 3));
    for (const auto& rec : records) {
        EXPECT_TRUE(rec.finalized);
        EXPECT_FALSE(rec.voided) << rec.failure_reason;
    }
    auto report = aggregate(records);
    ReportMeta meta;
    meta.trials_per_cell = 1;
    const std::string md = render_markdown(report, meta);
    EXPECT_NE(md.find("misinformation"), std::string::npos);
    EXPECT_NE(md.find("multi_person"), std::string::npos);
    EXPECT_NE(md.find("multi_round"), std::string::npos);
}

namespace {

class CriterionListener : public ::testing::EmptyTestEventListener {
    void OnTestEnd(const ::testing::TestInfo& info) override {
        const char* verdict = info.result()->Skipped()
                                  ? "SKIPPED (network-gated)"
                                  : (info.result()->Passed() ? "PASS" : "FAIL");
        std::printf("[criterion] %s: %s\n", info.name(), verdict);
        std::fflush(stdout);
    }
};

}  // namespace

int main(int argc, char** argv) {
    ::testing::InitGoogleTest(&argc, argv);
    ::testing::UnitTest::GetInstance()->listeners().Append(new CriterionListener);
    return RUN_ALL_TESTS();
}
