#pragma once

#include <fstream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "fraudbench/domain.hpp"
#include "fraudbench/errors.hpp"
#include "fraudbench/util.hpp"

namespace fraudbench {

// Fixture-backed replacement for the live crawler/extractor stages: authentic
// listings are loaded once from a JSON corpus and served deterministically.
// Keys are destination cities for hotels and "ORIGIN->DEST" pairs for flights.
struct ListingCorpus {
    std::map<std::string, std::vector<ListingOption>> hotels;
    std::map<std::string, std::vector<ListingOption>> flights;
    std::string provenance;

    const std::map<std::string, std::vector<ListingOption>>& table(Scenario s) const {
        return s == Scenario::kHotel ? hotels : flights;
    }
};

inline std::string corpus_key(Scenario scenario, const TravelRequest& request) {
    if (scenario == Scenario::kHotel) return request.destination_city;
    return request.origin_city + "->" + request.destination_city;
}

inline constexpr int kMinListingsPerKey = 4;  // the 4+4 mixer needs four authentic options

namespace detail {

inline ListingOption listing_from_json(const nlohmann::json& entry, Scenario scenario,
                                       const std::string& where) {
    if (!entry.is_object()) throw SchemaError(where + ": listing must be an object");
    auto id_it = entry.find("id");
    if (id_it == entry.end() || !id_it->is_string() || id_it->get<std::string>().empty())
        throw SchemaError(where + ": listing is missing a non-empty string \"id\"");
    const std::string id = id_it->get<std::string>();

    std::map<std::string, std::string> attributes;
    for (const auto& [key, value] : entry.items()) {
        if (key == "id") continue;
        if (!value.is_string())
            throw SchemaError(where + ": listing \"" + id + "\" attribute \"" + key +
                              "\" must be a string");
        attributes[key] = value.get<std::string>();
    }
    for (auto required : required_attributes(scenario)) {
        auto it = attributes.find(std::string(required));
        if (it == attributes.end() || trim(it->second).empty())
            throw SchemaError(where + ": listing \"" + id + "\" is missing required attribute \"" +
                              std::string(required) + "\"");
    }
    return make_listing(id, scenario, std::move(attributes), /*authentic=*/true);
}

}  // namespace detail

// Loads and validates a corpus file. Every entry is authentic by definition;
// option ids must be unique corpus-wide and every key must carry at least
// kMinListingsPerKey listings.
inline ListingCorpus load_corpus(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw SchemaError("corpus file not readable: " + path);
    nlohmann::json doc = nlohmann::json::parse(in, nullptr, false);
    if (doc.is_discarded()) throw SchemaError(path + ": not valid JSON");
    if (!doc.is_object()) throw SchemaError(path + ": top level must be an object");

    for (const auto& [key, value] : doc.items()) {
        (void)value;
        if (key != "hotels" && key != "flights" && key != "provenance")
            throw SchemaError(path + ": unknown top-level key \"" + key + "\"");
    }

    ListingCorpus corpus;
    if (doc.contains("provenance")) {
        if (!doc["provenance"].is_string()) throw SchemaError(path + ": provenance must be a string");
        corpus.provenance = doc["provenance"].get<std::string>();
    }

    std::set<std::string> seen_ids;
    auto load_table = [&](const char* section, Scenario scenario,
                          std::map<std::string, std::vector<ListingOption>>& table) {
        if (!doc.contains(section)) return;
        const auto& node = doc[section];
        if (!node.is_object()) throw SchemaError(path + ": \"" + section + "\" must be an object");
        for (const auto& [key, listings] : node.items()) {
            if (!listings.is_array())
                throw SchemaError(path + ": " + section + "[\"" + key + "\"] must be an array");
            std::vector<ListingOption> options;
            for (std::size_t i = 0; i < listings.size(); ++i) {
                const std::string where =
                    path + ": " + section + "[\"" + key + "\"][" + std::to_string(i) + "]";
                ListingOption opt = detail::listing_from_json(listings[i], scenario, where);
                if (!seen_ids.insert(opt.option_id).second)
                    throw DuplicateIdError(path + ": duplicate listing id \"" + opt.option_id + "\"");
                options.push_back(std::move(opt));
            }
            if (options.size() < kMinListingsPerKey)
                throw InsufficientListingsError(path + ": " + section + "[\"" + key + "\"] has " +
                                                std::to_string(options.size()) +
                                                " listings; at least " +
                                                std::to_string(kMinListingsPerKey) + " required");
            table[key] = std::move(options);
        }
    };
    load_table("hotels", Scenario::kHotel, corpus.hotels);
    load_table("flights", Scenario::kFlight, corpus.flights);
    return corpus;
}

// ---------------------------------------------------------------------------
// Synthetic travel requests
// ---------------------------------------------------------------------------

struct RequestGeneratorConfig {
    std::vector<std::string> nationalities;
    std::vector<std::string> cities;
    int min_duration_days = 3;
    int max_duration_days = 10;
    Date first_date{2026, 3, 1};
    Date last_date{2026, 10, 31};
    int count = 1;
    std::uint64_t seed = 0;
};

inline void validate_generator_config(const RequestGeneratorConfig& cfg) {
    if (cfg.nationalities.empty()) throw ConfigError("request generator: nationality pool is empty");
    if (cfg.cities.empty()) throw ConfigError("request generator: city pool is empty");
    if (cfg.min_duration_days < 1 || cfg.min_duration_days > cfg.max_duration_days)
        throw ConfigError("request generator: invalid duration range");
    if (days_between(cfg.first_date, cfg.last_date) < 0)
        throw ConfigError("request generator: date range end precedes start");
    if (cfg.count < 1) throw ConfigError("request generator: count must be >= 1");
}

// Deterministic for a fixed seed; origin != destination in every request.
inline std::vector<TravelRequest> generate_requests(const RequestGeneratorConfig& cfg) {
    validate_generator_config(cfg);
    if (cfg.cities.size() < 2)
        throw ExhaustedPoolError("request generator: need at least two cities for origin != destination");

    std::mt19937_64 rng(cfg.seed);
    const long date_span = days_between(cfg.first_date, cfg.last_date);
    std::vector<TravelRequest> out;
    out.reserve(static_cast<std::size_t>(cfg.count));
    for (int i = 0; i < cfg.count; ++i) {
        TravelRequest req;
        char id[32];
        std::snprintf(id, sizeof id, "req-%04d", i);
        req.request_id = id;
        req.nationality = cfg.nationalities[bounded_rand(rng, cfg.nationalities.size())];
        req.origin_city = cfg.cities[bounded_rand(rng, cfg.cities.size())];
        // Draw the destination from the pool minus the origin.
        std::size_t pick = bounded_rand(rng, cfg.cities.size() - 1);
        for (std::size_t c = 0; c < cfg.cities.size(); ++c) {
            if (cfg.cities[c] == req.origin_city) continue;
            if (pick == 0) { req.destination_city = cfg.cities[c]; break; }
            --pick;
        }
        req.duration_days = cfg.min_duration_days +
                            static_cast<int>(bounded_rand(
                                rng, static_cast<std::uint64_t>(cfg.max_duration_days -
                                                                cfg.min_duration_days + 1)));
        req.start_date = date_plus_days(cfg.first_date,
                                        static_cast<long>(bounded_rand(
                                            rng, static_cast<std::uint64_t>(date_span + 1))));
        validate_request(req);
        out.push_back(std::move(req));
    }
    return out;
}

// Selects k authentic listings for the request. Deterministic per
// (corpus, request, scenario, k): listings are taken in stable id order, then
// sampled with a seed derived from the request itself.
inline std::vector<ListingOption> acquire_listings(const ListingCorpus& corpus,
                                                   const TravelRequest& request, Scenario scenario,
                                                   int k) {
    const std::string key = corpus_key(scenario, request);
    const auto& table = corpus.table(scenario);
    auto it = table.find(key);
    const std::size_t available = it == table.end() ? 0 : it->second.size();
    if (available < static_cast<std::size_t>(k))
        throw InsufficientListingsError("corpus has " + std::to_string(available) + " " +
                                        scenario_name(scenario) + " listings for key \"" + key +
                                        "\"; " + std::to_string(k) + " requested");

    std::vector<ListingOption> pool = it->second;
    std::sort(pool.begin(), pool.end(),
              [](const ListingOption& a, const ListingOption& b) { return a.option_id < b.option_id; });
    seeded_shuffle(pool, derive_seed(fnv1a64(request.request_id),
                                     {"acquire", scenario_name(scenario), key, std::to_string(k)}));
    pool.resize(static_cast<std::size_t>(k));
    return pool;
}

}  // namespace fraudbench
