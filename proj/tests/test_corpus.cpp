#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "fraudbench/corpus.hpp"

using namespace fraudbench;

namespace {

std::filesystem::path write_temp(const std::string& name, const std::string& content) {
    auto path = std::filesystem::temp_directory_path() / name;
    std::ofstream out(path);
    out << content;
    return path;
}

const char* kHotelEntry =
    R"({"id": "%ID%", "Name": "Hotel %ID%", "Location": "Center", "Price": "$100/night",
        "Rating": "8.1", "Features": "wifi"})";

std::string hotel_array(int count, const std::string& prefix) {
    std::string out = "[";
    for (int i = 0; i < count; ++i) {
        std::string entry = kHotelEntry;
        std::string id = prefix + std::to_string(i + 1);
        std::size_t pos;
        while ((pos = entry.find("%ID%")) != std::string::npos) entry.replace(pos, 4, id);
        if (i) out += ",";
        out += entry;
    }
    return out + "]";
}

RequestGeneratorConfig generator(int count, std::uint64_t seed) {
    RequestGeneratorConfig cfg;
    cfg.nationalities = {"Singaporean", "Spanish", "American", "Indonesian", "South Korean"};
    cfg.cities = {"Paris", "Berlin", "Prague"};
    cfg.count = count;
    cfg.seed = seed;
    return cfg;
}

}  // namespace

TEST(CorpusLoad, WellFormedFile) {
    auto path = write_temp("fb_corpus_ok.json",
                           "{\"hotels\": {\"Paris\": " + hotel_array(6, "par") + "}}");
    auto corpus = load_corpus(path.string());
    ASSERT_TRUE(corpus.hotels.count("Paris"));
    EXPECT_EQ(corpus.hotels["Paris"].size(), 6u);
    for (const auto& opt : corpus.hotels["Paris"]) EXPECT_TRUE(opt.authentic);
}

TEST(CorpusLoad, MissingRequiredAttributeNamesTheEntry) {
    auto path = write_temp(
        "fb_corpus_missing.json",
        R"({"flights": {"A->B": [
            {"id": "f1", "Airline": "Air A", "Route": "A -> B", "Price": "$10",
             "Departure/Arrival": "1 -> 2", "Booking Method": "site"},
            {"id": "f2", "Route": "A -> B", "Price": "$10",
             "Departure/Arrival": "1 -> 2", "Booking Method": "site"},
            {"id": "f3", "Airline": "Air C", "Route": "A -> B", "Price": "$10",
             "Departure/Arrival": "1 -> 2", "Booking Method": "site"},
            {"id": "f4", "Airline": "Air D", "Route": "A -> B", "Price": "$10",
             "Departure/Arrival": "1 -> 2", "Booking Method": "site"}
        ]}})");
    try {
        load_corpus(path.string());
        FAIL() << "expected SchemaError";
    } catch (const SchemaError& e) {
        EXPECT_NE(std::string(e.what()).find("f2"), std::string::npos);
        EXPECT_NE(std::string(e.what()).find("Airline"), std::string::npos);
    }
}

TEST(CorpusLoad, DuplicateIdsRejectedCorpusWide) {
    auto path = write_temp("fb_corpus_dup.json",
                           "{\"hotels\": {\"Paris\": " + hotel_array(4, "x") +
                               ", \"Berlin\": " + hotel_array(4, "x") + "}}");
    EXPECT_THROW(load_corpus(path.string()), DuplicateIdError);
}

TEST(CorpusLoad, FewerThanFourListingsForAKey) {
    auto path = write_temp("fb_corpus_few.json",
                           "{\"hotels\": {\"Paris\": " + hotel_array(3, "p") + "}}");
    EXPECT_THROW(load_corpus(path.string()), InsufficientListingsError);
}

TEST(CorpusLoad, UnknownTopLevelKeyRejected) {
    auto path = write_temp("fb_corpus_unknown.json",
                           "{\"hostels\": {}, \"hotels\": {\"Paris\": " + hotel_array(4, "p") + "}}");
    EXPECT_THROW(load_corpus(path.string()), SchemaError);
}

TEST(CorpusLoad, ShippedFixtureValidates) {
    auto corpus = load_corpus(std::string(FRAUDBENCH_SOURCE_DIR) + "/data/corpus.json");
    EXPECT_GE(corpus.hotels.size(), 5u);
    EXPECT_GE(corpus.flights.size(), 5u);
    for (const auto& [key, listings] : corpus.hotels) EXPECT_GE(listings.size(), 6u) << key;
    for (const auto& [key, listings] : corpus.flights) EXPECT_GE(listings.size(), 6u) << key;
    EXPECT_FALSE(corpus.provenance.empty());
}

TEST(RequestGeneration, DeterministicForFixedSeed) {
    auto a = generate_requests(generator(5, 42));
    auto b = generate_requests(generator(5, 42));
    ASSERT_EQ(a.size(), 5u);
    for (std::size_t i = 0; i < a.size(); ++i) {
        EXPECT_EQ(a[i].request_id, b[i].request_id);
        EXPECT_EQ(a[i].nationality, b[i].nationality);
        EXPECT_EQ(a[i].origin_city, b[i].origin_city);
        EXPECT_EQ(a[i].destination_city, b[i].destination_city);
        EXPECT_EQ(a[i].duration_days, b[i].duration_days);
        EXPECT_EQ(a[i].start_date, b[i].start_date);
    }
    auto c = generate_requests(generator(5, 43));
    bool any_different = false;
    for (std::size_t i = 0; i < a.size(); ++i)
        if (a[i].origin_city != c[i].origin_city || a[i].nationality != c[i].nationality ||
            a[i].duration_days != c[i].duration_days)
            any_different = true;
    EXPECT_TRUE(any_different);
}

TEST(RequestGeneration, HundredRequestsAllSatisfyInvariants) {
    auto reqs = generate_requests(generator(100, 7));
    ASSERT_EQ(reqs.size(), 100u);
    std::set<std::string> ids;
    for (const auto& r : reqs) {
        EXPECT_NE(r.origin_city, r.destination_city);
        EXPECT_GE(r.duration_days, 3);
        EXPECT_LE(r.duration_days, 10);
        ids.insert(r.request_id);
    }
    EXPECT_EQ(ids.size(), 100u);
}

TEST(RequestGeneration, SingleCityPoolExhausts) {
    auto cfg = generator(1, 1);
    cfg.cities = {"Paris"};
    EXPECT_THROW(generate_requests(cfg), ExhaustedPoolError);
}

TEST(Acquisition, ReturnsKAuthenticDeterministically) {
    auto corpus = load_corpus(std::string(FRAUDBENCH_SOURCE_DIR) + "/data/corpus.json");
    TravelRequest req;
    req.request_id = "req-0000";
    req.nationality = "Spanish";
    req.origin_city = "Paris";
    req.destination_city = "Berlin";
    req.duration_days = 5;
    req.start_date = Date{2026, 6, 1};

    auto first = acquire_listings(corpus, req, Scenario::kHotel, 4);
    auto second = acquire_listings(corpus, req, Scenario::kHotel, 4);
    ASSERT_EQ(first.size(), 4u);
    for (std::size_t i = 0; i < 4; ++i) {
        EXPECT_EQ(first[i].option_id, second[i].option_id);
        EXPECT_TRUE(first[i].authentic);
    }

    auto flights = acquire_listings(corpus, req, Scenario::kFlight, 4);
    ASSERT_EQ(flights.size(), 4u);
    for (const auto& f : flights) EXPECT_EQ(f.scenario, Scenario::kFlight);
}

TEST(Acquisition, InsufficientListings) {
    auto corpus = load_corpus(std::string(FRAUDBENCH_SOURCE_DIR) + "/data/corpus.json");
    TravelRequest req;
    req.request_id = "req-0000";
    req.nationality = "Spanish";
    req.origin_city = "Paris";
    req.destination_city = "Atlantis";
    req.duration_days = 5;
    req.start_date = Date{2026, 6, 1};
    EXPECT_THROW(acquire_listings(corpus, req, Scenario::kHotel, 4), InsufficientListingsError);
    req.destination_city = "Berlin";
    EXPECT_THROW(acquire_listings(corpus, req, Scenario::kHotel, 7), InsufficientListingsError);
}
