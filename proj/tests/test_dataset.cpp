#include <doctest.h>

#include <random>
#include <set>
#include <sstream>

#include "mvpshap/dataset.hpp"
#include "test_helpers.hpp"

using namespace mvpshap;

namespace {

const char* kTwoGameFixture =
    "game_id,season,team_side,player_id,s1,s2\n"
    "g1,2023,home,alice,10,2\n"
    "g2,2023,home,carol,8,1\n"
    "g1,2023,home,bob,5,3\n"
    "g1,2023,away,carl,7,0\n"
    "g2,2023,away,dave,9,4\n"
    "g1,2023,away,dana,1,1\n"
    "g2,2023,result,home_win,0\n"
    "g2,2023,home,cindy,2,2\n"
    "g2,2023,away,drew,3,3\n"
    "g1,2023,result,home_win,1\n";

std::vector<GameRecord> parse_fixture(const StatSchema& schema, const std::string& text) {
    std::istringstream in(text);
    return parse_box_scores(in, schema);
}

}  // namespace

TEST_CASE("parse groups rows per game regardless of order") {
    auto schema = testing::simple_schema(2);
    auto games = parse_fixture(schema, kTwoGameFixture);
    REQUIRE(games.size() == 2);
    CHECK(games[0].game_id == "g1");
    CHECK(games[0].home_roster.size() == 2);
    CHECK(games[0].away_roster.size() == 2);
    CHECK(games[0].home_win);
    CHECK(games[1].game_id == "g2");
    CHECK_FALSE(games[1].home_win);
    CHECK(games[1].home_roster[0].player_id == "carol");
    CHECK(games[1].home_roster[0].values == std::vector<double>{8.0, 1.0});
}

TEST_CASE("parse: single game fixture") {
    auto schema = testing::simple_schema(2);
    auto games = parse_fixture(schema,
                               "game_id,season,team_side,player_id,s1,s2\n"
                               "g1,2023,home,a,1,2\n"
                               "g1,2023,home,b,3,4\n"
                               "g1,2023,away,c,5,6\n"
                               "g1,2023,away,d,7,8\n"
                               "g1,2023,result,home_win,1\n");
    REQUIRE(games.size() == 1);
    CHECK(games[0].home_roster.size() == 2);
    CHECK(games[0].away_roster.size() == 2);
}

TEST_CASE("parse errors name the offending location") {
    auto schema = testing::simple_schema(2);
    SUBCASE("non-numeric stat cell") {
        CHECK_THROWS_WITH_AS(parse_fixture(schema,
                                           "game_id,season,team_side,player_id,s1,s2\n"
                                           "g1,2023,home,a,nan,2\n"),
                             doctest::Contains("column s1"), std::runtime_error);
    }
    SUBCASE("unknown stat column") {
        CHECK_THROWS_WITH_AS(parse_fixture(schema,
                                           "game_id,season,team_side,player_id,s1,s2,bogus\n"),
                             doctest::Contains("unknown stat column: bogus"), std::runtime_error);
    }
    SUBCASE("duplicate player within a game") {
        CHECK_THROWS_WITH_AS(parse_fixture(schema,
                                           "game_id,season,team_side,player_id,s1,s2\n"
                                           "g1,2023,home,a,1,2\n"
                                           "g1,2023,away,a,3,4\n"),
                             doctest::Contains("duplicate player"), std::runtime_error);
    }
    SUBCASE("missing result row") {
        CHECK_THROWS_WITH_AS(parse_fixture(schema,
                                           "game_id,season,team_side,player_id,s1,s2\n"
                                           "g1,2023,home,a,1,2\n"
                                           "g1,2023,away,b,3,4\n"),
                             doctest::Contains("no result row"), std::runtime_error);
    }
    SUBCASE("malformed row reports the line number") {
        CHECK_THROWS_WITH_AS(parse_fixture(schema,
                                           "game_id,season,team_side,player_id,s1,s2\n"
                                           "g1,2023,home,a,1,2\n"
                                           "g1,2023,away,b,3\n"),
                             doctest::Contains("line 3"), std::runtime_error);
    }
}

TEST_CASE("blank stat cells ingest as zero") {
    auto schema = testing::simple_schema(2);
    auto games = parse_fixture(schema,
                               "game_id,season,team_side,player_id,s1,s2\n"
                               "g1,2023,home,a,,2\n"
                               "g1,2023,away,b,3,\n"
                               "g1,2023,result,home_win,1\n");
    CHECK(games[0].home_roster[0].values[0] == 0.0);
    CHECK(games[0].away_roster[0].values[1] == 0.0);
}

TEST_CASE("results sidecar covers games without inline rows") {
    auto schema = testing::simple_schema(2);
    const char* data =
        "game_id,season,team_side,player_id,s1,s2\n"
        "g1,2023,home,a,1,2\n"
        "g1,2023,away,b,3,4\n";
    std::istringstream results_in("game_id,home_win\ng1,1\n");
    auto results = parse_results(results_in);
    std::istringstream data_in(data);
    CHECK_THROWS(parse_box_scores(data_in, schema));
    // load path exercised in the CLI tests; merge the map directly here
    std::istringstream again(data);
    CHECK(results.at("g1"));
}

TEST_CASE("paired sample lays out home block then away block") {
    auto schema = testing::simple_schema(2);
    GameRecord game;
    game.game_id = "g1";
    game.home_win = true;
    game.home_roster = {{"a", {1, 2}}, {"b", {3, 4}}};
    game.away_roster = {{"c", {5, 6}}, {"d", {7, 8}}};

    auto sample = build_paired_sample(game, schema, 2, SlotPolicy::InputOrder);
    CHECK(sample.x1 == std::vector<double>{1, 2, 3, 4, 5, 6, 7, 8});
    CHECK(sample.x2 == std::vector<double>{5, 6, 7, 8, 1, 2, 3, 4});
    CHECK(sample.y1 == 1);
    CHECK(sample.y2 == 0);
    CHECK(sample.y1 + sample.y2 == 1);
}

TEST_CASE("short roster pads trailing slots with zeros") {
    auto schema = testing::simple_schema(2);
    GameRecord game;
    game.game_id = "g1";
    game.home_roster = {{"a", {1, 2}}};
    game.away_roster = {{"c", {5, 6}}, {"d", {7, 8}}};
    auto sample = build_paired_sample(game, schema, 2, SlotPolicy::InputOrder);
    CHECK(sample.x1[2] == 0.0);
    CHECK(sample.x1[3] == 0.0);
    CHECK(sample.home_slots[1] == "");
    CHECK(sample.away_slots[1] == "d");
}

TEST_CASE("roster larger than the slot count is rejected") {
    auto schema = testing::simple_schema(1);
    GameRecord game;
    game.game_id = "g1";
    game.home_roster = {{"a", {1}}, {"b", {2}}, {"c", {3}}};
    game.away_roster = {{"d", {4}}};
    CHECK_THROWS_AS(build_paired_sample(game, schema, 2), std::runtime_error);
}

TEST_CASE("block swap is an involution on random samples") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> unit(-5.0, 5.0);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<double> x(12);
        for (double& v : x) v = unit(rng);
        CHECK(swap_blocks(swap_blocks(x)) == x);
    }
}

TEST_CASE("slot_map round-trips the feature index formula") {
    auto schema = testing::simple_schema(3, "s1");
    GameRecord game;
    game.game_id = "g1";
    // minutes (s1) order: bob 30 > alice 20; ties impossible here
    game.home_roster = {{"alice", {20, 1, 2}}, {"bob", {30, 3, 4}}};
    game.away_roster = {{"carl", {10, 5, 6}}};
    auto sample = build_paired_sample(game, schema, 2);
    const std::size_t q = schema.size();
    REQUIRE(sample.home_slots == std::vector<std::string>{"bob", "alice"});
    // stat k of home slot s lives at s*q + k; away adds p*q
    CHECK(sample.x1[feature_index(0, 1, q)] == 3);
    CHECK(sample.x1[feature_index(1, 2, q)] == 2);
    CHECK(sample.x1[2 * q + feature_index(0, 1, q)] == 5);
}

TEST_CASE("slot ordering: minutes descending, ties by player_id") {
    auto schema = testing::simple_schema(2, "s1");
    GameRecord game;
    game.game_id = "g1";
    game.home_roster = {{"zed", {10, 1}}, {"amy", {10, 2}}, {"max", {20, 3}}};
    game.away_roster = {{"bo", {5, 0}}};
    auto sample = build_paired_sample(game, schema, 3);
    CHECK(sample.home_slots == std::vector<std::string>{"max", "amy", "zed"});
}

TEST_CASE("split honors the 9:1 ratio by game") {
    auto schema = testing::simple_schema(1);
    std::vector<PairedSample> samples;
    for (int g = 0; g < 10; ++g) {
        GameRecord game;
        game.game_id = "g" + std::to_string(g);
        game.home_roster = {{"a", {1}}};
        game.away_roster = {{"b", {2}}};
        samples.push_back(build_paired_sample(game, schema, 1));
    }
    std::vector<PairedSample> train, test;
    split_train_test(samples, 0.9, 42, train, test);
    CHECK(train.size() == 9);
    CHECK(test.size() == 1);

    SUBCASE("same seed reproduces the partition") {
        std::vector<PairedSample> train2, test2;
        split_train_test(samples, 0.9, 42, train2, test2);
        REQUIRE(train2.size() == train.size());
        for (std::size_t i = 0; i < train.size(); ++i) {
            CHECK(train2[i].game_id == train[i].game_id);
        }
    }
    SUBCASE("no game appears on both sides") {
        std::set<std::string> train_ids, test_ids;
        for (const auto& s : train) train_ids.insert(s.game_id);
        for (const auto& s : test) test_ids.insert(s.game_id);
        for (const auto& id : test_ids) CHECK(train_ids.count(id) == 0);
    }
}

TEST_CASE("split rejects degenerate inputs") {
    auto schema = testing::simple_schema(1);
    GameRecord game;
    game.game_id = "only";
    game.home_roster = {{"a", {1}}};
    game.away_roster = {{"b", {2}}};
    std::vector<PairedSample> samples = {build_paired_sample(game, schema, 1)};
    std::vector<PairedSample> train, test;
    CHECK_THROWS(split_train_test(samples, 0.9, 1, train, test));
    samples.push_back(samples.front());
    CHECK_THROWS(split_train_test(samples, 1.0, 1, train, test));
    CHECK_THROWS(split_train_test(samples, 0.0, 1, train, test));
}

TEST_CASE("schema json round-trip") {
    StatSchema schema = testing::simple_schema(3, "s1");
    schema.fuzzified[2] = true;
    schema.removed = {"gone"};
    auto back = StatSchema::from_json_text(schema.to_json_text());
    CHECK(back.stat_names == schema.stat_names);
    CHECK(back.fuzzified == schema.fuzzified);
    CHECK(back.removed == schema.removed);
    CHECK(back.playing_time_stat == "s1");
    CHECK(schema_fingerprint(back, 5) == schema_fingerprint(schema, 5));
    CHECK(schema_fingerprint(back, 5) != schema_fingerprint(schema, 6));
}
