#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "mvpshap/mvp.hpp"
#include "test_helpers.hpp"

using namespace mvpshap;

namespace {

GameRecord two_on_two(bool home_win = true) {
    GameRecord game;
    game.game_id = "g1";
    game.home_win = home_win;
    game.home_roster = {{"alice", {3, 1}}, {"bob", {1, 2}}};
    game.away_roster = {{"carl", {2, 2}}, {"dana", {4, 0}}};
    return game;
}

// Train a small real model over a few random games so contributions are
// non-trivial but the fingerprint discipline still applies.
TreeEnsemble trained_fixture(const StatSchema& schema, std::vector<GameRecord>& games,
                             int max_players, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> unit(0.0, 5.0);
    games.clear();
    for (int g = 0; g < 30; ++g) {
        GameRecord game;
        game.game_id = "g" + std::to_string(g);
        double home_total = 0.0, away_total = 0.0;
        for (int j = 0; j < max_players; ++j) {
            PlayerStatLine h{"h" + std::to_string(g) + "_" + std::to_string(j), {unit(rng), unit(rng)}};
            PlayerStatLine a{"a" + std::to_string(g) + "_" + std::to_string(j), {unit(rng), unit(rng)}};
            home_total += h.values[0];
            away_total += a.values[0];
            game.home_roster.push_back(std::move(h));
            game.away_roster.push_back(std::move(a));
        }
        game.home_win = home_total > away_total;
        games.push_back(std::move(game));
    }
    auto samples = build_paired_samples(games, schema, max_players);
    std::vector<std::vector<double>> X;
    std::vector<int> y;
    for (const auto& s : samples) {
        X.push_back(s.x1);
        y.push_back(s.y1);
        X.push_back(s.x2);
        y.push_back(s.y2);
    }
    TrainConfig cfg;
    cfg.num_trees = 20;
    cfg.max_depth = 3;
    TreeEnsemble model = train(X, y, cfg);
    model.schema_fingerprint = schema_fingerprint(schema, max_players);
    return model;
}

std::vector<PlayerContribution> contribs_of(std::initializer_list<std::pair<const char*, double>> values,
                                            std::initializer_list<const char*> winners,
                                            const char* game_id = "g") {
    std::vector<PlayerContribution> contribs;
    for (const auto& [player, phi] : values) {
        bool winner = false;
        for (const char* w : winners) winner |= std::string(w) == player;
        contribs.push_back({game_id, player, phi, winner});
    }
    return contribs;
}

}  // namespace

TEST_CASE("a constant model contributes zero to every player") {
    auto schema = testing::simple_schema(2);
    TreeEnsemble model;
    model.feature_count = 8;
    model.base_margin = 0.7;
    model.schema_fingerprint = schema_fingerprint(schema, 2);
    auto contribs = player_contributions(model, two_on_two(), schema, 2, SlotPolicy::InputOrder);
    REQUIRE(contribs.size() == 4);
    for (const auto& c : contribs) CHECK(c.phi_total == 0.0);
}

TEST_CASE("fingerprint mismatch aborts contribution computation") {
    auto schema = testing::simple_schema(2);
    TreeEnsemble model;
    model.feature_count = 8;
    model.schema_fingerprint = "stale";
    CHECK_THROWS_AS(player_contributions(model, two_on_two(), schema, 2),
                    FingerprintMismatchError);
}

TEST_CASE("team contribution difference equals the margin gap of the mirrored pair") {
    // Efficiency on x1 and x2 gives, for any model,
    //   sum(home Phi) - sum(away Phi) = margin(x1) - margin(x2).
    auto schema = testing::simple_schema(2);
    std::mt19937_64 rng(14);
    std::vector<GameRecord> games;
    TreeEnsemble model = trained_fixture(schema, games, 2, rng);
    for (const auto& game : games) {
        auto contribs = player_contributions(model, game, schema, 2);
        auto sample = build_paired_sample(game, schema, 2);
        double home_total = 0.0, away_total = 0.0;
        for (const auto& c : contribs) {
            bool is_home = c.on_winning_team == game.home_win;
            (is_home ? home_total : away_total) += c.phi_total;
        }
        double gap = predict_margin(model, sample.x1) - predict_margin(model, sample.x2);
        CHECK(std::abs(home_total - away_total - gap) <= 1e-9);
        CHECK(contribs.size() == game.home_roster.size() + game.away_roster.size());
    }
}

TEST_CASE("duplicate stat lines in a symmetric fixture earn equal credit") {
    auto schema = testing::simple_schema(1);
    // one stat, one slot per team; model symmetric in the two slots
    TreeEnsemble model;
    model.feature_count = 2;
    model.trees.push_back(testing::stump(0, 0.5, -1.0, 1.0));
    model.trees.push_back(testing::stump(1, 0.5, 1.0, -1.0));
    model.schema_fingerprint = schema_fingerprint(schema, 1);

    GameRecord game;
    game.game_id = "g1";
    game.home_win = true;
    game.home_roster = {{"twin1", {0.8}}};
    game.away_roster = {{"twin2", {0.8}}};
    auto contribs = player_contributions(model, game, schema, 1);
    REQUIRE(contribs.size() == 2);
    CHECK(contribs[0].phi_total == doctest::Approx(contribs[1].phi_total));
}

TEST_CASE("single-game MVP restricts to the winning team") {
    auto contribs = contribs_of({{"A", 0.8}, {"B", 0.3}, {"C", 1.5}}, {"A", "B"});
    CHECK(single_game_mvp(contribs) == "A");

    SUBCASE("exact ties break lexicographically") {
        CHECK(single_game_mvp(contribs_of({{"B", 0.5}, {"A", 0.5}}, {"A", "B"})) == "A");
    }
    SUBCASE("single-player rosters") {
        CHECK(single_game_mvp(contribs_of({{"solo", -0.2}, {"foe", 2.0}}, {"solo"})) == "solo");
    }
    SUBCASE("no winners is an error") {
        CHECK_THROWS_AS(single_game_mvp(contribs_of({{"A", 1.0}}, {})), std::runtime_error);
        CHECK_THROWS_AS(single_game_mvp({}), std::invalid_argument);
    }
}

TEST_CASE("in-game ranking is competition style") {
    auto ranks = rank_within_game(contribs_of({{"A", 2}, {"B", 1}, {"C", 3}}, {"A"}));
    CHECK(ranks.at("C") == 1);
    CHECK(ranks.at("A") == 2);
    CHECK(ranks.at("B") == 3);

    SUBCASE("ties share the smaller rank and the next rank skips") {
        auto tied = rank_within_game(contribs_of({{"A", 1}, {"B", 1}, {"C", 0}}, {"A"}));
        CHECK(tied.at("A") == 1);
        CHECK(tied.at("B") == 1);
        CHECK(tied.at("C") == 3);
    }
    SUBCASE("one player gets rank 1") {
        CHECK(rank_within_game(contribs_of({{"A", 0.0}}, {"A"})).at("A") == 1);
    }
}

TEST_CASE("rank shifts are invariant to a per-game constant offset") {
    auto base = contribs_of({{"A", 0.4}, {"B", -0.1}, {"C", 1.2}, {"D", 0.9}}, {"A", "B"});
    auto shifted = base;
    for (auto& c : shifted) c.phi_total += 5.0;
    CHECK(single_game_mvp(base) == single_game_mvp(shifted));
    CHECK(rank_within_game(base) == rank_within_game(shifted));
}

TEST_CASE("M1 averages in-game rank over winning games only") {
    std::vector<std::vector<PlayerContribution>> season = {
        contribs_of({{"A", 3.0}, {"B", 1.0}, {"C", 0.5}}, {"A", "B"}, "g1"),   // A rank 1
        contribs_of({{"A", 0.2}, {"B", 2.0}, {"C", 1.0}}, {"A", "B"}, "g2"),   // A rank 3
        contribs_of({{"A", 9.0}, {"B", 0.0}, {"C", 5.0}}, {"C"}, "g3"),        // A loses
    };
    auto result = rank_m1(season, 0);
    REQUIRE(!result.entries.empty());
    for (const auto& e : result.entries) {
        if (e.player_id == "A") {
            CHECK(e.score == doctest::Approx(2.0));  // ranks 1 and 3 over two wins
            CHECK(e.games == 2);
        }
        CHECK(e.player_id != "none");
    }

    SUBCASE("zero wins means exclusion") {
        std::vector<std::vector<PlayerContribution>> lost_all = {
            contribs_of({{"A", 1.0}, {"B", 0.0}}, {"B"}, "g1"),
        };
        auto r = rank_m1(lost_all, 0);
        REQUIRE(r.entries.size() == 1);
        CHECK(r.entries[0].player_id == "B");
    }
    SUBCASE("min_games threshold excludes light schedules") {
        auto r = rank_m1(season, 2);  // C has a single win and drops out
        REQUIRE(r.entries.size() == 2);
        for (const auto& e : r.entries) CHECK(e.player_id != "C");
    }
    SUBCASE("no eligible players is an error") {
        CHECK_THROWS_AS(rank_m1(season, 99), std::runtime_error);
    }
}

TEST_CASE("M2 averages over every game and matches M1 for unbeaten players") {
    std::vector<std::vector<PlayerContribution>> season = {
        contribs_of({{"A", 2.0}, {"B", 1.0}}, {"A", "B"}, "g1"),  // ranks: A=1 B=2
        contribs_of({{"A", 0.5}, {"B", 3.0}}, {"A", "B"}, "g2"),  // ranks: A=2 B=1
    };
    auto m2 = rank_m2(season, 0);
    for (const auto& e : m2.entries) CHECK(e.score == doctest::Approx(1.5));

    auto m1 = rank_m1(season, 0);
    REQUIRE(m1.entries.size() == m2.entries.size());
    for (std::size_t i = 0; i < m1.entries.size(); ++i) {
        CHECK(m1.entries[i].score == m2.entries[i].score);
    }

    SUBCASE("players below the min_games threshold are excluded") {
        CHECK_THROWS_AS(rank_m2(season, 3), std::runtime_error);  // everyone has 2 games
        auto r = rank_m2(season, 2);
        CHECK(r.entries.size() == 2);
    }
    SUBCASE("ranks [2,4] average to 3") {
        std::vector<std::vector<PlayerContribution>> games = {
            contribs_of({{"A", 3}, {"B", 4}, {"C", 2}, {"D", 1}}, {"A"}, "g1"),  // A rank 2
            contribs_of({{"A", 0}, {"B", 4}, {"C", 2}, {"D", 1}}, {"B"}, "g2"),  // A rank 4
        };
        auto r = rank_m2(games, 0);
        for (const auto& e : r.entries) {
            if (e.player_id == "A") CHECK(e.score == doctest::Approx(3.0));
        }
    }
}

TEST_CASE("M3 averages contributions, descending") {
    std::vector<std::vector<PlayerContribution>> season = {
        contribs_of({{"A", 0.4}, {"B", 0.1}}, {"A", "B"}, "g1"),
        contribs_of({{"A", 0.6}, {"B", 0.2}}, {"A", "B"}, "g2"),
    };
    auto r = rank_m3(season, 0);
    CHECK(r.entries[0].player_id == "A");
    CHECK(r.entries[0].score == doctest::Approx(0.5));
    CHECK(r.entries[0].rank == 1);

    SUBCASE("adding a game at the current mean leaves the score unchanged") {
        auto extended = season;
        extended.push_back(contribs_of({{"A", 0.5}, {"B", 0.15}}, {"A", "B"}, "g3"));
        auto r2 = rank_m3(extended, 0);
        CHECK(r2.entries[0].score == doctest::Approx(0.5));
    }
}

TEST_CASE("M1 and M3 respect dominance on random seasons") {
    std::mt19937_64 rng(2077);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    std::uniform_int_distribution<int> game_count(2, 8);
    for (int trial = 0; trial < 200; ++trial) {
        int games = game_count(rng);
        std::vector<std::vector<PlayerContribution>> season;
        bool any_win = false;
        for (int g = 0; g < games; ++g) {
            double lo = unit(rng);
            double hi = lo + 0.1 + (unit(rng) + 1.0);  // strictly higher
            bool winners_side = (trial + g) % 2 == 0;
            any_win |= winners_side;
            season.push_back(contribs_of({{"i", hi}, {"j", lo}, {"z", unit(rng)}},
                                         winners_side ? std::initializer_list<const char*>{"i", "j"}
                                                      : std::initializer_list<const char*>{"z"},
                                         ("g" + std::to_string(g)).c_str()));
        }
        auto m3 = rank_m3(season, 0);
        std::size_t pos_i = 0, pos_j = 0;
        for (std::size_t k = 0; k < m3.entries.size(); ++k) {
            if (m3.entries[k].player_id == "i") pos_i = k;
            if (m3.entries[k].player_id == "j") pos_j = k;
        }
        CHECK(pos_i < pos_j);

        if (any_win) {
            auto m1 = rank_m1(season, 0);
            bool saw_i = false;
            for (const auto& e : m1.entries) {
                if (e.player_id == "i") saw_i = true;
                if (e.player_id == "j") CHECK(saw_i);  // i precedes j
            }
        }
    }
}

TEST_CASE("season totals add across games") {
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> unit(-2.0, 2.0);
    std::vector<std::vector<PlayerContribution>> season;
    double total_a = 0.0;
    for (int g = 0; g < 10; ++g) {
        double v = unit(rng);
        total_a += v;
        season.push_back(contribs_of({{"A", v}, {"B", unit(rng)}}, {"A", "B"},
                                     ("g" + std::to_string(g)).c_str()));
    }
    auto r = rank_m3(season, 0);
    for (const auto& e : r.entries) {
        if (e.player_id == "A") {
            CHECK(e.score * e.games == doctest::Approx(total_a).epsilon(1e-12));
        }
    }
}

TEST_CASE("ranking csv round-trip") {
    RankingResult ranking;
    ranking.method = RankMethod::M3;
    ranking.entries = {{"A", 1.5, 1, 10}, {"B", 0.25, 2, 8}};
    std::ostringstream out;
    write_ranking_csv(out, ranking);
    std::istringstream in(out.str());
    auto back = read_ranking_csv(in);
    REQUIRE(back.entries.size() == 2);
    CHECK(back.method == RankMethod::M3);
    CHECK(back.entries[0].player_id == "A");
    CHECK(back.entries[0].score == 1.5);
    CHECK(back.entries[1].games == 8);
}
