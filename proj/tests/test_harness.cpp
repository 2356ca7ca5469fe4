#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include "mvpshap/harness.hpp"
#include "mvpshap/mvp.hpp"
#include "test_helpers.hpp"

using namespace mvpshap;

TEST_CASE("league generation is reproducible per seed") {
    LeagueConfig cfg;
    cfg.games = 20;
    cfg.seed = 42;
    League a = generate_league(cfg);
    League b = generate_league(cfg);
    REQUIRE(a.games.size() == b.games.size());
    for (std::size_t i = 0; i < a.games.size(); ++i) {
        CHECK(a.games[i].home_win == b.games[i].home_win);
        CHECK(a.games[i].home_roster[0].player_id == b.games[i].home_roster[0].player_id);
        CHECK(a.games[i].home_roster[0].values == b.games[i].home_roster[0].values);
    }
    League c = generate_league({6, 3, 4, 20, 1.0, 0.5, 43, 2, 0});
    bool all_same = true;
    for (std::size_t i = 0; i < a.games.size(); ++i) {
        all_same &= a.games[i].home_win == c.games[i].home_win;
    }
    CHECK_FALSE(all_same);
}

TEST_CASE("zero noise makes outcomes a function of the rosters") {
    LeagueConfig cfg;
    cfg.teams = 3;
    cfg.games = 120;
    cfg.noise_scale = 0.0;
    cfg.seed = 9;
    League league = generate_league(cfg);
    // same matchup (same orientation) must always resolve the same way
    std::map<std::pair<std::string, std::string>, bool> outcomes;
    for (const auto& game : league.games) {
        auto key = std::make_pair(game.home_roster[0].player_id, game.away_roster[0].player_id);
        auto it = outcomes.find(key);
        if (it == outcomes.end()) {
            outcomes.emplace(key, game.home_win);
        } else {
            CHECK(it->second == game.home_win);
        }
        // and the stats equal the skills exactly
        for (const auto& line : game.home_roster) {
            for (const auto& player : league.skills) {
                if (player.player_id == line.player_id) CHECK(line.values == player.skill);
            }
        }
    }
}

TEST_CASE("the planted best player has the highest true value by construction") {
    LeagueConfig cfg;
    cfg.seed = 3;
    League league = generate_league(cfg);
    const LatentSkill* best = nullptr;
    for (const auto& player : league.skills) {
        if (!best || player.true_value > best->true_value) best = &player;
    }
    REQUIRE(best != nullptr);
    for (const auto& player : league.skills) {
        double signal_sum = 0.0;
        for (int k = 0; k < cfg.signal_stats; ++k) {
            signal_sum += player.skill[static_cast<std::size_t>(k)];
        }
        CHECK(player.true_value == signal_sum);
        CHECK(player.true_value <= best->true_value);
    }
}

TEST_CASE("generated box scores round-trip through the parser") {
    LeagueConfig cfg;
    cfg.games = 15;
    cfg.seed = 21;
    League league = generate_league(cfg);
    std::ostringstream out;
    write_box_score_csv(out, league.games, league.schema);
    std::istringstream in(out.str());
    auto games = parse_box_scores(in, league.schema);
    REQUIRE(games.size() == league.games.size());
    for (std::size_t i = 0; i < games.size(); ++i) {
        CHECK(games[i].game_id == league.games[i].game_id);
        CHECK(games[i].home_win == league.games[i].home_win);
        REQUIRE(games[i].home_roster.size() == league.games[i].home_roster.size());
        CHECK(games[i].home_roster[0].values == league.games[i].home_roster[0].values);
    }
}

TEST_CASE("hoeffding epsilon closed form") {
    // ln(2/delta) = 2 when delta = 2 e^-2
    CHECK(hoeffding_epsilon(1.0, 4, 2.0 * std::exp(-2.0)) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(hoeffding_epsilon(1.0, 1000, 0.05) == doctest::Approx(0.0859).epsilon(1e-3));

    SUBCASE("scales as 1/sqrt(T)") {
        double e1 = hoeffding_epsilon(2.0, 100, 0.05);
        double e2 = hoeffding_epsilon(2.0, 400, 0.05);
        CHECK(e1 / e2 == doctest::Approx(2.0).epsilon(1e-12));
    }
    SUBCASE("domain checks") {
        CHECK_THROWS_AS(hoeffding_epsilon(0.0, 10, 0.05), std::invalid_argument);
        CHECK_THROWS_AS(hoeffding_epsilon(1.0, 0, 0.05), std::invalid_argument);
        CHECK_THROWS_AS(hoeffding_epsilon(1.0, 10, 1.0), std::invalid_argument);
    }
}

TEST_CASE("required games closed form") {
    CHECK(required_games(1.0, 0.5, 0.05) == 141);

    SUBCASE("doubling the gap divides the bound by four") {
        double base = 8.0 * std::log(4.0 / 0.05) / (0.5 * 0.5);
        double quartered = 8.0 * std::log(4.0 / 0.05) / (1.0 * 1.0);
        CHECK(base / quartered == doctest::Approx(4.0).epsilon(1e-12));
        CHECK(required_games(1.0, 1.0, 0.05) == static_cast<long long>(std::ceil(quartered)));
    }
    SUBCASE("delta near 1 stays finite") {
        CHECK(required_games(1.0, 1.0, 1.0 - 1e-9) >= 1);
        CHECK(required_games(1.0, 1.0, 1.0 - 1e-9) <=
              static_cast<long long>(std::ceil(8.0 * std::log(4.0))) + 1);
    }
    SUBCASE("domain checks") {
        CHECK_THROWS_AS(required_games(1.0, 0.0, 0.05), std::invalid_argument);
        CHECK_THROWS_AS(required_games(1.0, 0.5, 0.0), std::invalid_argument);
    }
}

TEST_CASE("monte carlo violation rate stays under delta") {
    BoundedSampler uniform;
    uniform.mean = 0.0;
    uniform.draw = [](std::mt19937_64& rng) {
        return std::uniform_real_distribution<double>(-1.0, 1.0)(rng);
    };
    double delta = 0.05;
    int trials = 2000;
    double rate = concentration_trial(uniform, 1.0, 100, delta, trials, 7);
    double slack = 3.0 * std::sqrt(delta * (1.0 - delta) / trials);
    CHECK(rate <= delta + slack);

    SUBCASE("a constant sampler never violates") {
        BoundedSampler constant;
        constant.mean = 0.4;
        constant.draw = [](std::mt19937_64&) { return 0.4; };
        CHECK(concentration_trial(constant, 1.0, 50, 0.05, 500, 3) == 0.0);
    }
    SUBCASE("a nearly vacuous bound is violated far below its delta") {
        double vacuous = 1.0 - 1e-9;
        double rate2 = concentration_trial(uniform, 1.0, 100, vacuous, 500, 11);
        CHECK(rate2 <= 0.1);
        CHECK(rate2 < vacuous / 2.0);
    }
    SUBCASE("an out-of-bound sampler is detected mid-run") {
        BoundedSampler bad;
        bad.mean = 0.0;
        bad.draw = [](std::mt19937_64&) { return 2.0; };
        CHECK_THROWS_AS(concentration_trial(bad, 1.0, 10, 0.05, 10, 1), std::runtime_error);
    }
}

TEST_CASE("M3 means drift toward a stable limit as the season grows") {
    // median over (seed, player) of |prefix mean - long-run mean| must fall
    // as T runs through 20, 80, 320
    std::vector<int> horizons = {20, 80, 320};
    const int long_run = 960;
    std::vector<std::vector<double>> distances(horizons.size());

    for (std::uint64_t seed = 1; seed <= 4; ++seed) {
        LeagueConfig cfg;
        cfg.teams = 4;
        cfg.players_per_team = 2;
        cfg.stats = 3;
        cfg.signal_stats = 2;
        cfg.games = long_run;
        cfg.seed = seed;
        League league = generate_league(cfg);

        auto samples = build_paired_samples(league.games, league.schema, cfg.players_per_team);
        std::vector<std::vector<double>> X;
        std::vector<int> y;
        for (const auto& s : samples) {
            X.push_back(s.x1);
            y.push_back(s.y1);
            X.push_back(s.x2);
            y.push_back(s.y2);
        }
        TrainConfig tc;
        tc.num_trees = 20;
        tc.max_depth = 3;
        TreeEnsemble model = train(X, y, tc);
        model.schema_fingerprint = schema_fingerprint(league.schema, cfg.players_per_team);

        auto per_game = season_contributions(model, league.games, league.schema,
                                             cfg.players_per_team);
        std::map<std::string, std::vector<double>> history;
        for (const auto& game : per_game) {
            for (const auto& c : game) history[c.player_id].push_back(c.phi_total);
        }
        for (const auto& [player, contribs] : history) {
            double limit = 0.0;
            for (double v : contribs) limit += v;
            limit /= static_cast<double>(contribs.size());
            for (std::size_t h = 0; h < horizons.size(); ++h) {
                std::size_t t = std::min<std::size_t>(static_cast<std::size_t>(horizons[h]),
                                                      contribs.size());
                double mean = 0.0;
                for (std::size_t i = 0; i < t; ++i) mean += contribs[i];
                mean /= static_cast<double>(t);
                distances[h].push_back(std::abs(mean - limit));
            }
        }
    }
    auto median = [](std::vector<double> v) {
        std::sort(v.begin(), v.end());
        return v[v.size() / 2];
    };
    double d20 = median(distances[0]);
    double d80 = median(distances[1]);
    double d320 = median(distances[2]);
    CHECK(d80 <= d20);
    CHECK(d320 <= d80);
}

TEST_CASE("skills csv lists the planted values") {
    LeagueConfig cfg;
    cfg.seed = 12;
    League league = generate_league(cfg);
    std::ostringstream out;
    write_skills_csv(out, league.skills);
    std::string text = out.str();
    CHECK(text.find("player_id,true_value") == 0);
    CHECK(text.find("t01p01") != std::string::npos);
}
