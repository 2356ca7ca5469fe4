#include "mvpshap/harness.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>

#include "mvpshap/csv.hpp"

namespace mvpshap {

namespace {

std::string padded(int value, int width) {
    std::string s = std::to_string(value);
    while (static_cast<int>(s.size()) < width) s.insert(s.begin(), '0');
    return s;
}

void check_config(const LeagueConfig& c) {
    if (c.teams < 2) throw std::invalid_argument("need at least 2 teams");
    if (c.players_per_team < 1 || c.stats < 1 || c.games < 1) {
        throw std::invalid_argument("league dimensions must be positive");
    }
    if (c.skill_scale < 0.0 || c.noise_scale < 0.0) {
        throw std::invalid_argument("scales must be non-negative");
    }
    if (c.signal_stats < 1 || c.signal_stats > c.stats) {
        throw std::invalid_argument("signal_stats must be in 1..stats");
    }
    if (c.count_stats < 0 || c.count_stats > c.stats) {
        throw std::invalid_argument("count_stats must be in 0..stats");
    }
}

}  // namespace

League generate_league(const LeagueConfig& config) {
    check_config(config);
    League league;
    for (int k = 0; k < config.stats; ++k) {
        league.schema.stat_names.push_back("stat" + padded(k + 1, 2));
    }
    league.schema.fuzzified.assign(league.schema.stat_names.size(), false);
    if (config.signal_stats < config.stats) {
        // The last noise stat doubles as playing time, so the default slot
        // ordering shuffles players across slots from game to game.
        league.schema.playing_time_stat = league.schema.stat_names.back();
    }

    std::mt19937_64 rng(config.seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> unit(std::nextafter(0.0, 1.0), 1.0);

    // teams[t] is the index range of its players in league.skills.
    // Only signal stats carry a persistent skill; the rest are pure noise.
    for (int t = 0; t < config.teams; ++t) {
        for (int j = 0; j < config.players_per_team; ++j) {
            LatentSkill player;
            player.player_id = "t" + padded(t + 1, 2) + "p" + padded(j + 1, 2);
            player.skill.assign(static_cast<std::size_t>(config.stats), 0.0);
            for (int k = 0; k < config.signal_stats; ++k) {
                player.skill[static_cast<std::size_t>(k)] = config.skill_scale * gauss(rng);
                player.true_value += player.skill[static_cast<std::size_t>(k)];
            }
            league.skills.push_back(std::move(player));
        }
    }

    auto team_players = [&](int team) {
        std::vector<const LatentSkill*> players;
        for (int j = 0; j < config.players_per_team; ++j) {
            players.push_back(&league.skills[static_cast<std::size_t>(team * config.players_per_team + j)]);
        }
        return players;
    };

    std::uniform_int_distribution<int> pick_team(0, config.teams - 1);
    for (int g = 0; g < config.games; ++g) {
        int home = pick_team(rng);
        int away = pick_team(rng);
        while (away == home) away = pick_team(rng);

        GameRecord game;
        game.game_id = "g" + padded(g + 1, 5);
        game.season = "synthetic";

        // The outcome hinges on the realized signal stats, the way a real box
        // score decides a game; their expectation per player is true_value.
        double margin = 0.0;
        for (int side = 0; side < 2; ++side) {
            auto players = team_players(side == 0 ? home : away);
            auto& roster = side == 0 ? game.home_roster : game.away_roster;
            for (const auto* player : players) {
                PlayerStatLine line;
                line.player_id = player->player_id;
                line.values.resize(static_cast<std::size_t>(config.stats));
                for (int k = 0; k < config.stats; ++k) {
                    double v = player->skill[static_cast<std::size_t>(k)] +
                               config.noise_scale * gauss(rng);
                    if (k < config.count_stats) v = std::max(0.0, std::round(v));
                    line.values[static_cast<std::size_t>(k)] = v;
                    if (k < config.signal_stats) margin += (side == 0 ? 1.0 : -1.0) * v;
                }
                roster.push_back(std::move(line));
            }
        }
        // Latent logistic outcome noise scaled like the stat noise, so
        // noise_scale = 0 degenerates to a deterministic roster comparison.
        double u = unit(rng);
        double logistic_draw = std::log(u / (1.0 - u));
        game.home_win = margin + config.noise_scale * logistic_draw > 0.0;
        league.games.push_back(std::move(game));
    }
    return league;
}

void write_box_score_csv(std::ostream& out, const std::vector<GameRecord>& games,
                         const StatSchema& schema) {
    out << "game_id,season,team_side,player_id";
    for (const auto& name : schema.stat_names) out << ',' << name;
    out << '\n';
    for (const auto& game : games) {
        for (int side = 0; side < 2; ++side) {
            const auto& roster = side == 0 ? game.home_roster : game.away_roster;
            for (const auto& line : roster) {
                out << game.game_id << ',' << game.season << ',' << (side == 0 ? "home" : "away")
                    << ',' << line.player_id;
                for (double v : line.values) out << ',' << format_double(v);
                out << '\n';
            }
        }
        out << game.game_id << ',' << game.season << ",result,home_win," << (game.home_win ? 1 : 0)
            << '\n';
    }
}

void write_skills_csv(std::ostream& out, const std::vector<LatentSkill>& skills) {
    out << "player_id,true_value";
    if (!skills.empty()) {
        for (std::size_t k = 0; k < skills.front().skill.size(); ++k) {
            out << ",skill_" << (k + 1);
        }
    }
    out << '\n';
    for (const auto& player : skills) {
        out << player.player_id << ',' << format_double(player.true_value);
        for (double s : player.skill) out << ',' << format_double(s);
        out << '\n';
    }
}

double hoeffding_epsilon(double M, int T, double delta) {
    if (M <= 0.0) throw std::invalid_argument("bound M must be positive");
    if (T < 1) throw std::invalid_argument("T must be >= 1");
    if (!(delta > 0.0 && delta < 1.0)) throw std::invalid_argument("delta must be in (0,1)");
    return M * std::sqrt(2.0 * std::log(2.0 / delta) / static_cast<double>(T));
}

long long required_games(double M, double gap, double delta) {
    if (M <= 0.0 || gap <= 0.0) throw std::invalid_argument("M and gap must be positive");
    if (!(delta > 0.0 && delta < 1.0)) throw std::invalid_argument("delta must be in (0,1)");
    double t = 8.0 * M * M * std::log(4.0 / delta) / (gap * gap);
    return static_cast<long long>(std::ceil(t));
}

double concentration_trial(const BoundedSampler& sampler, double M, int T, double delta, int trials,
                           std::uint64_t seed) {
    if (trials < 1) throw std::invalid_argument("trials must be >= 1");
    double epsilon = hoeffding_epsilon(M, T, delta);
    int violations = 0;
    for (int trial = 0; trial < trials; ++trial) {
        // independent stream per trial, so trials could run in any order
        std::mt19937_64 rng(seed + static_cast<std::uint64_t>(trial) * 0x9e3779b97f4a7c15ull);
        double sum = 0.0;
        for (int i = 0; i < T; ++i) {
            double v = sampler.draw(rng);
            if (std::abs(v) > M * (1.0 + 1e-12)) {
                throw std::runtime_error("sampler produced a value outside [-M, M]");
            }
            sum += v;
        }
        if (std::abs(sum / static_cast<double>(T) - sampler.mean) > epsilon) ++violations;
    }
    return static_cast<double>(violations) / static_cast<double>(trials);
}

}  // namespace mvpshap
