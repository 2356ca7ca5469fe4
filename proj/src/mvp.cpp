#include "mvpshap/mvp.hpp"

#include <algorithm>
#include <istream>
#include <ostream>
#include <stdexcept>

#include "mvpshap/csv.hpp"

namespace mvpshap {

std::string rank_method_name(RankMethod method) {
    switch (method) {
        case RankMethod::Single: return "SINGLE";
        case RankMethod::M1: return "M1";
        case RankMethod::M2: return "M2";
        case RankMethod::M3: return "M3";
        case RankMethod::Baseline: return "BASELINE";
    }
    return "?";
}

RankMethod parse_rank_method(const std::string& name) {
    if (name == "single" || name == "SINGLE") return RankMethod::Single;
    if (name == "m1" || name == "M1") return RankMethod::M1;
    if (name == "m2" || name == "M2") return RankMethod::M2;
    if (name == "m3" || name == "M3") return RankMethod::M3;
    if (name == "baseline" || name == "BASELINE") return RankMethod::Baseline;
    throw std::invalid_argument("unknown ranking method: " + name);
}

std::vector<PlayerContribution> player_contributions(const TreeEnsemble& model,
                                                     const GameRecord& game,
                                                     const StatSchema& schema, int max_players,
                                                     SlotPolicy policy) {
    check_fingerprint(model, schema_fingerprint(schema, max_players), /*strict=*/true);
    PairedSample sample = build_paired_sample(game, schema, max_players, policy);

    AttributionVector on_x1 = tree_shap(model, sample.x1, game.game_id + ":x1");
    AttributionVector on_x2 = tree_shap(model, sample.x2, game.game_id + ":x2");

    const std::size_t p = sample.home_slots.size();
    const std::size_t q = schema.size();
    auto block_sum = [&](const AttributionVector& attr, std::size_t slot, bool away_block) {
        std::size_t offset = away_block ? p * q : 0;
        double sum = 0.0;
        for (std::size_t k = 0; k < q; ++k) sum += attr.phi[offset + feature_index(slot, k, q)];
        return sum;
    };

    std::vector<PlayerContribution> contribs;
    for (std::size_t s = 0; s < p; ++s) {
        if (sample.home_slots[s].empty()) continue;
        // Home players: home block of x1 minus away block of x2.
        contribs.push_back({game.game_id, sample.home_slots[s],
                            block_sum(on_x1, s, false) - block_sum(on_x2, s, true),
                            game.home_win});
    }
    for (std::size_t s = 0; s < p; ++s) {
        if (sample.away_slots[s].empty()) continue;
        // Away players: home block of x2 minus away block of x1.
        contribs.push_back({game.game_id, sample.away_slots[s],
                            block_sum(on_x2, s, false) - block_sum(on_x1, s, true),
                            !game.home_win});
    }
    return contribs;
}

std::vector<std::vector<PlayerContribution>> season_contributions(
    const TreeEnsemble& model, const std::vector<GameRecord>& games, const StatSchema& schema,
    int max_players, SlotPolicy policy) {
    std::vector<std::vector<PlayerContribution>> per_game;
    per_game.reserve(games.size());
    for (const auto& game : games) {
        per_game.push_back(player_contributions(model, game, schema, max_players, policy));
    }
    return per_game;
}

std::string single_game_mvp(const std::vector<PlayerContribution>& contribs) {
    if (contribs.empty()) throw std::invalid_argument("no contributions");
    const PlayerContribution* best = nullptr;
    for (const auto& c : contribs) {
        if (!c.on_winning_team) continue;
        if (!best || c.phi_total > best->phi_total ||
            (c.phi_total == best->phi_total && c.player_id < best->player_id)) {
            best = &c;
        }
    }
    if (!best) throw std::runtime_error("no winning-team entries");
    return best->player_id;
}

std::map<std::string, int> rank_within_game(const std::vector<PlayerContribution>& contribs) {
    std::vector<const PlayerContribution*> order;
    for (const auto& c : contribs) order.push_back(&c);
    std::sort(order.begin(), order.end(), [](const PlayerContribution* a, const PlayerContribution* b) {
        if (a->phi_total != b->phi_total) return a->phi_total > b->phi_total;
        return a->player_id < b->player_id;
    });
    std::map<std::string, int> ranks;
    int rank = 0;
    for (std::size_t i = 0; i < order.size(); ++i) {
        if (i == 0 || order[i]->phi_total != order[i - 1]->phi_total) {
            rank = static_cast<int>(i) + 1;  // competition ranking
        }
        ranks[order[i]->player_id] = rank;
    }
    return ranks;
}

namespace {

struct PlayerHistory {
    std::vector<int> ranks;       // in-game rank, all games played
    std::vector<int> win_ranks;   // in-game rank, winning games only
    std::vector<double> contribs; // per-game contribution
};

std::map<std::string, PlayerHistory> collect_histories(
    const std::vector<std::vector<PlayerContribution>>& per_game) {
    std::map<std::string, PlayerHistory> histories;
    for (const auto& game : per_game) {
        if (game.empty()) continue;
        std::map<std::string, int> ranks = rank_within_game(game);
        for (const auto& c : game) {
            PlayerHistory& h = histories[c.player_id];
            int r = ranks.at(c.player_id);
            h.ranks.push_back(r);
            if (c.on_winning_team) h.win_ranks.push_back(r);
            h.contribs.push_back(c.phi_total);
        }
    }
    return histories;
}

double mean(const std::vector<double>& v) {
    double sum = 0.0;
    for (double x : v) sum += x;
    return sum / static_cast<double>(v.size());
}

double mean_int(const std::vector<int>& v) {
    double sum = 0.0;
    for (int x : v) sum += x;
    return sum / static_cast<double>(v.size());
}

RankingResult assemble(RankMethod method, std::vector<RankedEntry> entries, int min_games,
                       bool ascending) {
    if (entries.empty()) throw std::runtime_error("no eligible players");
    std::sort(entries.begin(), entries.end(), [ascending](const RankedEntry& a, const RankedEntry& b) {
        if (a.score != b.score) return ascending ? a.score < b.score : a.score > b.score;
        return a.player_id < b.player_id;
    });
    int rank = 0;
    for (std::size_t i = 0; i < entries.size(); ++i) {
        if (i == 0 || entries[i].score != entries[i - 1].score) rank = static_cast<int>(i) + 1;
        entries[i].rank = rank;
    }
    return RankingResult{method, std::move(entries), min_games};
}

}  // namespace

RankingResult rank_m1(const std::vector<std::vector<PlayerContribution>>& per_game, int min_games) {
    if (per_game.empty()) throw std::invalid_argument("no games");
    std::vector<RankedEntry> entries;
    for (const auto& [player, history] : collect_histories(per_game)) {
        if (history.win_ranks.empty()) continue;  // no winning games, no M1 score
        if (static_cast<int>(history.win_ranks.size()) < min_games) continue;
        entries.push_back({player, mean_int(history.win_ranks), 0,
                           static_cast<int>(history.win_ranks.size())});
    }
    return assemble(RankMethod::M1, std::move(entries), min_games, /*ascending=*/true);
}

RankingResult rank_m2(const std::vector<std::vector<PlayerContribution>>& per_game, int min_games) {
    if (per_game.empty()) throw std::invalid_argument("no games");
    std::vector<RankedEntry> entries;
    for (const auto& [player, history] : collect_histories(per_game)) {
        if (static_cast<int>(history.ranks.size()) < std::max(min_games, 1)) continue;
        entries.push_back({player, mean_int(history.ranks), 0, static_cast<int>(history.ranks.size())});
    }
    return assemble(RankMethod::M2, std::move(entries), min_games, /*ascending=*/true);
}

RankingResult rank_m3(const std::vector<std::vector<PlayerContribution>>& per_game, int min_games) {
    if (per_game.empty()) throw std::invalid_argument("no games");
    std::vector<RankedEntry> entries;
    for (const auto& [player, history] : collect_histories(per_game)) {
        if (static_cast<int>(history.contribs.size()) < std::max(min_games, 1)) continue;
        entries.push_back({player, mean(history.contribs), 0,
                           static_cast<int>(history.contribs.size())});
    }
    return assemble(RankMethod::M3, std::move(entries), min_games, /*ascending=*/false);
}

void write_ranking_csv(std::ostream& out, const RankingResult& ranking) {
    out << "rank,player_id,score,games,method\n";
    for (const auto& e : ranking.entries) {
        out << e.rank << ',' << e.player_id << ',' << format_double(e.score) << ',' << e.games << ','
            << rank_method_name(ranking.method) << '\n';
    }
}

RankingResult read_ranking_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("empty ranking file");
    if (split_csv_line(line) != std::vector<std::string>{"rank", "player_id", "score", "games", "method"}) {
        throw std::runtime_error("unexpected ranking header: " + line);
    }
    RankingResult ranking;
    bool have_method = false;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto fields = split_csv_line(line);
        if (fields.size() != 5) throw std::runtime_error("bad ranking row: " + line);
        RankedEntry e;
        e.rank = std::stoi(fields[0]);
        e.player_id = fields[1];
        e.score = std::stod(fields[2]);
        e.games = std::stoi(fields[3]);
        if (!have_method) {
            ranking.method = parse_rank_method(fields[4]);
            have_method = true;
        }
        ranking.entries.push_back(std::move(e));
    }
    return ranking;
}

}  // namespace mvpshap
