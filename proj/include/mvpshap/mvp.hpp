#pragma once

#include <map>
#include <string>
#include <vector>

#include "mvpshap/attribution.hpp"
#include "mvpshap/dataset.hpp"
#include "mvpshap/model.hpp"

namespace mvpshap {

/// One player's total Shapley contribution to one game, in margin units:
/// the sum over their features as home team minus as away team across the
/// mirrored sample pair.
struct PlayerContribution {
    std::string game_id;
    std::string player_id;
    double phi_total = 0.0;
    bool on_winning_team = false;
};

enum class RankMethod { Single, M1, M2, M3, Baseline };

std::string rank_method_name(RankMethod method);
RankMethod parse_rank_method(const std::string& name);

struct RankedEntry {
    std::string player_id;
    double score = 0.0;
    int rank = 0;
    int games = 0;  // games backing the score
};

/// Competition-ranked players: ties share the smaller rank, the next rank is
/// skipped; entry order breaks exact ties by player_id.
struct RankingResult {
    RankMethod method = RankMethod::M3;
    std::vector<RankedEntry> entries;
    int min_games = 0;
};

/// Attribute both mirrored samples of a game and aggregate per player.
/// Requires the model fingerprint to match the schema; padded slots produce
/// no entries.
std::vector<PlayerContribution> player_contributions(const TreeEnsemble& model,
                                                     const GameRecord& game,
                                                     const StatSchema& schema, int max_players,
                                                     SlotPolicy policy = SlotPolicy::MinutesThenId);

std::vector<std::vector<PlayerContribution>> season_contributions(
    const TreeEnsemble& model, const std::vector<GameRecord>& games, const StatSchema& schema,
    int max_players, SlotPolicy policy = SlotPolicy::MinutesThenId);

/// Highest contribution on the winning team; ties by player_id.
std::string single_game_mvp(const std::vector<PlayerContribution>& contribs);

/// Competition rank of every player of one game by descending contribution.
std::map<std::string, int> rank_within_game(const std::vector<PlayerContribution>& contribs);

/// M1: smallest mean in-game rank across winning games. Ascending.
RankingResult rank_m1(const std::vector<std::vector<PlayerContribution>>& per_game, int min_games);

/// M2: smallest mean in-game rank across all games played. Ascending.
RankingResult rank_m2(const std::vector<std::vector<PlayerContribution>>& per_game, int min_games);

/// M3: largest mean contribution across all games played. Descending.
RankingResult rank_m3(const std::vector<std::vector<PlayerContribution>>& per_game, int min_games);

/// CSV: rank,player_id,score,games,method
void write_ranking_csv(std::ostream& out, const RankingResult& ranking);
RankingResult read_ranking_csv(std::istream& in);

}  // namespace mvpshap
