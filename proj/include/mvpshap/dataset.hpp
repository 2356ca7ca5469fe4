#pragma once

#include <cstdint>
#include <istream>
#include <map>
#include <string>
#include <vector>

namespace mvpshap {

/// Canonical ordered list of per-player statistics. The order fixes the
/// feature layout used by every downstream module.
struct StatSchema {
    std::vector<std::string> stat_names;
    std::vector<bool> fuzzified;        // stat is integer-valued after binning
    std::vector<std::string> removed;   // stats dropped by refinement; still accepted in files
    std::string playing_time_stat;      // optional; drives the default slot ordering

    std::size_t size() const { return stat_names.size(); }
    int index_of(const std::string& name) const;

    static StatSchema from_json_text(const std::string& text);
    static StatSchema load(const std::string& path);
    std::string to_json_text() const;
    void save(const std::string& path) const;
};

/// Hash of the schema contents plus the slot count. Models carry this so a
/// mismatched schema is caught at load time instead of producing garbage.
std::string schema_fingerprint(const StatSchema& schema, int max_players);

struct PlayerStatLine {
    std::string player_id;
    std::vector<double> values;  // length == schema.size(), no NaN
};

struct GameRecord {
    std::string game_id;
    std::string season;
    std::vector<PlayerStatLine> home_roster;
    std::vector<PlayerStatLine> away_roster;
    bool home_win = false;
};

/// How roster players map onto feature slots.
enum class SlotPolicy {
    MinutesThenId,  // descending playing time, ties by player_id (default)
    PlayerId,       // player_id ascending
    InputOrder,     // as parsed
};

/// The two mirrored feature vectors of one game. x2 equals x1 with the home
/// and away blocks swapped; labels are complementary.
struct PairedSample {
    std::string game_id;
    std::vector<double> x1;
    std::vector<double> x2;
    int y1 = 0;
    int y2 = 1;
    std::vector<std::string> home_slots;  // slot -> player_id, "" for padding
    std::vector<std::string> away_slots;
};

/// Feature index of (slot, stat) in the home block; the away block adds p*q.
inline std::size_t feature_index(std::size_t slot, std::size_t stat, std::size_t q) {
    return slot * q + stat;
}

/// Swap the home and away blocks of a 2pq feature vector. Involution.
std::vector<double> swap_blocks(const std::vector<double>& x);

/// Parse the box-score CSV format:
///   game_id,season,team_side,player_id,<stat_1>,...,<stat_q>
/// with team_side in {home,away}, plus per-game result rows
///   game_id,season,result,home_win,<0|1>
/// Rows may interleave across games. Blank stat cells ingest as 0.0.
std::vector<GameRecord> parse_box_scores(std::istream& in, const StatSchema& schema);

/// Sidecar results CSV: header game_id,home_win.
std::map<std::string, bool> parse_results(std::istream& in);

/// Attach outcomes from a sidecar results table to games lacking one.
void apply_results(std::vector<GameRecord>& games, const std::map<std::string, bool>& results);

std::vector<GameRecord> load_box_scores(const std::string& data_path, const StatSchema& schema,
                                        const std::string& results_path = "");

/// Sort every roster in place by the slot rule, so later layout steps can use
/// SlotPolicy::InputOrder. Keeps slots stable when refinement drops or bins
/// the stat that drives the ordering.
void order_rosters(std::vector<GameRecord>& games, const StatSchema& schema,
                   SlotPolicy policy = SlotPolicy::MinutesThenId);

PairedSample build_paired_sample(const GameRecord& game, const StatSchema& schema,
                                 int max_players, SlotPolicy policy = SlotPolicy::MinutesThenId);

std::vector<PairedSample> build_paired_samples(const std::vector<GameRecord>& games,
                                               const StatSchema& schema, int max_players,
                                               SlotPolicy policy = SlotPolicy::MinutesThenId);

/// Split by game so both mirrored samples of a game land on the same side.
/// Deterministic given the seed and independent of input row order.
void split_train_test(const std::vector<PairedSample>& samples, double ratio, std::uint64_t seed,
                      std::vector<PairedSample>& train, std::vector<PairedSample>& test);

}  // namespace mvpshap
