#include "mvpshap/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

#include "mvpshap/csv.hpp"
#include <json.hpp>

namespace mvpshap {

int StatSchema::index_of(const std::string& name) const {
    for (std::size_t i = 0; i < stat_names.size(); ++i) {
        if (stat_names[i] == name) return static_cast<int>(i);
    }
    return -1;
}

static void check_schema(const StatSchema& schema) {
    if (schema.stat_names.empty()) {
        throw std::invalid_argument("schema has no stats");
    }
    std::unordered_set<std::string> seen;
    for (const auto& name : schema.stat_names) {
        if (!seen.insert(name).second) {
            throw std::invalid_argument("duplicate stat name in schema: " + name);
        }
    }
    if (!schema.fuzzified.empty() && schema.fuzzified.size() != schema.stat_names.size()) {
        throw std::invalid_argument("fuzzified flags do not match stat count");
    }
}

StatSchema StatSchema::from_json_text(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error(std::string("schema parse error: ") + e.what());
    }
    StatSchema schema;
    if (!j.contains("stats") || !j["stats"].is_array()) {
        throw std::runtime_error("schema file must contain a \"stats\" array");
    }
    for (const auto& s : j["stats"]) schema.stat_names.push_back(s.get<std::string>());
    schema.fuzzified.assign(schema.stat_names.size(), false);
    if (j.contains("fuzzified")) {
        for (const auto& s : j["fuzzified"]) {
            int idx = schema.index_of(s.get<std::string>());
            if (idx < 0) throw std::runtime_error("fuzzified stat not in schema: " + s.get<std::string>());
            schema.fuzzified[idx] = true;
        }
    }
    if (j.contains("removed")) {
        for (const auto& s : j["removed"]) schema.removed.push_back(s.get<std::string>());
    }
    if (j.contains("playing_time")) schema.playing_time_stat = j["playing_time"].get<std::string>();
    check_schema(schema);
    return schema;
}

StatSchema StatSchema::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open schema file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return from_json_text(ss.str());
}

std::string StatSchema::to_json_text() const {
    nlohmann::json j;
    j["stats"] = stat_names;
    nlohmann::json fuzz = nlohmann::json::array();
    for (std::size_t i = 0; i < stat_names.size(); ++i) {
        if (i < fuzzified.size() && fuzzified[i]) fuzz.push_back(stat_names[i]);
    }
    j["fuzzified"] = fuzz;
    j["removed"] = removed;
    if (!playing_time_stat.empty()) j["playing_time"] = playing_time_stat;
    return j.dump(2) + "\n";
}

void StatSchema::save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write schema file: " + path);
    out << to_json_text();
}

std::string schema_fingerprint(const StatSchema& schema, int max_players) {
    // FNV-1a over the fields that define the feature layout.
    std::uint64_t h = 1469598103934665603ull;
    auto mix = [&h](const void* data, std::size_t n) {
        const auto* p = static_cast<const unsigned char*>(data);
        for (std::size_t i = 0; i < n; ++i) {
            h ^= p[i];
            h *= 1099511628211ull;
        }
    };
    mix(&max_players, sizeof(max_players));
    for (std::size_t i = 0; i < schema.stat_names.size(); ++i) {
        mix(schema.stat_names[i].data(), schema.stat_names[i].size());
        unsigned char sep = 0;
        mix(&sep, 1);
        unsigned char f = (i < schema.fuzzified.size() && schema.fuzzified[i]) ? 1 : 0;
        mix(&f, 1);
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::vector<double> swap_blocks(const std::vector<double>& x) {
    if (x.size() % 2 != 0) throw std::invalid_argument("feature vector length must be even");
    std::size_t half = x.size() / 2;
    std::vector<double> out(x.size());
    std::copy(x.begin() + half, x.end(), out.begin());
    std::copy(x.begin(), x.begin() + half, out.begin() + half);
    return out;
}

namespace {

struct GameBuilder {
    GameRecord record;
    bool has_result = false;
    std::unordered_set<std::string> player_ids;
};

double parse_stat_cell(const std::string& cell, std::size_t line_no, const std::string& column) {
    if (cell.empty()) return 0.0;  // blank cells (e.g. percentages with zero attempts)
    std::size_t pos = 0;
    double v;
    try {
        v = std::stod(cell, &pos);
    } catch (const std::exception&) {
        throw std::runtime_error("line " + std::to_string(line_no) + ", column " + column +
                                 ": not a number: '" + cell + "'");
    }
    if (pos != cell.size()) {
        throw std::runtime_error("line " + std::to_string(line_no) + ", column " + column +
                                 ": trailing characters in '" + cell + "'");
    }
    if (!std::isfinite(v)) {
        throw std::runtime_error("line " + std::to_string(line_no) + ", column " + column +
                                 ": value is not finite");
    }
    return v;
}

std::vector<GameRecord> parse_box_scores_impl(std::istream& in, const StatSchema& schema,
                                              std::vector<std::string>* missing_results) {
    check_schema(schema);
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("empty box-score file");

    std::vector<std::string> header = split_csv_line(line);
    static const char* kFixed[] = {"game_id", "season", "team_side", "player_id"};
    if (header.size() < 4 + schema.size()) {
        throw std::runtime_error("box-score header has too few columns");
    }
    for (int i = 0; i < 4; ++i) {
        if (header[static_cast<std::size_t>(i)] != kFixed[i]) {
            throw std::runtime_error(std::string("box-score header: expected column '") + kFixed[i] +
                                     "', got '" + header[static_cast<std::size_t>(i)] + "'");
        }
    }
    // Map each schema stat to its column. Extra columns must be listed in
    // schema.removed; anything else is a schema error.
    std::vector<int> stat_column(schema.size(), -1);
    for (std::size_t c = 4; c < header.size(); ++c) {
        int idx = schema.index_of(header[c]);
        if (idx >= 0) {
            if (stat_column[static_cast<std::size_t>(idx)] != -1) {
                throw std::runtime_error("duplicate stat column in header: " + header[c]);
            }
            stat_column[static_cast<std::size_t>(idx)] = static_cast<int>(c);
        } else if (std::find(schema.removed.begin(), schema.removed.end(), header[c]) ==
                   schema.removed.end()) {
            throw std::runtime_error("unknown stat column: " + header[c]);
        }
    }
    for (std::size_t k = 0; k < schema.size(); ++k) {
        if (stat_column[k] < 0) {
            throw std::runtime_error("missing stat column: " + schema.stat_names[k]);
        }
    }

    std::vector<std::string> order;  // game ids by first appearance
    std::unordered_map<std::string, GameBuilder> builders;

    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        std::vector<std::string> fields = split_csv_line(line);
        if (fields.size() < 5) {
            throw std::runtime_error("line " + std::to_string(line_no) + ": too few fields");
        }
        const std::string& game_id = fields[0];
        const std::string& season = fields[1];
        const std::string& side = fields[2];

        auto it = builders.find(game_id);
        if (it == builders.end()) {
            it = builders.emplace(game_id, GameBuilder{}).first;
            it->second.record.game_id = game_id;
            it->second.record.season = season;
            order.push_back(game_id);
        }
        GameBuilder& gb = it->second;

        if (side == "result") {
            if (fields[3] != "home_win") {
                throw std::runtime_error("line " + std::to_string(line_no) +
                                         ": result row must carry home_win");
            }
            if (fields[4] != "0" && fields[4] != "1") {
                throw std::runtime_error("line " + std::to_string(line_no) +
                                         ": home_win must be 0 or 1");
            }
            if (gb.has_result) {
                throw std::runtime_error("line " + std::to_string(line_no) +
                                         ": duplicate result row for game " + game_id);
            }
            gb.record.home_win = fields[4] == "1";
            gb.has_result = true;
            continue;
        }
        if (side != "home" && side != "away") {
            throw std::runtime_error("line " + std::to_string(line_no) +
                                     ": team_side must be home, away or result, got '" + side + "'");
        }
        if (fields.size() != header.size()) {
            throw std::runtime_error("line " + std::to_string(line_no) + ": expected " +
                                     std::to_string(header.size()) + " fields, got " +
                                     std::to_string(fields.size()));
        }
        PlayerStatLine psl;
        psl.player_id = fields[3];
        if (psl.player_id.empty()) {
            throw std::runtime_error("line " + std::to_string(line_no) + ": empty player_id");
        }
        if (!gb.player_ids.insert(psl.player_id).second) {
            throw std::runtime_error("line " + std::to_string(line_no) + ": duplicate player '" +
                                     psl.player_id + "' in game " + game_id);
        }
        psl.values.resize(schema.size());
        for (std::size_t k = 0; k < schema.size(); ++k) {
            const std::string& cell = fields[static_cast<std::size_t>(stat_column[k])];
            psl.values[k] = parse_stat_cell(cell, line_no, schema.stat_names[k]);
        }
        (side == "home" ? gb.record.home_roster : gb.record.away_roster).push_back(std::move(psl));
    }

    std::vector<GameRecord> games;
    games.reserve(order.size());
    for (const auto& id : order) {
        GameBuilder& gb = builders[id];
        if (gb.record.home_roster.empty() || gb.record.away_roster.empty()) {
            throw std::runtime_error("game " + id + " is missing a roster");
        }
        if (!gb.has_result && missing_results) missing_results->push_back(id);
        games.push_back(std::move(gb.record));
    }
    return games;
}

}  // namespace

std::vector<GameRecord> parse_box_scores(std::istream& in, const StatSchema& schema) {
    std::vector<std::string> missing;
    std::vector<GameRecord> games = parse_box_scores_impl(in, schema, &missing);
    if (!missing.empty()) {
        throw std::runtime_error("game " + missing.front() +
                                 " has no result row (use a results sidecar or add one)");
    }
    return games;
}

std::map<std::string, bool> parse_results(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("empty results file");
    std::vector<std::string> header = split_csv_line(line);
    if (header.size() < 2 || header[0] != "game_id" || header[1] != "home_win") {
        throw std::runtime_error("results header must be game_id,home_win");
    }
    std::map<std::string, bool> results;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        std::vector<std::string> fields = split_csv_line(line);
        if (fields.size() < 2) {
            throw std::runtime_error("results line " + std::to_string(line_no) + ": too few fields");
        }
        if (fields[1] != "0" && fields[1] != "1") {
            throw std::runtime_error("results line " + std::to_string(line_no) +
                                     ": home_win must be 0 or 1");
        }
        if (!results.emplace(fields[0], fields[1] == "1").second) {
            throw std::runtime_error("results line " + std::to_string(line_no) +
                                     ": duplicate game " + fields[0]);
        }
    }
    return results;
}

void apply_results(std::vector<GameRecord>& games, const std::map<std::string, bool>& results) {
    for (auto& game : games) {
        auto it = results.find(game.game_id);
        if (it == results.end()) {
            throw std::runtime_error("no result for game " + game.game_id);
        }
        game.home_win = it->second;
    }
}

std::vector<GameRecord> load_box_scores(const std::string& data_path, const StatSchema& schema,
                                        const std::string& results_path) {
    std::ifstream in(data_path);
    if (!in) throw std::runtime_error("cannot open box-score file: " + data_path);
    if (results_path.empty()) {
        return parse_box_scores(in, schema);
    }
    std::vector<std::string> missing;
    std::vector<GameRecord> games = parse_box_scores_impl(in, schema, &missing);
    std::ifstream results_in(results_path);
    if (!results_in) throw std::runtime_error("cannot open results file: " + results_path);
    std::map<std::string, bool> results = parse_results(results_in);
    for (const auto& id : missing) {
        auto it = results.find(id);
        if (it == results.end()) throw std::runtime_error("no result for game " + id);
        for (auto& game : games) {
            if (game.game_id == id) game.home_win = it->second;
        }
    }
    return games;
}

namespace {

std::vector<const PlayerStatLine*> sorted_roster(const std::vector<PlayerStatLine>& roster,
                                                 const StatSchema& schema, SlotPolicy policy) {
    std::vector<const PlayerStatLine*> ptrs;
    for (const auto& line : roster) ptrs.push_back(&line);
    int minutes_idx = schema.playing_time_stat.empty() ? -1 : schema.index_of(schema.playing_time_stat);
    if (policy == SlotPolicy::PlayerId ||
        (policy == SlotPolicy::MinutesThenId && minutes_idx < 0)) {
        std::sort(ptrs.begin(), ptrs.end(), [](const PlayerStatLine* a, const PlayerStatLine* b) {
            return a->player_id < b->player_id;
        });
    } else if (policy == SlotPolicy::MinutesThenId) {
        std::sort(ptrs.begin(), ptrs.end(),
                  [minutes_idx](const PlayerStatLine* a, const PlayerStatLine* b) {
                      double ma = a->values[static_cast<std::size_t>(minutes_idx)];
                      double mb = b->values[static_cast<std::size_t>(minutes_idx)];
                      if (ma != mb) return ma > mb;
                      return a->player_id < b->player_id;
                  });
    }
    return ptrs;
}

}  // namespace

void order_rosters(std::vector<GameRecord>& games, const StatSchema& schema, SlotPolicy policy) {
    for (auto& game : games) {
        for (auto* roster : {&game.home_roster, &game.away_roster}) {
            auto ptrs = sorted_roster(*roster, schema, policy);
            std::vector<PlayerStatLine> reordered;
            reordered.reserve(ptrs.size());
            for (const auto* line : ptrs) reordered.push_back(*line);
            *roster = std::move(reordered);
        }
    }
}

PairedSample build_paired_sample(const GameRecord& game, const StatSchema& schema,
                                 int max_players, SlotPolicy policy) {
    if (max_players <= 0) throw std::invalid_argument("max_players must be positive");
    const std::size_t p = static_cast<std::size_t>(max_players);
    const std::size_t q = schema.size();
    if (game.home_roster.size() > p || game.away_roster.size() > p) {
        throw std::runtime_error("game " + game.game_id + ": roster larger than " +
                                 std::to_string(max_players));
    }
    if (game.home_roster.empty() || game.away_roster.empty()) {
        throw std::runtime_error("game " + game.game_id + ": empty roster");
    }

    auto ordered = [&](const std::vector<PlayerStatLine>& roster) {
        return sorted_roster(roster, schema, policy);
    };

    PairedSample sample;
    sample.game_id = game.game_id;
    sample.x1.assign(2 * p * q, 0.0);
    sample.home_slots.assign(p, "");
    sample.away_slots.assign(p, "");

    auto fill = [&](const std::vector<const PlayerStatLine*>& roster, std::size_t block_offset,
                    std::vector<std::string>& slots) {
        for (std::size_t s = 0; s < roster.size(); ++s) {
            if (roster[s]->values.size() != q) {
                throw std::runtime_error("game " + game.game_id + ": stat line of '" +
                                         roster[s]->player_id + "' has wrong length");
            }
            slots[s] = roster[s]->player_id;
            for (std::size_t k = 0; k < q; ++k) {
                double v = roster[s]->values[k];
                if (std::isnan(v)) {
                    throw std::runtime_error("game " + game.game_id + ": NaN stat for '" +
                                             roster[s]->player_id + "'");
                }
                sample.x1[block_offset + feature_index(s, k, q)] = v;
            }
        }
    };
    fill(ordered(game.home_roster), 0, sample.home_slots);
    fill(ordered(game.away_roster), p * q, sample.away_slots);

    sample.x2 = swap_blocks(sample.x1);
    sample.y1 = game.home_win ? 1 : 0;
    sample.y2 = 1 - sample.y1;
    return sample;
}

std::vector<PairedSample> build_paired_samples(const std::vector<GameRecord>& games,
                                               const StatSchema& schema, int max_players,
                                               SlotPolicy policy) {
    std::vector<PairedSample> samples;
    samples.reserve(games.size());
    for (const auto& game : games) {
        samples.push_back(build_paired_sample(game, schema, max_players, policy));
    }
    return samples;
}

void split_train_test(const std::vector<PairedSample>& samples, double ratio, std::uint64_t seed,
                      std::vector<PairedSample>& train, std::vector<PairedSample>& test) {
    if (!(ratio > 0.0 && ratio < 1.0)) {
        throw std::invalid_argument("split ratio must be in (0,1)");
    }
    std::set<std::string> id_set;
    for (const auto& s : samples) id_set.insert(s.game_id);
    if (id_set.size() < 2) {
        throw std::runtime_error("need at least 2 games to split");
    }
    // Sorted ids, so the split does not depend on input row order.
    std::vector<std::string> ids(id_set.begin(), id_set.end());
    std::mt19937_64 rng(seed);
    std::shuffle(ids.begin(), ids.end(), rng);

    std::size_t n_train = static_cast<std::size_t>(std::llround(ratio * static_cast<double>(ids.size())));
    n_train = std::min(std::max<std::size_t>(n_train, 1), ids.size() - 1);
    std::set<std::string> train_ids(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(n_train));

    train.clear();
    test.clear();
    for (const auto& s : samples) {
        (train_ids.count(s.game_id) ? train : test).push_back(s);
    }
}

}  // namespace mvpshap
