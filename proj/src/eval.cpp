#include "mvpshap/eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <stdexcept>
#include <unordered_map>

#include "mvpshap/csv.hpp"

namespace mvpshap {

GroundTruth parse_ground_truth(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("empty ground-truth file");
    if (split_csv_line(line) != std::vector<std::string>{"scope", "key", "rank", "player_id"}) {
        throw std::runtime_error("ground-truth header must be scope,key,rank,player_id");
    }
    GroundTruth truth;
    bool scope_set = false;
    std::vector<std::pair<int, std::string>> season_rows;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        auto fields = split_csv_line(line);
        if (fields.size() != 4) {
            throw std::runtime_error("ground-truth line " + std::to_string(line_no) + ": bad row");
        }
        TruthScope scope;
        if (fields[0] == "SEASON") scope = TruthScope::Season;
        else if (fields[0] == "PER_GAME") scope = TruthScope::PerGame;
        else throw std::runtime_error("ground-truth line " + std::to_string(line_no) +
                                      ": scope must be SEASON or PER_GAME");
        if (scope_set && scope != truth.scope) {
            throw std::runtime_error("ground-truth file mixes scopes");
        }
        truth.scope = scope;
        scope_set = true;

        if (scope == TruthScope::Season) {
            if (!truth.season_key.empty() && truth.season_key != fields[1]) {
                throw std::runtime_error("ground-truth file contains multiple seasons");
            }
            truth.season_key = fields[1];
            season_rows.emplace_back(std::stoi(fields[2]), fields[3]);
        } else {
            if (fields[2] != "1") {
                throw std::runtime_error("ground-truth line " + std::to_string(line_no) +
                                         ": per-game rows carry rank 1 only");
            }
            if (!truth.game_mvp.emplace(fields[1], fields[3]).second) {
                throw std::runtime_error("duplicate per-game label for " + fields[1]);
            }
        }
    }
    if (!scope_set) throw std::runtime_error("ground-truth file has no rows");
    if (truth.scope == TruthScope::Season) {
        std::sort(season_rows.begin(), season_rows.end());
        std::set<std::string> seen;
        for (std::size_t i = 0; i < season_rows.size(); ++i) {
            if (season_rows[i].first != static_cast<int>(i) + 1) {
                throw std::runtime_error("season ranks must be 1..N without gaps");
            }
            if (!seen.insert(season_rows[i].second).second) {
                throw std::runtime_error("duplicate player in season truth: " + season_rows[i].second);
            }
            truth.season_order.push_back(season_rows[i].second);
        }
    }
    return truth;
}

GroundTruth load_ground_truth(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open ground-truth file: " + path);
    return parse_ground_truth(in);
}

namespace {

std::unordered_map<std::string, int> predicted_ranks(const RankingResult& predicted) {
    std::unordered_map<std::string, int> ranks;
    for (const auto& e : predicted.entries) ranks.emplace(e.player_id, e.rank);
    return ranks;
}

int rank_of(const std::unordered_map<std::string, int>& ranks, const std::string& player) {
    auto it = ranks.find(player);
    if (it == ranks.end()) {
        throw std::runtime_error("truth player absent from predicted ranking: " + player);
    }
    return it->second;
}

// Fractional ranks (ascending values, average on ties).
std::vector<double> rankify(const std::vector<double>& values) {
    std::vector<std::size_t> order(values.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    std::vector<double> ranks(values.size());
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]]) ++j;
        double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
        i = j + 1;
    }
    return ranks;
}

}  // namespace

double ard(const RankingResult& predicted, const GroundTruth& truth) {
    if (truth.scope != TruthScope::Season) throw std::invalid_argument("ARD needs season truth");
    if (truth.season_order.empty()) throw std::invalid_argument("empty truth ranking");
    auto ranks = predicted_ranks(predicted);
    double sum = 0.0;
    for (std::size_t i = 0; i < truth.season_order.size(); ++i) {
        int predicted_rank = rank_of(ranks, truth.season_order[i]);
        sum += std::abs(predicted_rank - (static_cast<int>(i) + 1));
    }
    return sum / static_cast<double>(truth.season_order.size());
}

double srcc(const RankingResult& predicted, const GroundTruth& truth) {
    if (truth.scope != TruthScope::Season) throw std::invalid_argument("SRCC needs season truth");
    const std::size_t n = truth.season_order.size();
    if (n < 2) throw std::invalid_argument("SRCC needs at least 2 common players");
    auto ranks = predicted_ranks(predicted);
    std::vector<double> pool_ranks(n);
    for (std::size_t i = 0; i < n; ++i) {
        pool_ranks[i] = static_cast<double>(rank_of(ranks, truth.season_order[i]));
    }
    std::vector<double> within = rankify(pool_ranks);
    double d2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double d = within[i] - (static_cast<double>(i) + 1.0);
        d2 += d * d;
    }
    double nn = static_cast<double>(n);
    return 1.0 - 6.0 * d2 / (nn * (nn * nn - 1.0));
}

double recall_at_k(const RankingResult& predicted, const GroundTruth& truth, int k) {
    if (truth.scope != TruthScope::Season) throw std::invalid_argument("recall needs season truth");
    if (k < 1) throw std::invalid_argument("K must be >= 1");
    if (static_cast<std::size_t>(k) > truth.season_order.size() ||
        static_cast<std::size_t>(k) > predicted.entries.size()) {
        throw std::invalid_argument("K exceeds list length");
    }
    std::set<std::string> truth_top(truth.season_order.begin(), truth.season_order.begin() + k);
    int hits = 0;
    for (int i = 0; i < k; ++i) {
        if (truth_top.count(predicted.entries[static_cast<std::size_t>(i)].player_id)) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(k);
}

double accuracy(const std::map<std::string, std::string>& per_game_predictions,
                const GroundTruth& truth) {
    if (truth.scope != TruthScope::PerGame) throw std::invalid_argument("accuracy needs per-game truth");
    int labeled = 0;
    int matched = 0;
    for (const auto& [game, player] : per_game_predictions) {
        auto it = truth.game_mvp.find(game);
        if (it == truth.game_mvp.end()) continue;  // unlabeled games don't count
        ++labeled;
        if (it->second == player) ++matched;
    }
    if (labeled == 0) throw std::runtime_error("no labeled games");
    return static_cast<double>(matched) / static_cast<double>(labeled);
}

WeightSpec uniform_weights(const StatSchema& schema) {
    WeightSpec spec;
    spec.weights.assign(schema.size(), 1.0);
    return spec;
}

RankingResult baseline_rank(const std::vector<GameRecord>& games, const StatSchema& schema,
                            const WeightSpec& weights, std::vector<std::string>* warnings) {
    if (weights.weights.size() != schema.size()) {
        throw std::invalid_argument("weight vector does not cover schema stats");
    }
    bool any_nonzero = false;
    for (double w : weights.weights) any_nonzero |= w != 0.0;
    if (!any_nonzero) throw std::invalid_argument("all weights are zero");

    std::vector<const PlayerStatLine*> pool;
    for (const auto& game : games) {
        for (const auto& line : game.home_roster) pool.push_back(&line);
        for (const auto& line : game.away_roster) pool.push_back(&line);
    }
    if (pool.empty()) throw std::invalid_argument("no stat lines");

    const std::size_t q = schema.size();
    std::vector<double> lo(q), hi(q), mu(q), sigma(q);
    for (std::size_t k = 0; k < q; ++k) {
        double sum = 0.0, sum2 = 0.0;
        lo[k] = pool.front()->values[k];
        hi[k] = lo[k];
        for (const auto* line : pool) {
            double v = line->values[k];
            lo[k] = std::min(lo[k], v);
            hi[k] = std::max(hi[k], v);
            sum += v;
            sum2 += v * v;
        }
        mu[k] = sum / static_cast<double>(pool.size());
        double var = sum2 / static_cast<double>(pool.size()) - mu[k] * mu[k];
        sigma[k] = var > 0.0 ? std::sqrt(var) : 0.0;
    }

    std::vector<bool> skip(q, false);
    if (weights.normalization == Normalization::ZScore) {
        for (std::size_t k = 0; k < q; ++k) {
            if (sigma[k] == 0.0 && weights.weights[k] != 0.0) {
                skip[k] = true;
                if (warnings) {
                    warnings->push_back("zscore: stat " + schema.stat_names[k] +
                                        " has zero variance, skipped");
                }
            }
        }
    }

    auto line_score = [&](const PlayerStatLine& line) {
        double score = 0.0;
        for (std::size_t k = 0; k < q; ++k) {
            if (weights.weights[k] == 0.0 || skip[k]) continue;
            double v = line.values[k];
            double normed;
            if (weights.normalization == Normalization::MinMax) {
                normed = hi[k] > lo[k] ? (v - lo[k]) / (hi[k] - lo[k]) : 0.0;
            } else {
                normed = (v - mu[k]) / sigma[k];
            }
            score += weights.weights[k] * normed;
        }
        return score;
    };

    std::map<std::string, std::pair<double, int>> totals;  // player -> (sum, games)
    for (const auto& game : games) {
        for (const auto& line : game.home_roster) {
            auto& t = totals[line.player_id];
            t.first += line_score(line);
            t.second += 1;
        }
        for (const auto& line : game.away_roster) {
            auto& t = totals[line.player_id];
            t.first += line_score(line);
            t.second += 1;
        }
    }

    std::vector<RankedEntry> entries;
    for (const auto& [player, t] : totals) {
        entries.push_back({player, t.first / t.second, 0, t.second});
    }
    std::sort(entries.begin(), entries.end(), [](const RankedEntry& a, const RankedEntry& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.player_id < b.player_id;
    });
    int rank = 0;
    for (std::size_t i = 0; i < entries.size(); ++i) {
        if (i == 0 || entries[i].score != entries[i - 1].score) rank = static_cast<int>(i) + 1;
        entries[i].rank = rank;
    }
    return RankingResult{RankMethod::Baseline, std::move(entries), 0};
}

void write_metric_csv(std::ostream& out, const std::vector<MetricRow>& rows) {
    out << "metric,value,method,scope\n";
    for (const auto& row : rows) {
        out << row.metric << ',' << format_double(row.value) << ',' << row.method << ',' << row.scope
            << '\n';
    }
}

}  // namespace mvpshap
