#pragma once

#include <map>
#include <string>
#include <vector>

#include "mvpshap/dataset.hpp"
#include "mvpshap/mvp.hpp"

namespace mvpshap {

enum class TruthScope { PerGame, Season };

/// Ground-truth votes: either an ordered season ranking or per-game MVP
/// labels. File format: scope,key,rank,player_id.
struct GroundTruth {
    TruthScope scope = TruthScope::Season;
    std::string season_key;
    std::vector<std::string> season_order;          // vote ranking, best first
    std::map<std::string, std::string> game_mvp;    // game_id -> player_id
};

GroundTruth parse_ground_truth(std::istream& in);
GroundTruth load_ground_truth(const std::string& path);

/// Mean absolute difference between each truth-listed player's predicted
/// rank (over the whole eligible pool) and their vote rank.
double ard(const RankingResult& predicted, const GroundTruth& truth);

/// Spearman's coefficient over the truth-listed players, 1 - 6*sum(d^2)/(n(n^2-1)).
/// Predicted ranks are re-ranked within the truth set, average ranks on ties.
double srcc(const RankingResult& predicted, const GroundTruth& truth);

/// |top-K of truth  intersect  top-K of prediction| / K.
double recall_at_k(const RankingResult& predicted, const GroundTruth& truth, int k);

/// Fraction of labeled games whose predicted MVP matches the vote.
double accuracy(const std::map<std::string, std::string>& per_game_predictions,
                const GroundTruth& truth);

enum class Normalization { MinMax, ZScore };

/// Stat weights for the metric-weighting baseline.
struct WeightSpec {
    std::vector<double> weights;  // aligned with schema stats
    Normalization normalization = Normalization::MinMax;
};

WeightSpec uniform_weights(const StatSchema& schema);

/// Normalize each stat over the pool of stat lines, take the weighted sum per
/// appearance, and rank players by their mean over games. Zero-variance stats
/// under zscore are skipped (reported via warnings).
RankingResult baseline_rank(const std::vector<GameRecord>& games, const StatSchema& schema,
                            const WeightSpec& weights, std::vector<std::string>* warnings = nullptr);

struct MetricRow {
    std::string metric;
    double value = 0.0;
    std::string method;
    std::string scope;
};

void write_metric_csv(std::ostream& out, const std::vector<MetricRow>& rows);

}  // namespace mvpshap
