#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "mvpshap/attribution.hpp"
#include "mvpshap/dataset.hpp"
#include "mvpshap/eval.hpp"
#include "mvpshap/model.hpp"

namespace mvpshap {

/// Mean |phi| per base stat, aggregated over every slot copy of the stat.
struct ImportanceReport {
    std::vector<std::string> stats;
    std::vector<double> mean_abs_phi;
    std::vector<int> rank;  // 1 = most important; ties by stat order
};

ImportanceReport feature_importance(const std::vector<AttributionVector>& attributions,
                                    const StatSchema& schema, int max_players);

struct StatGroup {
    std::string label;
    std::vector<int> stat_indices;  // into the schema
};

/// top_k singleton groups by importance plus one remainder group; the
/// partition that keeps the subset search at 2^(top_k+1) candidates.
std::vector<StatGroup> group_features(const ImportanceReport& report, const StatSchema& schema,
                                      int top_k);

enum class AlignMetric { Srcc, Ard, Acc };

std::string align_metric_name(AlignMetric metric);
AlignMetric parse_align_metric(const std::string& name);

struct SubsetCandidate {
    std::uint32_t mask = 0;      // bit i set = group i included
    double score = 0.0;
    AlignMetric metric = AlignMetric::Srcc;
    bool failed = false;
    std::string error;
};

/// Schema and games restricted to a subset of stats (schema order preserved).
StatSchema restrict_schema(const StatSchema& schema, const std::vector<int>& stat_indices);
std::vector<GameRecord> restrict_games(const std::vector<GameRecord>& games,
                                       const std::vector<int>& stat_indices);

/// Exhaustively retrain and rank under every non-empty group inclusion
/// pattern, scoring each candidate's M3 ranking against the ground truth.
/// Best first; deterministic. Failed candidates sort last with their error.
std::vector<SubsetCandidate> subset_search(const std::vector<GameRecord>& games,
                                           const StatSchema& schema, int max_players,
                                           const std::vector<StatGroup>& groups,
                                           const GroundTruth& truth, AlignMetric metric,
                                           const TrainConfig& train_cfg,
                                           SlotPolicy policy = SlotPolicy::MinutesThenId);

void write_subset_report_csv(std::ostream& out, const std::vector<SubsetCandidate>& candidates,
                             const std::vector<StatGroup>& groups);

/// Quantile discretization of one stat into bucket_count ordinal buckets.
/// boundaries holds the bucket_count-1 finite upper bounds; the top bucket
/// absorbs everything above the last one.
struct BinningSpec {
    std::string stat;
    std::vector<double> boundaries;  // strictly increasing
    int bucket_count = 1;
    std::vector<double> source_quantiles;
};

/// Boundaries at the empirical quantiles j/t (sorted-order linear
/// interpolation). t = 1 yields no boundaries: every value maps to bucket 1
/// and the variable carries no information.
BinningSpec fit_bins(std::vector<double> values, int t, const std::string& stat = "");

/// 1 if v <= B[0]; j if B[j-2] < v <= B[j-1]; top bucket above B[last].
int apply_bins(double value, const BinningSpec& spec);

/// Replace a stat's values with their bucket index (as an ordinal real) in
/// every stat line and flag it in the schema.
void fuzzify_stat(std::vector<GameRecord>& games, StatSchema& schema, int stat_index,
                  const BinningSpec& spec);

/// Retrain and rank for each candidate bucket count; the best-aligned count
/// wins, ties to the smaller one.
int select_bin_count(const std::vector<GameRecord>& games, const StatSchema& schema,
                     int max_players, const std::string& stat,
                     const std::vector<int>& t_candidates, const GroundTruth& truth,
                     AlignMetric metric, const TrainConfig& train_cfg,
                     SlotPolicy policy = SlotPolicy::MinutesThenId);

/// Bucket counts reported as working defaults for the NBA stats.
const std::map<std::string, int>& default_bin_presets();

std::string binning_spec_to_json(const std::vector<BinningSpec>& specs);
std::vector<BinningSpec> binning_spec_from_json(const std::string& text);

/// I(X;Y) in nats from an exact joint distribution table (rows = X values,
/// columns = Y values). 0*log(0) = 0.
double mutual_information(const std::vector<std::vector<double>>& joint);

/// Raw alignment of a ranking against truth under one metric; used by the
/// subset and bin searches.
double alignment_score(const RankingResult& ranking,
                       const std::map<std::string, std::string>& per_game_mvp,
                       const GroundTruth& truth, AlignMetric metric);

inline bool metric_higher_is_better(AlignMetric metric) { return metric != AlignMetric::Ard; }

}  // namespace mvpshap
