#include "mvpshap/causal.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>
#include <stdexcept>

#include "mvpshap/csv.hpp"
#include "mvpshap/mvp.hpp"
#include <json.hpp>

namespace mvpshap {

ImportanceReport feature_importance(const std::vector<AttributionVector>& attributions,
                                    const StatSchema& schema, int max_players) {
    if (attributions.empty()) throw std::invalid_argument("no attributions");
    const std::size_t q = schema.size();
    const std::size_t p = static_cast<std::size_t>(max_players);
    const std::size_t expected = 2 * p * q;

    ImportanceReport report;
    report.stats = schema.stat_names;
    report.mean_abs_phi.assign(q, 0.0);
    for (const auto& attr : attributions) {
        if (attr.phi.size() != expected) {
            throw std::invalid_argument("attribution vector length " + std::to_string(attr.phi.size()) +
                                        " does not match 2*p*q = " + std::to_string(expected));
        }
        for (std::size_t slot = 0; slot < 2 * p; ++slot) {
            for (std::size_t k = 0; k < q; ++k) {
                report.mean_abs_phi[k] += std::abs(attr.phi[slot * q + k]);
            }
        }
    }
    double denom = static_cast<double>(attributions.size()) * static_cast<double>(2 * p);
    for (double& v : report.mean_abs_phi) v /= denom;

    std::vector<std::size_t> order(q);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return report.mean_abs_phi[a] > report.mean_abs_phi[b];
    });
    report.rank.assign(q, 0);
    for (std::size_t i = 0; i < q; ++i) report.rank[order[i]] = static_cast<int>(i) + 1;
    return report;
}

std::vector<StatGroup> group_features(const ImportanceReport& report, const StatSchema& schema,
                                      int top_k) {
    const int n = static_cast<int>(schema.size());
    if (top_k <= 0) throw std::invalid_argument("top_k must be positive");
    if (top_k >= n) throw std::invalid_argument("top_k must be smaller than the stat count");

    std::vector<StatGroup> groups;
    std::vector<bool> taken(schema.size(), false);
    for (int wanted = 1; wanted <= top_k; ++wanted) {
        for (std::size_t k = 0; k < schema.size(); ++k) {
            if (report.rank[k] == wanted) {
                groups.push_back({schema.stat_names[k], {static_cast<int>(k)}});
                taken[k] = true;
            }
        }
    }
    StatGroup rest{"other", {}};
    for (std::size_t k = 0; k < schema.size(); ++k) {
        if (!taken[k]) rest.stat_indices.push_back(static_cast<int>(k));
    }
    if (rest.stat_indices.size() == 1) {
        rest.label = schema.stat_names[static_cast<std::size_t>(rest.stat_indices[0])];
    }
    groups.push_back(std::move(rest));
    return groups;
}

std::string align_metric_name(AlignMetric metric) {
    switch (metric) {
        case AlignMetric::Srcc: return "SRCC";
        case AlignMetric::Ard: return "ARD";
        case AlignMetric::Acc: return "ACC";
    }
    return "?";
}

AlignMetric parse_align_metric(const std::string& name) {
    if (name == "srcc" || name == "SRCC") return AlignMetric::Srcc;
    if (name == "ard" || name == "ARD") return AlignMetric::Ard;
    if (name == "acc" || name == "ACC") return AlignMetric::Acc;
    throw std::invalid_argument("unknown alignment metric: " + name);
}

StatSchema restrict_schema(const StatSchema& schema, const std::vector<int>& stat_indices) {
    StatSchema out;
    for (int idx : stat_indices) {
        out.stat_names.push_back(schema.stat_names[static_cast<std::size_t>(idx)]);
        out.fuzzified.push_back(idx < static_cast<int>(schema.fuzzified.size()) &&
                                schema.fuzzified[static_cast<std::size_t>(idx)]);
    }
    if (!schema.playing_time_stat.empty() && out.index_of(schema.playing_time_stat) >= 0) {
        out.playing_time_stat = schema.playing_time_stat;
    }
    return out;
}

std::vector<GameRecord> restrict_games(const std::vector<GameRecord>& games,
                                       const std::vector<int>& stat_indices) {
    std::vector<GameRecord> out = games;
    auto shrink = [&](PlayerStatLine& line) {
        std::vector<double> values;
        values.reserve(stat_indices.size());
        for (int idx : stat_indices) values.push_back(line.values[static_cast<std::size_t>(idx)]);
        line.values = std::move(values);
    };
    for (auto& game : out) {
        for (auto& line : game.home_roster) shrink(line);
        for (auto& line : game.away_roster) shrink(line);
    }
    return out;
}

double alignment_score(const RankingResult& ranking,
                       const std::map<std::string, std::string>& per_game_mvp,
                       const GroundTruth& truth, AlignMetric metric) {
    switch (metric) {
        case AlignMetric::Srcc: return srcc(ranking, truth);
        case AlignMetric::Ard: return ard(ranking, truth);
        case AlignMetric::Acc: return accuracy(per_game_mvp, truth);
    }
    throw std::logic_error("unreachable");
}

namespace {

// Train on every sample, rank with M3, and score against the truth. Callers
// pass games whose rosters are already in slot order (policy InputOrder), so
// dropping or binning the ordering stat cannot move players between slots.
double evaluate_candidate(const std::vector<GameRecord>& games, const StatSchema& schema,
                          int max_players, const GroundTruth& truth, AlignMetric metric,
                          const TrainConfig& train_cfg, SlotPolicy policy) {
    std::vector<PairedSample> samples = build_paired_samples(games, schema, max_players, policy);
    std::vector<std::vector<double>> X;
    std::vector<int> y;
    for (const auto& s : samples) {
        X.push_back(s.x1);
        y.push_back(s.y1);
        X.push_back(s.x2);
        y.push_back(s.y2);
    }
    TreeEnsemble model = train(X, y, train_cfg);
    model.schema_fingerprint = schema_fingerprint(schema, max_players);

    auto per_game = season_contributions(model, games, schema, max_players, policy);
    std::map<std::string, std::string> per_game_mvp;
    if (metric == AlignMetric::Acc) {
        for (std::size_t i = 0; i < games.size(); ++i) {
            per_game_mvp[games[i].game_id] = single_game_mvp(per_game[i]);
        }
    }
    RankingResult ranking = rank_m3(per_game, /*min_games=*/0);
    return alignment_score(ranking, per_game_mvp, truth, metric);
}

}  // namespace

std::vector<SubsetCandidate> subset_search(const std::vector<GameRecord>& games,
                                           const StatSchema& schema, int max_players,
                                           const std::vector<StatGroup>& groups,
                                           const GroundTruth& truth, AlignMetric metric,
                                           const TrainConfig& train_cfg, SlotPolicy policy) {
    if (groups.empty() || groups.size() > 20) {
        throw std::invalid_argument("need between 1 and 20 groups");
    }
    if (metric == AlignMetric::Acc) {
        if (truth.scope != TruthScope::PerGame || truth.game_mvp.empty()) {
            throw std::invalid_argument("ACC alignment needs per-game ground truth");
        }
    } else if (truth.scope != TruthScope::Season || truth.season_order.empty()) {
        throw std::invalid_argument("rank alignment needs a season ground truth");
    }

    // Fix the slot layout once from the full schema; candidates must compete
    // on features only, not on roster ordering side effects.
    std::vector<GameRecord> ordered = games;
    order_rosters(ordered, schema, policy);

    std::vector<SubsetCandidate> candidates;
    const std::uint32_t patterns = 1u << groups.size();
    for (std::uint32_t mask = 1; mask < patterns; ++mask) {
        SubsetCandidate candidate;
        candidate.mask = mask;
        candidate.metric = metric;
        std::vector<int> stat_indices;
        for (std::size_t g = 0; g < groups.size(); ++g) {
            if (mask & (1u << g)) {
                stat_indices.insert(stat_indices.end(), groups[g].stat_indices.begin(),
                                    groups[g].stat_indices.end());
            }
        }
        std::sort(stat_indices.begin(), stat_indices.end());  // keep schema order
        try {
            candidate.score = evaluate_candidate(restrict_games(ordered, stat_indices),
                                                 restrict_schema(schema, stat_indices), max_players,
                                                 truth, metric, train_cfg, SlotPolicy::InputOrder);
        } catch (const std::exception& e) {
            candidate.failed = true;
            candidate.error = e.what();
            candidate.score = std::numeric_limits<double>::quiet_NaN();
        }
        candidates.push_back(std::move(candidate));
    }

    const bool higher = metric_higher_is_better(metric);
    std::sort(candidates.begin(), candidates.end(),
              [higher](const SubsetCandidate& a, const SubsetCandidate& b) {
                  if (a.failed != b.failed) return !a.failed;
                  if (!a.failed && a.score != b.score) return higher ? a.score > b.score : a.score < b.score;
                  if (std::popcount(a.mask) != std::popcount(b.mask)) {
                      return std::popcount(a.mask) < std::popcount(b.mask);
                  }
                  return a.mask < b.mask;
              });
    return candidates;
}

void write_subset_report_csv(std::ostream& out, const std::vector<SubsetCandidate>& candidates,
                             const std::vector<StatGroup>& groups) {
    out << "candidate,included_groups,metric,score,rank\n";
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        const auto& c = candidates[i];
        std::string labels;
        for (std::size_t g = 0; g < groups.size(); ++g) {
            if (c.mask & (1u << g)) {
                if (!labels.empty()) labels += '|';
                labels += groups[g].label;
            }
        }
        out << c.mask << ',' << labels << ',' << align_metric_name(c.metric) << ','
            << (c.failed ? "nan" : format_double(c.score)) << ',' << (i + 1) << '\n';
    }
}

BinningSpec fit_bins(std::vector<double> values, int t, const std::string& stat) {
    if (t < 1) throw std::invalid_argument("bucket count must be >= 1");
    if (values.empty()) throw std::invalid_argument("no values to bin");
    std::sort(values.begin(), values.end());

    BinningSpec spec;
    spec.stat = stat;
    spec.bucket_count = t;
    const std::size_t n = values.size();
    for (int j = 1; j < t; ++j) {
        double prob = static_cast<double>(j) / static_cast<double>(t);
        spec.source_quantiles.push_back(prob);
        // type-7 quantile: linear interpolation of the order statistics
        double h = (static_cast<double>(n) - 1.0) * prob;
        std::size_t lo = static_cast<std::size_t>(h);
        double frac = h - static_cast<double>(lo);
        double value = values[lo];
        if (lo + 1 < n) value += frac * (values[lo + 1] - values[lo]);
        if (spec.boundaries.empty() || value > spec.boundaries.back()) {
            spec.boundaries.push_back(value);  // drop duplicates from flat stretches
        }
    }
    return spec;
}

int apply_bins(double value, const BinningSpec& spec) {
    auto it = std::lower_bound(spec.boundaries.begin(), spec.boundaries.end(), value);
    return static_cast<int>(it - spec.boundaries.begin()) + 1;
}

void fuzzify_stat(std::vector<GameRecord>& games, StatSchema& schema, int stat_index,
                  const BinningSpec& spec) {
    if (stat_index < 0 || stat_index >= static_cast<int>(schema.size())) {
        throw std::invalid_argument("stat index out of range");
    }
    for (auto& game : games) {
        for (auto* roster : {&game.home_roster, &game.away_roster}) {
            for (auto& line : *roster) {
                double& v = line.values[static_cast<std::size_t>(stat_index)];
                v = static_cast<double>(apply_bins(v, spec));
            }
        }
    }
    if (schema.fuzzified.size() != schema.size()) schema.fuzzified.assign(schema.size(), false);
    schema.fuzzified[static_cast<std::size_t>(stat_index)] = true;
}

int select_bin_count(const std::vector<GameRecord>& games, const StatSchema& schema,
                     int max_players, const std::string& stat,
                     const std::vector<int>& t_candidates, const GroundTruth& truth,
                     AlignMetric metric, const TrainConfig& train_cfg, SlotPolicy policy) {
    if (t_candidates.empty()) throw std::invalid_argument("no bucket-count candidates");
    int stat_index = schema.index_of(stat);
    if (stat_index < 0) throw std::invalid_argument("stat not in schema: " + stat);

    std::vector<double> pool;
    for (const auto& game : games) {
        for (const auto* roster : {&game.home_roster, &game.away_roster}) {
            for (const auto& line : *roster) {
                pool.push_back(line.values[static_cast<std::size_t>(stat_index)]);
            }
        }
    }

    std::vector<GameRecord> ordered = games;
    order_rosters(ordered, schema, policy);

    const bool higher = metric_higher_is_better(metric);
    bool have_best = false;
    int best_t = 0;
    double best_score = 0.0;
    for (int t : t_candidates) {
        BinningSpec spec = fit_bins(pool, t, stat);
        std::vector<GameRecord> fuzzed = ordered;
        StatSchema fuzzed_schema = schema;
        fuzzify_stat(fuzzed, fuzzed_schema, stat_index, spec);
        double score = evaluate_candidate(fuzzed, fuzzed_schema, max_players, truth, metric,
                                          train_cfg, SlotPolicy::InputOrder);
        bool better = !have_best || (higher ? score > best_score : score < best_score) ||
                      (score == best_score && t < best_t);
        if (better) {
            have_best = true;
            best_t = t;
            best_score = score;
        }
    }
    return best_t;
}

const std::map<std::string, int>& default_bin_presets() {
    static const std::map<std::string, int> presets = {{"+/-", 3}, {"DRtg", 8}};
    return presets;
}

std::string binning_spec_to_json(const std::vector<BinningSpec>& specs) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& spec : specs) {
        arr.push_back({{"stat", spec.stat},
                       {"boundaries", spec.boundaries},
                       {"t", spec.bucket_count},
                       {"source_quantiles", spec.source_quantiles}});
    }
    return arr.dump(2) + "\n";
}

std::vector<BinningSpec> binning_spec_from_json(const std::string& text) {
    nlohmann::json arr;
    try {
        arr = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error(std::string("binning spec parse error: ") + e.what());
    }
    std::vector<BinningSpec> specs;
    for (const auto& j : arr) {
        BinningSpec spec;
        spec.stat = j.at("stat").get<std::string>();
        spec.boundaries = j.at("boundaries").get<std::vector<double>>();
        spec.bucket_count = j.at("t").get<int>();
        if (j.contains("source_quantiles")) {
            spec.source_quantiles = j.at("source_quantiles").get<std::vector<double>>();
        }
        for (std::size_t i = 1; i < spec.boundaries.size(); ++i) {
            if (!(spec.boundaries[i] > spec.boundaries[i - 1])) {
                throw std::runtime_error("binning boundaries must be strictly increasing");
            }
        }
        specs.push_back(std::move(spec));
    }
    return specs;
}

double mutual_information(const std::vector<std::vector<double>>& joint) {
    if (joint.empty() || joint[0].empty()) throw std::invalid_argument("empty joint table");
    const std::size_t rows = joint.size();
    const std::size_t cols = joint[0].size();
    double total = 0.0;
    std::vector<double> px(rows, 0.0), py(cols, 0.0);
    for (std::size_t i = 0; i < rows; ++i) {
        if (joint[i].size() != cols) throw std::invalid_argument("ragged joint table");
        for (std::size_t j = 0; j < cols; ++j) {
            double p = joint[i][j];
            if (p < 0.0) throw std::invalid_argument("negative probability mass");
            total += p;
            px[i] += p;
            py[j] += p;
        }
    }
    if (std::abs(total - 1.0) > 1e-12) {
        throw std::invalid_argument("joint distribution must sum to 1");
    }
    double info = 0.0;
    for (std::size_t i = 0; i < rows; ++i) {
        for (std::size_t j = 0; j < cols; ++j) {
            double p = joint[i][j];
            if (p == 0.0) continue;
            info += p * std::log(p / (px[i] * py[j]));
        }
    }
    return info;
}

}  // namespace mvpshap
