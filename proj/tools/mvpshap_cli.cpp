#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "mvpshap/attribution.hpp"
#include "mvpshap/causal.hpp"
#include "mvpshap/dataset.hpp"
#include "mvpshap/eval.hpp"
#include "mvpshap/harness.hpp"
#include "mvpshap/model.hpp"
#include "mvpshap/mvp.hpp"

namespace fs = std::filesystem;
using namespace mvpshap;

namespace {

struct CommonArgs {
    std::string data;
    std::string schema;
    std::string results;
    std::string model;
    std::string truth;
    std::string out;
    int p = 0;
    std::uint64_t seed = 0;
};

struct TrainArgs {
    int trees = 200;
    int depth = 4;
    int min_leaf = 2;
    double learning_rate = 0.1;
    double l2 = 1.0;
};

TrainConfig to_config(const TrainArgs& args, std::uint64_t seed) {
    TrainConfig cfg;
    cfg.num_trees = args.trees;
    cfg.max_depth = args.depth;
    cfg.min_samples_leaf = args.min_leaf;
    cfg.learning_rate = args.learning_rate;
    cfg.l2_leaf_reg = args.l2;
    cfg.seed = seed;
    return cfg;
}

void add_train_options(CLI::App* cmd, TrainArgs& args) {
    cmd->add_option("--trees", args.trees, "boosting rounds");
    cmd->add_option("--depth", args.depth, "maximum tree depth");
    cmd->add_option("--min-leaf", args.min_leaf, "minimum samples per leaf");
    cmd->add_option("--lr", args.learning_rate, "learning rate");
    cmd->add_option("--l2", args.l2, "L2 leaf regularization");
}

std::vector<GameRecord> load_games(const CommonArgs& common, const StatSchema& schema) {
    return load_box_scores(common.data, schema, common.results);
}

void flatten(const std::vector<PairedSample>& samples, std::vector<std::vector<double>>& X,
             std::vector<int>& y) {
    X.clear();
    y.clear();
    for (const auto& s : samples) {
        X.push_back(s.x1);
        y.push_back(s.y1);
        X.push_back(s.x2);
        y.push_back(s.y2);
    }
}

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write file: " + path);
    return out;
}

void write_text(const std::string& path, const std::string& text) {
    auto out = open_out(path);
    out << text;
}

// ranking or metric tables go to --out when given, stdout otherwise
template <typename WriteFn>
void emit(const std::string& out_path, WriteFn&& write) {
    if (out_path.empty()) {
        write(std::cout);
    } else {
        auto out = open_out(out_path);
        write(out);
    }
}

TreeEnsemble train_on_games(const std::vector<GameRecord>& games, const StatSchema& schema, int p,
                            const TrainConfig& cfg) {
    auto samples = build_paired_samples(games, schema, p);
    std::vector<std::vector<double>> X;
    std::vector<int> y;
    flatten(samples, X, y);
    TreeEnsemble model = train(X, y, cfg);
    model.schema_fingerprint = schema_fingerprint(schema, p);
    return model;
}

int cmd_ingest(const CommonArgs& common) {
    StatSchema schema = StatSchema::load(common.schema);
    auto games = load_games(common, schema);
    std::size_t players = 0;
    for (const auto& game : games) players += game.home_roster.size() + game.away_roster.size();
    std::cout << "games: " << games.size() << ", players: " << players
              << ", stats: " << schema.size() << "\n";
    return 0;
}

int cmd_train(const CommonArgs& common, const TrainArgs& train_args, double ratio) {
    StatSchema schema = StatSchema::load(common.schema);
    auto games = load_games(common, schema);
    auto samples = build_paired_samples(games, schema, common.p);

    std::vector<PairedSample> train_set, test_set;
    split_train_test(samples, ratio, common.seed, train_set, test_set);

    std::vector<std::vector<double>> X, X_test;
    std::vector<int> y, y_test;
    flatten(train_set, X, y);
    flatten(test_set, X_test, y_test);

    TreeEnsemble model = train(X, y, to_config(train_args, common.seed));
    model.schema_fingerprint = schema_fingerprint(schema, common.p);
    save_model(model, common.model);

    std::cout << "held-out accuracy: " << evaluate_accuracy(model, X_test, y_test) << "\n";
    return 0;
}

int cmd_rank(const CommonArgs& common, const std::string& method_name, int min_games,
             const std::string& normalization, const std::string& dump_path) {
    StatSchema schema = StatSchema::load(common.schema);
    auto games = load_games(common, schema);
    RankMethod method = parse_rank_method(method_name);

    if (method == RankMethod::Baseline) {
        WeightSpec weights = uniform_weights(schema);
        if (normalization == "zscore") weights.normalization = Normalization::ZScore;
        std::vector<std::string> warnings;
        RankingResult ranking = baseline_rank(games, schema, weights, &warnings);
        for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
        emit(common.out, [&](std::ostream& out) { write_ranking_csv(out, ranking); });
        return 0;
    }

    TreeEnsemble model = load_model(common.model);
    check_fingerprint(model, schema_fingerprint(schema, common.p), /*strict=*/true);

    if (!dump_path.empty()) {
        std::vector<std::vector<double>> xs;
        std::vector<std::string> ids;
        for (const auto& sample : build_paired_samples(games, schema, common.p)) {
            xs.push_back(sample.x1);
            ids.push_back(sample.game_id + ":x1");
            xs.push_back(sample.x2);
            ids.push_back(sample.game_id + ":x2");
        }
        auto rows = batch_attribute(model, xs, ids);
        auto out = open_out(dump_path);
        write_attribution_csv(out, rows);
    }

    auto per_game = season_contributions(model, games, schema, common.p);
    if (method == RankMethod::Single) {
        RankingResult ranking;
        ranking.method = RankMethod::Single;
        for (std::size_t i = 0; i < games.size(); ++i) {
            std::string mvp = single_game_mvp(per_game[i]);
            for (const auto& c : per_game[i]) {
                if (c.player_id == mvp) ranking.entries.push_back({mvp, c.phi_total, 1, 1});
            }
        }
        emit(common.out, [&](std::ostream& out) { write_ranking_csv(out, ranking); });
        return 0;
    }

    RankingResult ranking = method == RankMethod::M1   ? rank_m1(per_game, min_games)
                            : method == RankMethod::M2 ? rank_m2(per_game, min_games)
                                                       : rank_m3(per_game, min_games);
    emit(common.out, [&](std::ostream& out) { write_ranking_csv(out, ranking); });
    return 0;
}

int cmd_refine_subset(const CommonArgs& common, const TrainArgs& train_args, int top_k,
                      const std::string& metric_name) {
    StatSchema schema = StatSchema::load(common.schema);
    auto games = load_games(common, schema);
    GroundTruth truth = load_ground_truth(common.truth);
    AlignMetric metric = parse_align_metric(metric_name);
    TrainConfig cfg = to_config(train_args, common.seed);

    // base model over all features drives the importance grouping
    TreeEnsemble base = train_on_games(games, schema, common.p, cfg);
    std::vector<std::vector<double>> xs;
    for (const auto& sample : build_paired_samples(games, schema, common.p)) {
        xs.push_back(sample.x1);
        xs.push_back(sample.x2);
    }
    ImportanceReport report = feature_importance(batch_attribute(base, xs), schema, common.p);
    auto groups = group_features(report, schema, top_k);
    auto candidates = subset_search(games, schema, common.p, groups, truth, metric, cfg);

    fs::create_directories(common.out);
    {
        auto out = open_out((fs::path(common.out) / "subset_report.csv").string());
        write_subset_report_csv(out, candidates, groups);
    }
    // schema restricted to the winning candidate
    std::vector<int> kept;
    for (std::size_t g = 0; g < groups.size(); ++g) {
        if (candidates.front().mask & (1u << g)) {
            kept.insert(kept.end(), groups[g].stat_indices.begin(), groups[g].stat_indices.end());
        }
    }
    std::sort(kept.begin(), kept.end());
    StatSchema refined = restrict_schema(schema, kept);
    for (std::size_t k = 0; k < schema.size(); ++k) {
        if (refined.index_of(schema.stat_names[k]) < 0) refined.removed.push_back(schema.stat_names[k]);
    }
    refined.save((fs::path(common.out) / "schema_refined.json").string());
    std::cout << "candidates: " << candidates.size() << ", best mask: " << candidates.front().mask
              << "\n";
    return 0;
}

int cmd_refine_bins(const CommonArgs& common, const std::vector<std::string>& bin_args) {
    StatSchema schema = StatSchema::load(common.schema);
    auto games = load_games(common, schema);

    std::map<std::string, int> requests;
    for (const auto& arg : bin_args) {
        if (arg == "preset") {
            for (const auto& [stat, t] : default_bin_presets()) {
                if (schema.index_of(stat) >= 0) requests[stat] = t;
            }
            continue;
        }
        auto eq = arg.rfind('=');
        if (eq == std::string::npos) {
            throw std::runtime_error("--bins expects stat=t or 'preset', got: " + arg);
        }
        requests[arg.substr(0, eq)] = std::stoi(arg.substr(eq + 1));
    }
    if (requests.empty()) throw std::runtime_error("no binning requests resolved");

    std::vector<BinningSpec> specs;
    StatSchema refined = schema;
    std::vector<int> dropped;
    for (const auto& [stat, t] : requests) {
        int idx = schema.index_of(stat);
        if (idx < 0) throw std::runtime_error("stat not in schema: " + stat);
        std::vector<double> pool;
        for (const auto& game : games) {
            for (const auto* roster : {&game.home_roster, &game.away_roster}) {
                for (const auto& line : *roster) pool.push_back(line.values[static_cast<std::size_t>(idx)]);
            }
        }
        specs.push_back(fit_bins(pool, t, stat));
        if (t == 1) {
            dropped.push_back(idx);  // a single bucket removes the variable
        } else {
            refined.fuzzified[static_cast<std::size_t>(idx)] = true;
        }
    }
    if (!dropped.empty()) {
        std::vector<int> kept;
        for (std::size_t k = 0; k < schema.size(); ++k) {
            if (std::find(dropped.begin(), dropped.end(), static_cast<int>(k)) == dropped.end()) {
                kept.push_back(static_cast<int>(k));
            }
        }
        StatSchema reduced = restrict_schema(refined, kept);
        reduced.removed = schema.removed;
        for (int idx : dropped) reduced.removed.push_back(schema.stat_names[static_cast<std::size_t>(idx)]);
        refined = std::move(reduced);
    }

    fs::create_directories(common.out);
    write_text((fs::path(common.out) / "bins.json").string(), binning_spec_to_json(specs));
    refined.save((fs::path(common.out) / "schema_refined.json").string());
    std::cout << "binned stats: " << specs.size() << ", removed: " << dropped.size() << "\n";
    return 0;
}

int cmd_evaluate(const CommonArgs& common, const TrainArgs&, const std::string& method_name,
                 const std::string& metric_name, int top_k, int min_games,
                 const std::string& normalization) {
    StatSchema schema = StatSchema::load(common.schema);
    auto games = load_games(common, schema);
    GroundTruth truth = load_ground_truth(common.truth);

    std::vector<MetricRow> rows;
    if (truth.scope == TruthScope::PerGame) {
        TreeEnsemble model = load_model(common.model);
        check_fingerprint(model, schema_fingerprint(schema, common.p), /*strict=*/true);
        auto per_game = season_contributions(model, games, schema, common.p);
        std::map<std::string, std::string> predictions;
        for (std::size_t i = 0; i < games.size(); ++i) {
            predictions[games[i].game_id] = single_game_mvp(per_game[i]);
        }
        rows.push_back({"ACC", accuracy(predictions, truth), "SINGLE", "PER_GAME"});
        emit(common.out, [&](std::ostream& out) { write_metric_csv(out, rows); });
        return 0;
    }

    RankMethod method = parse_rank_method(method_name);
    RankingResult ranking;
    if (method == RankMethod::Baseline) {
        WeightSpec weights = uniform_weights(schema);
        if (normalization == "zscore") weights.normalization = Normalization::ZScore;
        ranking = baseline_rank(games, schema, weights);
    } else if (method == RankMethod::Single) {
        throw std::runtime_error("method 'single' evaluates against PER_GAME truth only");
    } else {
        TreeEnsemble model = load_model(common.model);
        check_fingerprint(model, schema_fingerprint(schema, common.p), /*strict=*/true);
        auto per_game = season_contributions(model, games, schema, common.p);
        ranking = method == RankMethod::M1   ? rank_m1(per_game, min_games)
                  : method == RankMethod::M2 ? rank_m2(per_game, min_games)
                                             : rank_m3(per_game, min_games);
    }
    const std::string label = rank_method_name(method);
    bool all = metric_name == "all";
    if (all || metric_name == "ard") rows.push_back({"ARD", ard(ranking, truth), label, "SEASON"});
    if (all || metric_name == "srcc") rows.push_back({"SRCC", srcc(ranking, truth), label, "SEASON"});
    if (all || metric_name == "recall") {
        rows.push_back({"R@" + std::to_string(top_k), recall_at_k(ranking, truth, top_k), label,
                        "SEASON"});
    }
    if (rows.empty()) throw std::runtime_error("unknown metric: " + metric_name);
    emit(common.out, [&](std::ostream& out) { write_metric_csv(out, rows); });
    return 0;
}

int cmd_synth(const CommonArgs& common, LeagueConfig cfg) {
    cfg.seed = common.seed;
    if (common.p > 0) cfg.players_per_team = common.p;
    League league = generate_league(cfg);

    fs::create_directories(common.out);
    {
        auto out = open_out((fs::path(common.out) / "box_scores.csv").string());
        write_box_score_csv(out, league.games, league.schema);
    }
    {
        auto out = open_out((fs::path(common.out) / "skills.csv").string());
        write_skills_csv(out, league.skills);
    }
    league.schema.save((fs::path(common.out) / "schema.json").string());
    {
        // season truth: planted skill order
        std::vector<const LatentSkill*> order;
        for (const auto& s : league.skills) order.push_back(&s);
        std::sort(order.begin(), order.end(), [](const LatentSkill* a, const LatentSkill* b) {
            if (a->true_value != b->true_value) return a->true_value > b->true_value;
            return a->player_id < b->player_id;
        });
        auto out = open_out((fs::path(common.out) / "truth.csv").string());
        out << "scope,key,rank,player_id\n";
        for (std::size_t i = 0; i < order.size(); ++i) {
            out << "SEASON,synthetic," << (i + 1) << ',' << order[i]->player_id << '\n';
        }
    }
    std::cout << "games: " << league.games.size() << ", players: " << league.skills.size()
              << ", stats: " << league.schema.size() << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"MVP ranking from box scores via tree-ensemble Shapley attribution"};
    app.require_subcommand(1);

    CommonArgs common;
    TrainArgs train_args;
    double ratio = 0.9;
    std::string method = "m3";
    std::string metric = "all";
    std::string normalization = "minmax";
    std::string mode = "subset";
    std::string dump_path;
    int min_games = 0;
    int top_k = 3;
    int groups = 2;
    std::vector<std::string> bin_args;
    LeagueConfig league_cfg;

    auto add_common = [&](CLI::App* cmd, bool needs_data = true) {
        if (needs_data) {
            cmd->add_option("--data", common.data, "box-score CSV")->required();
            cmd->add_option("--schema", common.schema, "schema JSON")->required();
            cmd->add_option("--results", common.results, "results sidecar CSV");
        }
        cmd->add_option("--seed", common.seed, "random seed");
        cmd->add_option("--out", common.out, "output file or directory");
    };

    CLI::App* ingest = app.add_subcommand("ingest", "parse and validate box scores");
    add_common(ingest);

    CLI::App* train_cmd = app.add_subcommand("train", "train the win-loss model");
    add_common(train_cmd);
    train_cmd->add_option("--p", common.p, "players per team slot count")->required();
    train_cmd->add_option("--model", common.model, "model output path")->required();
    train_cmd->add_option("--ratio", ratio, "train fraction of the game split");
    train_cmd->get_option("--seed")->required();
    add_train_options(train_cmd, train_args);

    CLI::App* rank = app.add_subcommand("rank", "rank players");
    add_common(rank);
    rank->add_option("--p", common.p, "players per team slot count")->required();
    rank->add_option("--model", common.model, "trained model path");
    rank->add_option("--method", method, "single|m1|m2|m3|baseline");
    rank->add_option("--min-games", min_games, "eligibility threshold");
    rank->add_option("--normalization", normalization, "baseline normalization: minmax|zscore");
    rank->add_option("--dump-attributions", dump_path, "write per-sample attribution CSV");

    CLI::App* refine = app.add_subcommand("refine", "causal refinements");
    add_common(refine);
    refine->add_option("--mode", mode, "subset|bins")->required();
    refine->add_option("--p", common.p, "players per team slot count");
    refine->add_option("--truth", common.truth, "ground-truth CSV (subset mode)");
    refine->add_option("--metric", metric, "srcc|ard|acc");
    refine->add_option("--groups", groups, "top-k singleton groups");
    refine->add_option("--bins", bin_args, "stat=t (repeatable) or 'preset'");
    refine->get_option("--out")->required();
    add_train_options(refine, train_args);

    CLI::App* evaluate = app.add_subcommand("evaluate", "score rankings against ground truth");
    add_common(evaluate);
    evaluate->add_option("--p", common.p, "players per team slot count");
    evaluate->add_option("--model", common.model, "trained model path");
    evaluate->add_option("--truth", common.truth, "ground-truth CSV")->required();
    evaluate->add_option("--method", method, "m1|m2|m3|baseline");
    evaluate->add_option("--metric", metric, "all|ard|srcc|recall");
    evaluate->add_option("--top-k", top_k, "K for recall");
    evaluate->add_option("--min-games", min_games, "eligibility threshold");
    evaluate->add_option("--normalization", normalization, "baseline normalization");

    CLI::App* synth = app.add_subcommand("synth", "generate a synthetic league");
    add_common(synth, /*needs_data=*/false);
    synth->get_option("--seed")->required();
    synth->get_option("--out")->required();
    synth->add_option("--p", common.p, "players per team");
    synth->add_option("--teams", league_cfg.teams, "team count");
    synth->add_option("--stats", league_cfg.stats, "stat count");
    synth->add_option("--games", league_cfg.games, "game count");
    synth->add_option("--skill-scale", league_cfg.skill_scale, "skill standard deviation");
    synth->add_option("--noise-scale", league_cfg.noise_scale, "noise standard deviation");
    synth->add_option("--signal-stats", league_cfg.signal_stats, "stats that drive outcomes");
    synth->add_option("--count-stats", league_cfg.count_stats, "leading integer-valued stats");

    CLI11_PARSE(app, argc, argv);

    try {
        if (app.got_subcommand(ingest)) return cmd_ingest(common);
        if (app.got_subcommand(train_cmd)) return cmd_train(common, train_args, ratio);
        if (app.got_subcommand(rank)) {
            if (method != "baseline" && common.model.empty()) {
                throw std::runtime_error("--model is required for method " + method);
            }
            return cmd_rank(common, method, min_games, normalization, dump_path);
        }
        if (app.got_subcommand(refine)) {
            if (common.p <= 0 && mode == "subset") throw std::runtime_error("--p is required");
            if (mode == "subset") {
                if (common.truth.empty()) throw std::runtime_error("--truth is required for subset mode");
                if (metric == "all") metric = "srcc";
                return cmd_refine_subset(common, train_args, groups, metric);
            }
            if (mode == "bins") return cmd_refine_bins(common, bin_args);
            throw std::runtime_error("unknown refine mode: " + mode);
        }
        if (app.got_subcommand(evaluate)) {
            return cmd_evaluate(common, train_args, method, metric, top_k, min_games, normalization);
        }
        if (app.got_subcommand(synth)) return cmd_synth(common, league_cfg);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
