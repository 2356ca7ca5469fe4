#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace mvpshap {

/// One node of a regression tree. feature < 0 marks a leaf. cover is the raw
/// count of training samples that reached the node; the attribution module's
/// conditional-expectation recursion depends on it.
struct TreeNode {
    int feature = -1;
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double cover = 0.0;
    double leaf_value = 0.0;

    bool is_leaf() const { return feature < 0; }
};

struct Tree {
    std::vector<TreeNode> nodes;  // index 0 is the root
};

/// Additive ensemble of regression trees on the logit scale.
/// margin(x) = base_margin + sum of routed leaf values.
struct TreeEnsemble {
    std::vector<Tree> trees;
    double base_margin = 0.0;
    int feature_count = 0;
    std::string schema_fingerprint;
};

struct TrainConfig {
    int num_trees = 50;
    int max_depth = 3;
    int min_samples_leaf = 1;
    double learning_rate = 0.1;
    double l2_leaf_reg = 1.0;
    std::uint64_t seed = 0;
};

/// Per-round training log; the binary log loss must be non-increasing.
struct TrainStats {
    std::vector<double> train_loss;
};

/// Gradient boosting on binary log loss. Exact greedy splits over sorted
/// unique feature values with midpoint thresholds; ties broken by lowest
/// feature index, then lowest threshold. Deterministic: identical inputs
/// produce byte-identical serialized models.
TreeEnsemble train(const std::vector<std::vector<double>>& X, const std::vector<int>& y,
                   const TrainConfig& config, TrainStats* stats = nullptr);

double predict_margin(const TreeEnsemble& model, const std::vector<double>& x);

/// logistic(margin), clamped to the open interval (0,1).
double predict_proba(const TreeEnsemble& model, const std::vector<double>& x);

/// Fraction of samples with (proba > 0.5) == y; a probability of exactly 0.5
/// counts as predicting class 1.
double evaluate_accuracy(const TreeEnsemble& model, const std::vector<std::vector<double>>& X,
                         const std::vector<int>& y);

/// Structural checks: child indices, cover additivity, positive covers,
/// finite values, every node reachable exactly once.
void validate_ensemble(const TreeEnsemble& model);

std::string serialize_model(const TreeEnsemble& model);
TreeEnsemble deserialize_model(const std::string& text);

struct FingerprintMismatchError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Throws FingerprintMismatchError in strict mode, otherwise returns false.
bool check_fingerprint(const TreeEnsemble& model, const std::string& expected, bool strict);

TreeEnsemble load_model(const std::string& path);
void save_model(const TreeEnsemble& model, const std::string& path);

}  // namespace mvpshap
