#include "mvpshap/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include <json.hpp>

namespace mvpshap {

namespace {

double logistic(double m) { return 1.0 / (1.0 + std::exp(-m)); }

double log_loss(const std::vector<double>& margins, const std::vector<int>& y) {
    double sum = 0.0;
    for (std::size_t i = 0; i < margins.size(); ++i) {
        // log(1 + e^m) - y*m, written to avoid overflow for large |m|
        double m = margins[i];
        double softplus = m > 0 ? m + std::log1p(std::exp(-m)) : std::log1p(std::exp(m));
        sum += softplus - y[i] * m;
    }
    return sum / static_cast<double>(margins.size());
}

struct SplitChoice {
    bool found = false;
    int feature = -1;
    double threshold = 0.0;
    double gain = 0.0;
};

double region_gain(double g, double h, double lambda) { return g * g / (h + lambda); }

class TreeBuilder {
public:
    TreeBuilder(const std::vector<std::vector<double>>& X, const std::vector<double>& grad,
                const std::vector<double>& hess, const TrainConfig& cfg)
        : X_(X), grad_(grad), hess_(hess), cfg_(cfg) {}

    Tree build(std::vector<int>& indices) {
        Tree tree;
        grow(tree, indices, 0, static_cast<int>(indices.size()), 0);
        return tree;
    }

private:
    // Grows the subtree for indices [begin,end) and returns its node index.
    // Children are partitioned in place, so the tree is laid out preorder.
    int grow(Tree& tree, std::vector<int>& indices, int begin, int end, int depth) {
        double sum_g = 0.0, sum_h = 0.0;
        for (int i = begin; i < end; ++i) {
            sum_g += grad_[static_cast<std::size_t>(indices[static_cast<std::size_t>(i)])];
            sum_h += hess_[static_cast<std::size_t>(indices[static_cast<std::size_t>(i)])];
        }
        int node_index = static_cast<int>(tree.nodes.size());
        tree.nodes.push_back(TreeNode{});
        TreeNode& stub = tree.nodes.back();
        stub.cover = static_cast<double>(end - begin);
        stub.leaf_value = -cfg_.learning_rate * sum_g / (sum_h + cfg_.l2_leaf_reg);

        if (depth >= cfg_.max_depth || end - begin < 2 * cfg_.min_samples_leaf) {
            return node_index;
        }
        SplitChoice split = best_split(indices, begin, end, sum_g, sum_h);
        if (!split.found) return node_index;

        int mid = static_cast<int>(std::partition(indices.begin() + begin, indices.begin() + end,
                                                  [&](int row) {
                                                      return X_[static_cast<std::size_t>(row)]
                                                                [static_cast<std::size_t>(split.feature)] <=
                                                             split.threshold;
                                                  }) -
                                   indices.begin());
        int left = grow(tree, indices, begin, mid, depth + 1);
        int right = grow(tree, indices, mid, end, depth + 1);
        TreeNode& node = tree.nodes[static_cast<std::size_t>(node_index)];
        node.feature = split.feature;
        node.threshold = split.threshold;
        node.left = left;
        node.right = right;
        node.leaf_value = 0.0;
        return node_index;
    }

    SplitChoice best_split(const std::vector<int>& indices, int begin, int end, double sum_g,
                           double sum_h) {
        const double lambda = cfg_.l2_leaf_reg;
        const double parent_gain = region_gain(sum_g, sum_h, lambda);
        const int count = end - begin;
        SplitChoice best;

        std::vector<std::pair<double, int>> column(static_cast<std::size_t>(count));
        for (int feature = 0; feature < static_cast<int>(X_[0].size()); ++feature) {
            for (int i = 0; i < count; ++i) {
                int row = indices[static_cast<std::size_t>(begin + i)];
                column[static_cast<std::size_t>(i)] = {
                    X_[static_cast<std::size_t>(row)][static_cast<std::size_t>(feature)], row};
            }
            std::sort(column.begin(), column.end(),
                      [](const auto& a, const auto& b) { return a.first < b.first; });

            double left_g = 0.0, left_h = 0.0;
            int left_n = 0;
            for (int i = 0; i + 1 < count; ++i) {
                left_g += grad_[static_cast<std::size_t>(column[static_cast<std::size_t>(i)].second)];
                left_h += hess_[static_cast<std::size_t>(column[static_cast<std::size_t>(i)].second)];
                ++left_n;
                double v = column[static_cast<std::size_t>(i)].first;
                double next = column[static_cast<std::size_t>(i + 1)].first;
                if (v == next) continue;  // split only between distinct values
                if (left_n < cfg_.min_samples_leaf || count - left_n < cfg_.min_samples_leaf) continue;
                double gain = region_gain(left_g, left_h, lambda) +
                              region_gain(sum_g - left_g, sum_h - left_h, lambda) - parent_gain;
                if (gain <= 0.0) continue;
                double threshold = v + 0.5 * (next - v);
                if (!best.found || gain > best.gain ||
                    (gain == best.gain && (feature < best.feature ||
                                           (feature == best.feature && threshold < best.threshold)))) {
                    best.found = true;
                    best.feature = feature;
                    best.threshold = threshold;
                    best.gain = gain;
                }
            }
        }
        return best;
    }

    const std::vector<std::vector<double>>& X_;
    const std::vector<double>& grad_;
    const std::vector<double>& hess_;
    const TrainConfig& cfg_;
};

int route(const Tree& tree, const std::vector<double>& x) {
    int node = 0;
    while (!tree.nodes[static_cast<std::size_t>(node)].is_leaf()) {
        const TreeNode& n = tree.nodes[static_cast<std::size_t>(node)];
        node = x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right;
    }
    return node;
}

}  // namespace

TreeEnsemble train(const std::vector<std::vector<double>>& X, const std::vector<int>& y,
                   const TrainConfig& config, TrainStats* stats) {
    if (config.num_trees < 1) throw std::invalid_argument("num_trees must be >= 1");
    if (config.max_depth < 1) throw std::invalid_argument("max_depth must be >= 1");
    if (config.min_samples_leaf < 1) throw std::invalid_argument("min_samples_leaf must be >= 1");
    if (!(config.learning_rate > 0.0 && config.learning_rate <= 1.0)) {
        throw std::invalid_argument("learning_rate must be in (0,1]");
    }
    if (config.l2_leaf_reg < 0.0) throw std::invalid_argument("l2_leaf_reg must be >= 0");
    if (X.empty()) throw std::invalid_argument("empty training set");
    if (X.size() != y.size()) throw std::invalid_argument("feature/label size mismatch");
    if (X.size() < 2) throw std::invalid_argument("need at least 2 training samples");

    const std::size_t n = X.size();
    const std::size_t m = X[0].size();
    for (const auto& row : X) {
        if (row.size() != m) throw std::invalid_argument("ragged feature matrix");
    }
    std::size_t positives = 0;
    for (int label : y) {
        if (label != 0 && label != 1) throw std::invalid_argument("labels must be 0 or 1");
        positives += static_cast<std::size_t>(label);
    }
    if (positives == 0 || positives == n) {
        throw std::runtime_error("training set contains a single class");
    }

    TreeEnsemble model;
    model.feature_count = static_cast<int>(m);
    double mean = static_cast<double>(positives) / static_cast<double>(n);
    model.base_margin = std::log(mean / (1.0 - mean));

    std::vector<double> margins(n, model.base_margin);
    std::vector<double> grad(n), hess(n);
    std::vector<int> indices(n);

    if (stats) stats->train_loss.clear();
    for (int round = 0; round < config.num_trees; ++round) {
        for (std::size_t i = 0; i < n; ++i) {
            double p = logistic(margins[i]);
            grad[i] = p - static_cast<double>(y[i]);
            hess[i] = p * (1.0 - p);
        }
        std::iota(indices.begin(), indices.end(), 0);
        TreeBuilder builder(X, grad, hess, config);
        Tree tree = builder.build(indices);
        for (std::size_t i = 0; i < n; ++i) {
            margins[i] += tree.nodes[static_cast<std::size_t>(route(tree, X[i]))].leaf_value;
        }
        model.trees.push_back(std::move(tree));
        if (stats) stats->train_loss.push_back(log_loss(margins, y));
    }
    return model;
}

double predict_margin(const TreeEnsemble& model, const std::vector<double>& x) {
    if (static_cast<int>(x.size()) != model.feature_count) {
        throw std::invalid_argument("input has " + std::to_string(x.size()) + " features, model expects " +
                                    std::to_string(model.feature_count));
    }
    double margin = model.base_margin;
    for (const auto& tree : model.trees) {
        margin += tree.nodes[static_cast<std::size_t>(route(tree, x))].leaf_value;
    }
    return margin;
}

double predict_proba(const TreeEnsemble& model, const std::vector<double>& x) {
    double p = logistic(predict_margin(model, x));
    // keep strictly inside (0,1) so callers can take logs of either side
    if (p >= 1.0) p = std::nextafter(1.0, 0.0);
    if (p <= 0.0) p = std::nextafter(0.0, 1.0);
    return p;
}

double evaluate_accuracy(const TreeEnsemble& model, const std::vector<std::vector<double>>& X,
                         const std::vector<int>& y) {
    if (X.empty()) throw std::invalid_argument("empty evaluation set");
    if (X.size() != y.size()) throw std::invalid_argument("feature/label size mismatch");
    std::size_t correct = 0;
    for (std::size_t i = 0; i < X.size(); ++i) {
        int predicted = predict_proba(model, X[i]) >= 0.5 ? 1 : 0;
        if (predicted == y[i]) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(X.size());
}

void validate_ensemble(const TreeEnsemble& model) {
    if (model.feature_count <= 0) throw std::runtime_error("model has no features");
    if (!std::isfinite(model.base_margin)) throw std::runtime_error("base_margin is not finite");
    for (std::size_t t = 0; t < model.trees.size(); ++t) {
        const auto& nodes = model.trees[t].nodes;
        auto fail = [t](const std::string& what) {
            throw std::runtime_error("tree " + std::to_string(t) + ": " + what);
        };
        if (nodes.empty()) fail("no nodes");
        std::vector<int> seen(nodes.size(), 0);
        for (std::size_t i = 0; i < nodes.size(); ++i) {
            const TreeNode& node = nodes[i];
            if (node.is_leaf()) {
                if (!std::isfinite(node.leaf_value)) fail("leaf value not finite");
                if (node.cover < 0.0) fail("negative cover");
                continue;
            }
            if (node.feature >= model.feature_count) fail("split feature out of range");
            if (!std::isfinite(node.threshold)) fail("threshold not finite");
            if (node.left < 0 || node.right < 0 || node.left >= static_cast<int>(nodes.size()) ||
                node.right >= static_cast<int>(nodes.size()) || node.left == node.right) {
                fail("bad child indices");
            }
            if (node.cover <= 0.0) fail("internal node with zero cover");
            double child_sum = nodes[static_cast<std::size_t>(node.left)].cover +
                               nodes[static_cast<std::size_t>(node.right)].cover;
            if (std::abs(node.cover - child_sum) > 1e-9 * std::max(1.0, node.cover)) {
                fail("cover is not the sum of child covers");
            }
            ++seen[static_cast<std::size_t>(node.left)];
            ++seen[static_cast<std::size_t>(node.right)];
        }
        if (seen[0] != 0) fail("root has a parent");
        for (std::size_t i = 1; i < nodes.size(); ++i) {
            if (seen[i] != 1) fail("node " + std::to_string(i) + " reachable " +
                                   std::to_string(seen[i]) + " times");
        }
    }
}

std::string serialize_model(const TreeEnsemble& model) {
    nlohmann::json j;
    j["version"] = 1;
    j["base_margin"] = model.base_margin;
    j["feature_count"] = model.feature_count;
    j["schema_fingerprint"] = model.schema_fingerprint;
    nlohmann::json trees = nlohmann::json::array();
    for (const auto& tree : model.trees) {
        nlohmann::json nodes = nlohmann::json::array();
        for (const auto& node : tree.nodes) {
            nodes.push_back({{"feature", node.feature},
                             {"threshold", node.threshold},
                             {"left", node.left},
                             {"right", node.right},
                             {"cover", node.cover},
                             {"leaf_value", node.leaf_value}});
        }
        trees.push_back({{"nodes", nodes}});
    }
    j["trees"] = trees;
    return j.dump(2) + "\n";
}

TreeEnsemble deserialize_model(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error(std::string("model parse error: ") + e.what());
    }
    if (!j.contains("version") || j["version"].get<int>() != 1) {
        throw std::runtime_error("unsupported model version");
    }
    TreeEnsemble model;
    model.base_margin = j.at("base_margin").get<double>();
    model.feature_count = j.at("feature_count").get<int>();
    model.schema_fingerprint = j.value("schema_fingerprint", "");
    for (const auto& tj : j.at("trees")) {
        Tree tree;
        for (const auto& nj : tj.at("nodes")) {
            TreeNode node;
            node.feature = nj.at("feature").get<int>();
            node.threshold = nj.at("threshold").get<double>();
            node.left = nj.at("left").get<int>();
            node.right = nj.at("right").get<int>();
            node.cover = nj.at("cover").get<double>();
            node.leaf_value = nj.at("leaf_value").get<double>();
            tree.nodes.push_back(node);
        }
        model.trees.push_back(std::move(tree));
    }
    validate_ensemble(model);
    return model;
}

bool check_fingerprint(const TreeEnsemble& model, const std::string& expected, bool strict) {
    if (model.schema_fingerprint == expected) return true;
    if (strict) {
        throw FingerprintMismatchError("model fingerprint " + model.schema_fingerprint +
                                       " does not match schema fingerprint " + expected);
    }
    return false;
}

TreeEnsemble load_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open model file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return deserialize_model(ss.str());
}

void save_model(const TreeEnsemble& model, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write model file: " + path);
    out << serialize_model(model);
}

}  // namespace mvpshap
