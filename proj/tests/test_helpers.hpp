#pragma once

#include <random>
#include <vector>

#include "mvpshap/dataset.hpp"
#include "mvpshap/model.hpp"

namespace mvpshap::testing {

// Random but structurally valid ensemble: random splits, random positive
// leaf covers, internal covers summed bottom-up so cover additivity holds.
inline Tree random_tree(std::mt19937_64& rng, int feature_count, int max_depth) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_real_distribution<double> leaf_dist(-2.0, 2.0);
    std::uniform_int_distribution<int> feature_dist(0, feature_count - 1);
    std::uniform_int_distribution<int> cover_dist(1, 50);

    Tree tree;
    // returns node index; subtree laid out preorder
    auto grow = [&](auto&& self, int depth) -> int {
        int index = static_cast<int>(tree.nodes.size());
        tree.nodes.push_back(TreeNode{});
        bool leaf = depth >= max_depth || unit(rng) < 0.25;
        if (leaf) {
            tree.nodes[static_cast<std::size_t>(index)].leaf_value = leaf_dist(rng);
            tree.nodes[static_cast<std::size_t>(index)].cover = cover_dist(rng);
            return index;
        }
        int feature = feature_dist(rng);
        double threshold = unit(rng);
        int left = self(self, depth + 1);
        int right = self(self, depth + 1);
        TreeNode& node = tree.nodes[static_cast<std::size_t>(index)];
        node.feature = feature;
        node.threshold = threshold;
        node.left = left;
        node.right = right;
        node.cover = tree.nodes[static_cast<std::size_t>(left)].cover +
                     tree.nodes[static_cast<std::size_t>(right)].cover;
        return index;
    };
    grow(grow, 0);
    return tree;
}

inline TreeEnsemble random_ensemble(std::mt19937_64& rng, int feature_count, int max_trees,
                                    int max_depth) {
    std::uniform_int_distribution<int> tree_count(1, max_trees);
    std::uniform_real_distribution<double> base_dist(-1.0, 1.0);
    TreeEnsemble model;
    model.feature_count = feature_count;
    model.base_margin = base_dist(rng);
    int n = tree_count(rng);
    for (int t = 0; t < n; ++t) model.trees.push_back(random_tree(rng, feature_count, max_depth));
    return model;
}

inline std::vector<double> random_input(std::mt19937_64& rng, int feature_count) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<double> x(static_cast<std::size_t>(feature_count));
    for (double& v : x) v = unit(rng);
    return x;
}

// Single-split tree, covers given per side.
inline Tree stump(int feature, double threshold, double left_value, double right_value,
                  double left_cover = 50, double right_cover = 50) {
    Tree tree;
    tree.nodes.push_back({feature, threshold, 1, 2, left_cover + right_cover, 0.0});
    tree.nodes.push_back({-1, 0.0, -1, -1, left_cover, left_value});
    tree.nodes.push_back({-1, 0.0, -1, -1, right_cover, right_value});
    return tree;
}

inline StatSchema simple_schema(int q, const std::string& playing_time = "") {
    StatSchema schema;
    for (int k = 0; k < q; ++k) schema.stat_names.push_back("s" + std::to_string(k + 1));
    schema.fuzzified.assign(schema.stat_names.size(), false);
    schema.playing_time_stat = playing_time;
    return schema;
}

}  // namespace mvpshap::testing
