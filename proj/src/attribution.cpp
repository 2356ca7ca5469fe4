#include "mvpshap/attribution.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <ostream>
#include <stdexcept>
#include <thread>

#include "mvpshap/csv.hpp"

namespace mvpshap {

namespace {

double expvalue_node(const Tree& tree, int node_index, const std::vector<double>& x,
                     const std::vector<bool>& present) {
    const TreeNode& node = tree.nodes[static_cast<std::size_t>(node_index)];
    if (node.is_leaf()) return node.leaf_value;
    if (present[static_cast<std::size_t>(node.feature)]) {
        int next = x[static_cast<std::size_t>(node.feature)] <= node.threshold ? node.left : node.right;
        return expvalue_node(tree, next, x, present);
    }
    if (node.cover <= 0.0) {
        throw std::runtime_error("zero cover at an internal node");
    }
    double left = expvalue_node(tree, node.left, x, present);
    double right = expvalue_node(tree, node.right, x, present);
    return (tree.nodes[static_cast<std::size_t>(node.left)].cover * left +
            tree.nodes[static_cast<std::size_t>(node.right)].cover * right) /
           node.cover;
}

// Expected margin contribution of one tree under the cover distribution.
double tree_expectation(const Tree& tree, int node_index) {
    const TreeNode& node = tree.nodes[static_cast<std::size_t>(node_index)];
    if (node.is_leaf()) return node.leaf_value;
    if (node.cover <= 0.0) throw std::runtime_error("zero cover at an internal node");
    return (tree.nodes[static_cast<std::size_t>(node.left)].cover * tree_expectation(tree, node.left) +
            tree.nodes[static_cast<std::size_t>(node.right)].cover * tree_expectation(tree, node.right)) /
           node.cover;
}

int tree_depth(const Tree& tree, int node_index) {
    const TreeNode& node = tree.nodes[static_cast<std::size_t>(node_index)];
    if (node.is_leaf()) return 0;
    return 1 + std::max(tree_depth(tree, node.left), tree_depth(tree, node.right));
}

// --- weighted path machinery of the per-tree Shapley recursion ---

struct PathElement {
    int feature_index = -1;
    double zero_fraction = 0.0;
    double one_fraction = 0.0;
    double pweight = 0.0;
};

void extend_path(PathElement* path, int depth, double zero_fraction, double one_fraction,
                 int feature_index) {
    path[depth] = {feature_index, zero_fraction, one_fraction, depth == 0 ? 1.0 : 0.0};
    for (int i = depth - 1; i >= 0; --i) {
        path[i + 1].pweight += one_fraction * path[i].pweight * (i + 1) / static_cast<double>(depth + 1);
        path[i].pweight = zero_fraction * path[i].pweight * (depth - i) / static_cast<double>(depth + 1);
    }
}

void unwind_path(PathElement* path, int depth, int index) {
    const double one_fraction = path[index].one_fraction;
    const double zero_fraction = path[index].zero_fraction;
    double next_one_portion = path[depth].pweight;
    for (int i = depth - 1; i >= 0; --i) {
        if (one_fraction != 0.0) {
            double tmp = path[i].pweight;
            path[i].pweight = next_one_portion * (depth + 1) / static_cast<double>((i + 1) * one_fraction);
            next_one_portion = tmp - path[i].pweight * zero_fraction * (depth - i) /
                                         static_cast<double>(depth + 1);
        } else {
            path[i].pweight = path[i].pweight * (depth + 1) /
                              static_cast<double>(zero_fraction * (depth - i));
        }
    }
    for (int i = index; i < depth; ++i) {
        path[i].feature_index = path[i + 1].feature_index;
        path[i].zero_fraction = path[i + 1].zero_fraction;
        path[i].one_fraction = path[i + 1].one_fraction;
    }
}

double unwound_path_sum(const PathElement* path, int depth, int index) {
    const double one_fraction = path[index].one_fraction;
    const double zero_fraction = path[index].zero_fraction;
    double next_one_portion = path[depth].pweight;
    double total = 0.0;
    if (one_fraction != 0.0) {
        for (int i = depth - 1; i >= 0; --i) {
            double tmp = next_one_portion / static_cast<double>((i + 1) * one_fraction);
            total += tmp;
            next_one_portion = path[i].pweight - tmp * zero_fraction * (depth - i);
        }
    } else {
        for (int i = depth - 1; i >= 0; --i) {
            total += path[i].pweight / (zero_fraction * (depth - i));
        }
    }
    return total * (depth + 1);
}

void shap_recurse(const Tree& tree, const std::vector<double>& x, std::vector<double>& phi,
                  int node_index, int depth, PathElement* parent_path, double parent_zero_fraction,
                  double parent_one_fraction, int parent_feature) {
    PathElement* path = parent_path + depth + 1;
    std::copy(parent_path, parent_path + depth + 1, path);
    extend_path(path, depth, parent_zero_fraction, parent_one_fraction, parent_feature);

    const TreeNode& node = tree.nodes[static_cast<std::size_t>(node_index)];
    if (node.is_leaf()) {
        for (int i = 1; i <= depth; ++i) {
            double w = unwound_path_sum(path, depth, i);
            const PathElement& el = path[i];
            phi[static_cast<std::size_t>(el.feature_index)] +=
                w * (el.one_fraction - el.zero_fraction) * node.leaf_value;
        }
        return;
    }

    int hot = x[static_cast<std::size_t>(node.feature)] <= node.threshold ? node.left : node.right;
    int cold = hot == node.left ? node.right : node.left;
    if (node.cover <= 0.0) throw std::runtime_error("zero cover at an internal node");
    double hot_zero_fraction = tree.nodes[static_cast<std::size_t>(hot)].cover / node.cover;
    double cold_zero_fraction = tree.nodes[static_cast<std::size_t>(cold)].cover / node.cover;
    double incoming_zero_fraction = 1.0;
    double incoming_one_fraction = 1.0;

    // If this feature already splits the path, fold the old occurrence into
    // the new one so each feature appears once.
    int path_index = 0;
    for (; path_index <= depth; ++path_index) {
        if (path[path_index].feature_index == node.feature) break;
    }
    if (path_index != depth + 1) {
        incoming_zero_fraction = path[path_index].zero_fraction;
        incoming_one_fraction = path[path_index].one_fraction;
        unwind_path(path, depth, path_index);
        depth -= 1;
    }

    shap_recurse(tree, x, phi, hot, depth + 1, path, hot_zero_fraction * incoming_zero_fraction,
                 incoming_one_fraction, node.feature);
    shap_recurse(tree, x, phi, cold, depth + 1, path, cold_zero_fraction * incoming_zero_fraction,
                 0.0, node.feature);
}

void check_input(const TreeEnsemble& model, const std::vector<double>& x) {
    if (static_cast<int>(x.size()) != model.feature_count) {
        throw std::invalid_argument("input has " + std::to_string(x.size()) +
                                    " features, model expects " + std::to_string(model.feature_count));
    }
}

double binomial(int n, int k) {
    double result = 1.0;
    if (k > n - k) k = n - k;
    for (int i = 0; i < k; ++i) {
        result *= static_cast<double>(n - i);
        result /= static_cast<double>(i + 1);
    }
    return result;
}

}  // namespace

double expvalue(const TreeEnsemble& model, const std::vector<double>& x, const CoalitionMask& mask) {
    check_input(model, x);
    if (mask.present.size() != x.size()) {
        throw std::invalid_argument("coalition mask size mismatch");
    }
    double value = model.base_margin;
    for (const auto& tree : model.trees) {
        value += expvalue_node(tree, 0, x, mask.present);
    }
    return value;
}

AttributionVector brute_force_shapley(const TreeEnsemble& model, const std::vector<double>& x,
                                      const std::string& sample_id) {
    check_input(model, x);
    const int n = model.feature_count;
    if (n > 20) {
        throw std::invalid_argument("brute-force enumeration limited to 20 features, got " +
                                    std::to_string(n));
    }
    // One expvalue per coalition, then one pass over (feature, subset) pairs.
    const std::uint32_t masks = 1u << n;
    std::vector<double> v(masks);
    CoalitionMask coalition = CoalitionMask::none(static_cast<std::size_t>(n));
    for (std::uint32_t m = 0; m < masks; ++m) {
        for (int i = 0; i < n; ++i) coalition.present[static_cast<std::size_t>(i)] = (m >> i) & 1u;
        v[m] = expvalue(model, x, coalition);
    }

    // weight(s) = s!(n-1-s)!/n! = 1/(n * C(n-1, s))
    std::vector<double> weight(static_cast<std::size_t>(n));
    for (int s = 0; s < n; ++s) {
        weight[static_cast<std::size_t>(s)] = 1.0 / (static_cast<double>(n) * binomial(n - 1, s));
    }

    AttributionVector result;
    result.sample_id = sample_id;
    result.baseline = v[0];
    result.phi.assign(static_cast<std::size_t>(n), 0.0);
    for (int i = 0; i < n; ++i) {
        const std::uint32_t bit = 1u << i;
        double phi = 0.0;
        for (std::uint32_t m = 0; m < masks; ++m) {
            if (m & bit) continue;
            int s = std::popcount(m);
            phi += weight[static_cast<std::size_t>(s)] * (v[m | bit] - v[m]);
        }
        result.phi[static_cast<std::size_t>(i)] = phi;
    }
    return result;
}

AttributionVector tree_shap(const TreeEnsemble& model, const std::vector<double>& x,
                            const std::string& sample_id) {
    check_input(model, x);
    validate_ensemble(model);

    AttributionVector result;
    result.sample_id = sample_id;
    result.baseline = model.base_margin;
    result.phi.assign(x.size(), 0.0);

    for (const auto& tree : model.trees) {
        result.baseline += tree_expectation(tree, 0);
        int maxd = tree_depth(tree, 0) + 2;
        std::vector<PathElement> storage(static_cast<std::size_t>(maxd * (maxd + 1)) / 2);
        shap_recurse(tree, x, result.phi, 0, 0, storage.data(), 1.0, 1.0, -1);
    }
    return result;
}

std::vector<AttributionVector> batch_attribute(const TreeEnsemble& model,
                                               const std::vector<std::vector<double>>& inputs,
                                               const std::vector<std::string>& sample_ids) {
    if (!sample_ids.empty() && sample_ids.size() != inputs.size()) {
        throw std::invalid_argument("sample_ids size mismatch");
    }
    validate_ensemble(model);
    std::vector<AttributionVector> results(inputs.size());

    auto id_of = [&](std::size_t i) {
        return sample_ids.empty() ? std::to_string(i) : sample_ids[i];
    };
    auto run_range = [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            try {
                results[i] = tree_shap(model, inputs[i], id_of(i));
            } catch (const std::exception& e) {
                throw std::runtime_error("attribution failed for sample " + id_of(i) + ": " + e.what());
            }
        }
    };

    std::size_t workers = std::min<std::size_t>(std::thread::hardware_concurrency(), inputs.size());
    if (workers <= 1 || inputs.size() < 16) {
        run_range(0, inputs.size());
        return results;
    }
    std::vector<std::thread> threads;
    std::vector<std::exception_ptr> errors(workers);
    std::size_t chunk = (inputs.size() + workers - 1) / workers;
    for (std::size_t w = 0; w < workers; ++w) {
        std::size_t begin = w * chunk;
        std::size_t end = std::min(begin + chunk, inputs.size());
        threads.emplace_back([&, w, begin, end]() {
            try {
                run_range(begin, end);
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    }
    for (auto& t : threads) t.join();
    for (const auto& err : errors) {
        if (err) std::rethrow_exception(err);
    }
    return results;
}

void write_attribution_csv(std::ostream& out, const std::vector<AttributionVector>& rows) {
    std::size_t n = rows.empty() ? 0 : rows.front().phi.size();
    out << "sample_id,baseline";
    for (std::size_t i = 1; i <= n; ++i) out << ",phi_" << i;
    out << '\n';
    for (const auto& row : rows) {
        out << row.sample_id << ',' << format_double(row.baseline);
        for (double phi : row.phi) out << ',' << format_double(phi);
        out << '\n';
    }
}

}  // namespace mvpshap
