#pragma once

#include <string>
#include <vector>

#include "mvpshap/model.hpp"

namespace mvpshap {

/// Per-feature Shapley values in margin (log-odds) units plus the expected
/// margin of the model under the cover distribution. Efficiency holds:
/// sum(phi) + baseline == margin(x) within 1e-9.
struct AttributionVector {
    std::vector<double> phi;
    double baseline = 0.0;
    std::string sample_id;
};

/// Subset of feature indices treated as present.
struct CoalitionMask {
    std::vector<bool> present;

    static CoalitionMask none(std::size_t feature_count) {
        return CoalitionMask{std::vector<bool>(feature_count, false)};
    }
    static CoalitionMask all(std::size_t feature_count) {
        return CoalitionMask{std::vector<bool>(feature_count, true)};
    }
};

/// Utility function v(S): cover-weighted conditional expectation of the
/// margin with features outside S marginalized node by node. v(all) equals
/// predict_margin(x) and v(none) equals the model baseline.
double expvalue(const TreeEnsemble& model, const std::vector<double>& x, const CoalitionMask& mask);

/// Exact Shapley values by coalition enumeration over expvalue. Only defined
/// up to 20 features; the independent oracle for tree_shap.
AttributionVector brute_force_shapley(const TreeEnsemble& model, const std::vector<double>& x,
                                      const std::string& sample_id = "");

/// Exact per-tree path-dependent Shapley values in O(T L D^2); agrees with
/// brute_force_shapley wherever the oracle is defined.
AttributionVector tree_shap(const TreeEnsemble& model, const std::vector<double>& x,
                            const std::string& sample_id = "");

/// Element-wise tree_shap; order preserved, samples fan out across threads.
std::vector<AttributionVector> batch_attribute(const TreeEnsemble& model,
                                               const std::vector<std::vector<double>>& inputs,
                                               const std::vector<std::string>& sample_ids = {});

/// CSV dump: sample_id,baseline,phi_1,...,phi_n
void write_attribution_csv(std::ostream& out, const std::vector<AttributionVector>& rows);

}  // namespace mvpshap
