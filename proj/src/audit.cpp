#include "vfu/audit.hpp"

#include <algorithm>
#include <set>

#include "vfu/metrics.hpp"
#include "vfu/rng.hpp"

namespace vfu {

Dataset build_mia_training_set(const DenseMatrix& logits_present,
                               const DenseMatrix& logits_absent, std::uint64_t seed) {
    if (logits_present.cols != logits_absent.cols)
        throw ShapeError("build_mia_training_set: column mismatch");

    const DenseMatrix probs_present = softmax(logits_present);
    const DenseMatrix probs_absent = softmax(logits_absent);
    const std::size_t n = probs_present.rows + probs_absent.rows;

    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::mt19937_64 rng(mix_seed(seed, 0x6d6961ULL));
    shuffle_deterministic(order, rng);

    Dataset ds;
    ds.features = DenseMatrix(n, probs_present.cols);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t src = order[i];
        const DenseMatrix& m = src < probs_present.rows ? probs_present : probs_absent;
        const std::size_t row = src < probs_present.rows ? src : src - probs_present.rows;
        for (std::size_t j = 0; j < m.cols; ++j) ds.features(i, j) = m(row, j);
        ds.labels.push_back(src < probs_present.rows ? 1 : 0);
        ds.sample_ids.push_back(i);
    }
    for (std::size_t j = 0; j < probs_present.cols; ++j)
        ds.feature_names.push_back("p" + std::to_string(j));
    return ds;
}

MlpModel train_mia(const Dataset& labeled, int epochs, double lr, std::uint64_t seed) {
    const std::set<int> classes(labeled.labels.begin(), labeled.labels.end());
    if (classes.size() < 2)
        throw ValidationError("train_mia: both membership classes must be present");

    MlpModel mia = make_mlp({labeled.dim(), 32, 2}, mix_seed(seed, 0x6174746bULL));
    const std::size_t batch_size = 64;
    for (int e = 1; e <= epochs; ++e) {
        const BatchPlan plan = make_batch_plan(labeled.size(), batch_size, e,
                                               mix_seed(seed, 0x6d696131ULL));
        for (const auto& batch : plan.batches) {
            const DenseMatrix x = select_rows(labeled.features, batch);
            std::vector<int> y;
            for (std::size_t r : batch) y.push_back(labeled.labels[r]);
            ForwardCache cache;
            const LossResult ce = cross_entropy_loss(forward(mia, x, &cache), y);
            sgd_step(mia, backward(mia, cache, ce.grad), lr);
        }
    }
    return mia;
}

double mia_accuracy(const MlpModel& mia, const DenseMatrix& logits,
                    const std::vector<int>& true_membership) {
    if (logits.rows != true_membership.size())
        throw ValidationError("mia_accuracy: row/label count mismatch");
    const DenseMatrix preds = forward(mia, softmax(logits));
    std::size_t correct = 0;
    for (std::size_t i = 0; i < preds.rows; ++i) {
        const int pred = preds(i, 1) > preds(i, 0) ? 1 : 0;  // ties toward class 0
        if (pred == true_membership[i]) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(preds.rows);
}

std::size_t AblationScore::most_important() const {
    return static_cast<std::size_t>(
        std::max_element(by_feature.begin(), by_feature.end()) - by_feature.begin());
}

std::size_t AblationScore::least_important() const {
    return static_cast<std::size_t>(
        std::min_element(by_feature.begin(), by_feature.end()) - by_feature.begin());
}

AblationScore feature_ablation(const VflSimulation& sim, AblationMetric metric) {
    const EvalResult base = sim.evaluate_quiet();
    const double base_score = metric == AblationMetric::F1 ? base.f1 : base.auc;

    std::size_t total_features = 0;
    for (const auto& p : sim.parties()) total_features += p.owned_features.size();

    AblationScore scores;
    scores.by_feature.assign(total_features, 0.0);
    for (const auto& p : sim.parties()) {
        for (std::size_t local = 0; local < p.owned_features.size(); ++local) {
            VflSimulation probe = sim;  // value copy; only the one column changes
            PartyState& party = probe.party(p.party_id);
            for (std::size_t r = 0; r < party.data.features.rows; ++r)
                party.data.features(r, local) = 0.0;
            const EvalResult ablated = probe.evaluate_quiet();
            const double score = metric == AblationMetric::F1 ? ablated.f1 : ablated.auc;
            scores.by_feature[p.owned_features[local]] = base_score - score;
        }
    }
    return scores;
}

}  // namespace vfu
