#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "vfu/data.hpp"
#include "vfu/metrics.hpp"
#include "vfu/nn.hpp"
#include "vfu/protocol.hpp"

namespace vfu {

enum class UpdateRule { Sgd, Newton };

struct VflConfig {
    std::size_t parties = 3;  // embedding providers; the highest id is also the active party
    double lr_active = 1e-2;
    double lr_passive = 1e-2;
    double alpha = 0.3;       // distillation weight
    double lambda = 1e-3;     // gradient-ascent rate
    int u_ep = 5;             // sample-unlearning epochs
    int epochs = 50;
    std::size_t batch_size = 512;
    UpdateRule update_rule = UpdateRule::Sgd;
    std::uint64_t seed = 0;
    std::size_t passive_hidden = 8;   // also the embedding width
    std::size_t active_hidden = 32;
    double newton_damping = 1e-3;
    double test_fraction = 0.2;
    bool active_owns_features = true;

    void validate() const;
};

struct PartyState {
    int party_id = 0;
    MlpModel model;  // bottom model; unused when owned_features is empty
    std::vector<std::size_t> owned_features;
    bool is_active = false;
    Dataset data;             // local feature columns, all rows
    std::vector<int> labels;  // active party only
};

struct EvalResult {
    double loss = 0.0;
    double f1 = 0.0;
    double auc = 0.0;
};

struct ActiveStepResult {
    double loss = 0.0;
    GradientSet active_grads;
    DenseMatrix concat;  // ascending party id order
    // (party id, dL/dH_k) in ascending party id order
    std::vector<std::pair<int, DenseMatrix>> gradient_slices;
};

// Concatenates embeddings by ascending party id (arrival order irrelevant),
// runs the active model, cross-entropy, and slices the input gradient back
// per party. Does not update any model.
ActiveStepResult active_batch_step(const MlpModel& active_model,
                                   std::vector<std::pair<int, DenseMatrix>> embeddings,
                                   const std::vector<int>& labels);

// One joint simulation: parties, bus, store, metrics. Owns the Alg.-1 loop.
class VflSimulation {
public:
    VflSimulation(Dataset dataset, VflConfig config,
                  std::optional<VerticalSplit> split = std::nullopt);

    // Runs `epochs` further epochs of the embedding/gradient protocol,
    // persisting every batch's concatenated embeddings before the active
    // update. Appends one MetricsRecord per epoch.
    void train(int epochs, RunPhase phase = RunPhase::Train);

    // Test-split evaluation with live recomputed embeddings (tallied as
    // evaluation traffic, not training traffic).
    EvalResult evaluate();
    // Same, without touching any counter; used inside unlearning engines.
    EvalResult evaluate_quiet() const;
    // Evaluation against explicit data (e.g. after feature removal).
    EvalResult evaluate_on(const Dataset& data, const std::vector<int>& labels) const;

    DenseMatrix test_logits() const;
    std::vector<int> test_labels() const;

    int current_epoch() const { return epoch_; }
    // Accounts unlearning epochs in the run's epoch numbering so resumed
    // training does not reuse their indices.
    void advance_epoch(int n) { epoch_ += n; }
    const VflConfig& config() const { return config_; }
    const Dataset& dataset() const { return dataset_; }
    const VerticalSplit& split() const { return split_; }
    const TrainTestSplit& row_split() const { return rows_; }

    std::vector<PartyState>& parties() { return parties_; }
    const std::vector<PartyState>& parties() const { return parties_; }
    PartyState& party(int id);
    PartyState& active_party();
    MlpModel& active_model() { return active_model_; }
    const MlpModel& active_model() const { return active_model_; }
    void set_active_model(MlpModel model) { active_model_ = std::move(model); }

    EmbeddingStore& store() { return store_; }
    const EmbeddingStore& store() const { return store_; }
    const MessageTally& tally() const { return bus_.tally(); }
    std::vector<MetricsRecord>& metrics() { return metrics_; }
    const std::vector<MetricsRecord>& metrics() const { return metrics_; }

    // Ids of parties that provide embeddings, ascending.
    std::vector<int> provider_ids() const;
    // Drops a provider from the live roster (its store slice is handled by
    // the unlearning engine).
    void drop_party(int id);

    // Concatenated embeddings of the given dataset rows under current
    // bottom models, ascending party id. No messages counted.
    DenseMatrix embed_rows(const std::vector<std::size_t>& rows) const;

private:
    VflConfig config_;
    Dataset dataset_;
    VerticalSplit split_;
    TrainTestSplit rows_;
    std::vector<PartyState> parties_;
    MlpModel active_model_;
    MessageBus bus_;
    EmbeddingStore store_;
    std::vector<MetricsRecord> metrics_;
    int epoch_ = 0;

    void run_batch(int epoch, int batch_index, const std::vector<std::size_t>& batch_rows,
                   double& loss_accum);
};

}  // namespace vfu
