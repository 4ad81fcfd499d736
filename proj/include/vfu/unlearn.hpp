#pragma once

#include <cstdint>
#include <vector>

#include "vfu/runtime.hpp"

namespace vfu {

struct UnlearnRequest {
    enum class Kind { Party, Features, Samples };
    Kind kind = Kind::Party;
    int target_party = -1;
    std::vector<std::size_t> feature_indices;  // global column indices (Features)
    std::vector<std::pair<std::uint32_t, std::uint32_t>> target_batches;  // (epoch, batch)
    std::vector<std::uint64_t> target_sample_ids;  // row-level targets (Samples)
    int issued_at_epoch = 0;
};

struct UnlearningReport {
    std::vector<MetricsRecord> epochs;       // one per unlearning epoch
    std::vector<double> student_teacher_kl;  // per epoch; the degree-of-unlearning proxy
    std::vector<double> overall_loss;        // per epoch
    std::vector<double> pred_loss;           // per epoch (party KD only)
    std::vector<double> distill_loss;        // per epoch (party KD only)
    std::vector<double> target_loss;  // per epoch (sample GA only)
    std::uint64_t messages_during_unlearn = 0;  // training-message delta, must be 0
    double wall_time_seconds = 0.0;
    double pre_target_loss = 0.0;   // sample GA only
    double post_target_loss = 0.0;  // sample GA only
};

// Knowledge-distillation unlearning of a passive party: a fresh student
// active model trained on pruned stored embeddings under
// alpha*KL(student||teacher) + (1-alpha)*cross-entropy, no messages sent.
// Afterwards the store is permanently pruned and the student replaces the
// active model. distill_epochs < 0 means "epochs elapsed so far".
UnlearningReport unlearn_party_kd(VflSimulation& sim, int target_party,
                                  int distill_epochs = -1);

// Knowledge-distillation unlearning of features inside one passive party:
// a student bottom model trained to match the teacher's embeddings (row-wise
// softmax KL) on minibatches with the target columns removed. No labels, no
// messages. feature_indices are global column indices.
UnlearningReport unlearn_features_kd(VflSimulation& sim, int party_id,
                                     const std::vector<std::size_t>& feature_indices,
                                     int distill_epochs = -1);

// Gradient-ascent unlearning of stored samples: per unlearning epoch the
// active model takes one combined update, descending on the retain rows and
// ascending (scaled by lambda) on the target rows. Target records are deleted
// from the store only after the final epoch.
UnlearningReport unlearn_samples_ga(VflSimulation& sim, const UnlearnRequest& request);

// Gold standard: fresh initialization (new seed) and a full joint training
// run with the excluded party / features / samples removed from the start.
VflSimulation retrain_benchmark(const Dataset& dataset, const VflConfig& config,
                                const VerticalSplit& split, const UnlearnRequest& exclusion);

}  // namespace vfu
