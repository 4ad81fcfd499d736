#pragma once

#include <cstdint>
#include <vector>

#include "vfu/data.hpp"
#include "vfu/nn.hpp"
#include "vfu/runtime.hpp"

namespace vfu {

// Softmaxed rows of logits_present labeled 1, of logits_absent labeled 0,
// shuffled with the seed. The attack never sees anything but model outputs.
Dataset build_mia_training_set(const DenseMatrix& logits_present,
                               const DenseMatrix& logits_absent, std::uint64_t seed);

// Binary attack model: single hidden layer of 32 neurons over output
// probabilities, cross-entropy + SGD, 10 epochs by default.
MlpModel train_mia(const Dataset& labeled, int epochs = 10, double lr = 1e-2,
                   std::uint64_t seed = 0);

// Fraction of probe rows whose predicted membership matches
// true_membership. Probes are raw logits; they are softmaxed here.
double mia_accuracy(const MlpModel& mia, const DenseMatrix& logits,
                    const std::vector<int>& true_membership);

// Importance of every global feature as the test-metric drop when the
// feature column is zeroed (zero = mean after z-scoring).
struct AblationScore {
    std::vector<double> by_feature;  // indexed by global feature index

    std::size_t most_important() const;
    std::size_t least_important() const;
};

enum class AblationMetric { F1, Auc };

AblationScore feature_ablation(const VflSimulation& sim,
                               AblationMetric metric = AblationMetric::F1);

}  // namespace vfu
