#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "vfu/matrix.hpp"

namespace vfu {

struct Dataset {
    std::vector<std::uint64_t> sample_ids;
    DenseMatrix features;  // n x d
    std::vector<int> labels;  // empty when this copy holds no labels
    std::vector<std::string> feature_names;

    bool has_labels() const { return !labels.empty(); }
    std::size_t size() const { return features.rows; }
    std::size_t dim() const { return features.cols; }
    int num_classes() const;
    void validate() const;
};

struct VerticalSplit {
    // assignments[k] = ordered global feature indices owned by party k.
    std::vector<std::vector<std::size_t>> assignments;

    void validate(std::size_t d) const;  // must partition {0..d-1}
};

// ceil(d/K) features to the lowest-indexed parties when d % K != 0.
VerticalSplit equal_split(std::size_t d, std::size_t parties);

struct BatchPlan {
    int epoch = 0;
    std::uint64_t seed = 0;
    std::vector<std::vector<std::size_t>> batches;
};

// Z-scores every column in place; constant columns become all-zero.
void zscore_normalize(DenseMatrix& features);

// label_column empty -> no labels. Features are z-scored; labels mapped to
// 0..C-1 in first-appearance order. Sample ids are row numbers.
Dataset load_csv(const std::string& path, const std::string& label_column = "");

// Ascending intersection of all lists. Throws AlignmentError when empty.
std::vector<std::uint64_t> align_samples(
    const std::vector<std::vector<std::uint64_t>>& id_lists);

// Party k gets exactly its assigned columns, same row order, no labels.
std::vector<Dataset> vertical_partition(const Dataset& dataset, const VerticalSplit& split);

// Seeded permutation of 0..n-1 chunked into ceil(n/batch_size) batches.
// Identical plans for identical (n, batch_size, epoch, seed).
BatchPlan make_batch_plan(std::size_t n, std::size_t batch_size, int epoch,
                          std::uint64_t seed);

// Gaussian clusters, per-class means >= 3 sigma apart on the class's columns,
// then z-scored. Linearly separable by construction.
Dataset generate_synthetic(std::size_t n, std::size_t d, int classes, std::uint64_t seed);

// Seeded shuffle of 0..n-1, first (1-test_fraction) to train.
struct TrainTestSplit {
    std::vector<std::size_t> train;
    std::vector<std::size_t> test;
};
TrainTestSplit train_test_split(std::size_t n, double test_fraction, std::uint64_t seed);

Dataset subset_rows(const Dataset& dataset, const std::vector<std::size_t>& rows);

}  // namespace vfu
