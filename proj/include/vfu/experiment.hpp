#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "vfu/runtime.hpp"
#include "vfu/unlearn.hpp"

namespace vfu {

enum class ExperimentMode {
    Train,
    UnlearnParty,
    UnlearnFeature,
    UnlearnSample,
    Retrain,
    Audit,
    Ablation,
    Compare,
};

ExperimentMode parse_mode(const std::string& name);

struct ExperimentConfig {
    ExperimentMode mode = ExperimentMode::Train;

    // dataset: a CSV path, or "synthetic" for the generator below.
    std::string dataset = "synthetic";
    std::string label_column;
    std::size_t synthetic_n = 2000;
    std::size_t synthetic_d = 12;
    int synthetic_classes = 2;

    std::size_t parties = 3;
    int epochs = 50;
    int unlearn_at = 25;
    int target_party = 0;
    std::vector<std::size_t> target_features;
    std::vector<std::uint32_t> target_batches;  // batch indices within epoch unlearn_at

    double lr_active = 1e-2;
    double lr_passive = 1e-2;
    double alpha = 0.3;
    double lambda = 1e-3;
    int u_ep = 5;
    std::size_t batch_size = 512;
    std::uint64_t seed = 0;
    UpdateRule update_rule = UpdateRule::Sgd;
    int repeats = 1;

    std::string output_dir = "out";
    // compare mode inputs
    std::string method_csv;
    std::string benchmark_csv;
    double tolerance = 0.05;

    void validate() const;
    VflConfig to_vfl_config() const;
};

// Flat `key = value` file, '#' comments. Unknown keys are an error.
ExperimentConfig load_config_file(const std::string& path, ExperimentConfig base = {});
void apply_config_line(ExperimentConfig& config, const std::string& key,
                       const std::string& value);

// Trains, unlearns at the configured epoch, resumes, benchmarks, audits, and
// writes metrics CSVs plus a summary into output_dir. Returns the process
// exit status (0 ok, 1 config error, 2 runtime error).
int run_experiment(const ExperimentConfig& config);

struct MetricComparison {
    std::string metric;
    double method_value = 0.0;
    double benchmark_value = 0.0;
    bool pass = false;
};

std::vector<MetricComparison> compare_runs(const std::string& method_csv,
                                           const std::string& benchmark_csv,
                                           double tolerance);

}  // namespace vfu
