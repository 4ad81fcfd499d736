#pragma once

#include <optional>
#include <string>
#include <vector>

#include "vfu/matrix.hpp"

namespace vfu {

enum class RunPhase { Train, Unlearn, PostUnlearn };

const char* phase_name(RunPhase phase);

struct MetricsRecord {
    int epoch = 0;
    RunPhase phase = RunPhase::Train;
    double train_loss = 0.0;
    double test_loss = 0.0;
    double f1 = 0.0;
    double auc = 0.0;
    std::optional<double> mia_accuracy;
};

// Binary: F1 of class 1. Multiclass: macro one-vs-rest. Zero divisions -> 0.
double f1_score(const std::vector<int>& predictions, const std::vector<int>& labels);

// Mann-Whitney AUC with midrank ties for binary scores.
double auc_score(const std::vector<double>& positive_scores, const std::vector<int>& labels);

// probabilities: n x C row-stochastic matrix. Binary uses column 1;
// multiclass macro-averages one-vs-rest.
double auc_score(const DenseMatrix& probabilities, const std::vector<int>& labels);

std::vector<int> argmax_rows(const DenseMatrix& m);

// header: epoch,phase,train_loss,test_loss,f1,auc,mia_accuracy
void write_metrics_csv(const std::string& path, const std::vector<MetricsRecord>& records);
std::vector<MetricsRecord> read_metrics_csv(const std::string& path);

}  // namespace vfu
