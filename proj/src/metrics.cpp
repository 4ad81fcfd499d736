#include "vfu/metrics.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include "vfu/common.hpp"

namespace vfu {

const char* phase_name(RunPhase phase) {
    switch (phase) {
        case RunPhase::Train: return "train";
        case RunPhase::Unlearn: return "unlearn";
        case RunPhase::PostUnlearn: return "post_unlearn";
    }
    return "?";
}

namespace {

double binary_f1(const std::vector<int>& predictions, const std::vector<int>& labels,
                 int positive) {
    std::size_t tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const bool pred_pos = predictions[i] == positive;
        const bool true_pos = labels[i] == positive;
        if (pred_pos && true_pos) ++tp;
        else if (pred_pos) ++fp;
        else if (true_pos) ++fn;
    }
    const double denom = static_cast<double>(2 * tp + fp + fn);
    return denom == 0.0 ? 0.0 : 2.0 * static_cast<double>(tp) / denom;
}

}  // namespace

double f1_score(const std::vector<int>& predictions, const std::vector<int>& labels) {
    if (predictions.empty() || predictions.size() != labels.size())
        throw ValidationError("f1_score: empty or mismatched inputs");
    int classes = 0;
    for (std::size_t i = 0; i < labels.size(); ++i)
        classes = std::max({classes, labels[i] + 1, predictions[i] + 1});
    if (classes <= 2) return binary_f1(predictions, labels, 1);
    double total = 0.0;
    for (int c = 0; c < classes; ++c) total += binary_f1(predictions, labels, c);
    return total / classes;
}

double auc_score(const std::vector<double>& positive_scores, const std::vector<int>& labels) {
    if (positive_scores.size() != labels.size() || labels.empty())
        throw ValidationError("auc_score: empty or mismatched inputs");
    std::size_t n_pos = 0, n_neg = 0;
    for (int l : labels) (l == 1 ? n_pos : n_neg)++;
    if (n_pos == 0 || n_neg == 0)
        throw ValidationError("auc_score: AUC undefined with a single class");

    // Midranks over the pooled scores.
    std::vector<std::size_t> order(labels.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return positive_scores[a] < positive_scores[b];
    });
    std::vector<double> rank(labels.size());
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j + 1 < order.size() &&
               positive_scores[order[j + 1]] == positive_scores[order[i]])
            ++j;
        const double midrank = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k) rank[order[k]] = midrank;
        i = j + 1;
    }
    double rank_sum_pos = 0.0;
    for (std::size_t k = 0; k < labels.size(); ++k)
        if (labels[k] == 1) rank_sum_pos += rank[k];
    const double u = rank_sum_pos - static_cast<double>(n_pos) * (static_cast<double>(n_pos) + 1.0) / 2.0;
    return u / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

double auc_score(const DenseMatrix& probabilities, const std::vector<int>& labels) {
    if (probabilities.rows != labels.size())
        throw ValidationError("auc_score: row count != label count");
    if (probabilities.cols <= 2) {
        std::vector<double> scores(probabilities.rows);
        const std::size_t col = probabilities.cols == 1 ? 0 : 1;
        for (std::size_t r = 0; r < probabilities.rows; ++r) scores[r] = probabilities(r, col);
        return auc_score(scores, labels);
    }
    // Macro one-vs-rest; classes absent from labels are skipped.
    double total = 0.0;
    int counted = 0;
    for (std::size_t c = 0; c < probabilities.cols; ++c) {
        std::vector<int> ovr(labels.size());
        bool has_pos = false, has_neg = false;
        for (std::size_t r = 0; r < labels.size(); ++r) {
            ovr[r] = labels[r] == static_cast<int>(c) ? 1 : 0;
            (ovr[r] ? has_pos : has_neg) = true;
        }
        if (!has_pos || !has_neg) continue;
        std::vector<double> scores(labels.size());
        for (std::size_t r = 0; r < labels.size(); ++r) scores[r] = probabilities(r, c);
        total += auc_score(scores, ovr);
        ++counted;
    }
    if (counted == 0) throw ValidationError("auc_score: AUC undefined with a single class");
    return total / counted;
}

std::vector<int> argmax_rows(const DenseMatrix& m) {
    std::vector<int> out(m.rows);
    for (std::size_t i = 0; i < m.rows; ++i) {
        std::size_t best = 0;
        for (std::size_t j = 1; j < m.cols; ++j)
            if (m(i, j) > m(i, best)) best = j;  // ties toward the lower class
        out[i] = static_cast<int>(best);
    }
    return out;
}

void write_metrics_csv(const std::string& path, const std::vector<MetricsRecord>& records) {
    std::ofstream out(path);
    if (!out) throw StorageError("write_metrics_csv: cannot open " + path);
    out << "epoch,phase,train_loss,test_loss,f1,auc,mia_accuracy\n";
    char buf[256];
    for (const auto& r : records) {
        std::snprintf(buf, sizeof(buf), "%d,%s,%.12g,%.12g,%.12g,%.12g,", r.epoch,
                      phase_name(r.phase), r.train_loss, r.test_loss, r.f1, r.auc);
        out << buf;
        if (r.mia_accuracy) {
            std::snprintf(buf, sizeof(buf), "%.12g", *r.mia_accuracy);
            out << buf;
        }
        out << "\n";
    }
    if (!out) throw StorageError("write_metrics_csv: write failed for " + path);
}

std::vector<MetricsRecord> read_metrics_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw StorageError("read_metrics_csv: cannot open " + path);
    std::string line;
    std::getline(in, line);  // header
    std::vector<MetricsRecord> records;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        MetricsRecord r;
        std::getline(ss, cell, ',');
        r.epoch = std::stoi(cell);
        std::getline(ss, cell, ',');
        if (cell == "unlearn") r.phase = RunPhase::Unlearn;
        else if (cell == "post_unlearn") r.phase = RunPhase::PostUnlearn;
        std::getline(ss, cell, ',');
        r.train_loss = std::stod(cell);
        std::getline(ss, cell, ',');
        r.test_loss = std::stod(cell);
        std::getline(ss, cell, ',');
        r.f1 = std::stod(cell);
        std::getline(ss, cell, ',');
        r.auc = std::stod(cell);
        if (std::getline(ss, cell, ',') && !cell.empty()) r.mia_accuracy = std::stod(cell);
        records.push_back(r);
    }
    return records;
}

}  // namespace vfu
