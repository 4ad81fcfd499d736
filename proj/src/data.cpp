#include "vfu/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "vfu/rng.hpp"

namespace vfu {

int Dataset::num_classes() const {
    int c = 0;
    for (int l : labels) c = std::max(c, l + 1);
    return c;
}

void Dataset::validate() const {
    if (sample_ids.size() != features.rows)
        throw ValidationError("Dataset: sample_ids length != feature rows");
    if (!labels.empty() && labels.size() != features.rows)
        throw ValidationError("Dataset: labels length != feature rows");
    if (!feature_names.empty() && feature_names.size() != features.cols)
        throw ValidationError("Dataset: feature_names length != feature cols");
    std::set<std::uint64_t> uniq(sample_ids.begin(), sample_ids.end());
    if (uniq.size() != sample_ids.size())
        throw ValidationError("Dataset: duplicate sample ids");
}

void VerticalSplit::validate(std::size_t d) const {
    std::vector<int> seen(d, 0);
    for (const auto& owned : assignments)
        for (std::size_t c : owned) {
            if (c >= d) throw ValidationError("VerticalSplit: feature index out of range");
            if (seen[c]++) throw ValidationError("VerticalSplit: feature " + std::to_string(c) +
                                                 " assigned twice");
        }
    for (std::size_t c = 0; c < d; ++c)
        if (!seen[c])
            throw ValidationError("VerticalSplit: feature " + std::to_string(c) + " unassigned");
}

VerticalSplit equal_split(std::size_t d, std::size_t parties) {
    if (parties == 0 || d < parties)
        throw ConfigError("equal_split: need at least one feature per party");
    VerticalSplit split;
    split.assignments.resize(parties);
    const std::size_t base = d / parties;
    const std::size_t extra = d % parties;
    std::size_t next = 0;
    for (std::size_t k = 0; k < parties; ++k) {
        const std::size_t count = base + (k < extra ? 1 : 0);
        for (std::size_t i = 0; i < count; ++i) split.assignments[k].push_back(next++);
    }
    return split;
}

void zscore_normalize(DenseMatrix& features) {
    for (std::size_t j = 0; j < features.cols; ++j) {
        double mean = 0.0;
        for (std::size_t i = 0; i < features.rows; ++i) mean += features(i, j);
        mean /= static_cast<double>(features.rows);
        double var = 0.0;
        for (std::size_t i = 0; i < features.rows; ++i) {
            const double d = features(i, j) - mean;
            var += d * d;
        }
        double sigma = std::sqrt(var / static_cast<double>(features.rows));
        if (sigma < 1e-12) sigma = 1.0;  // constant column -> zeros
        for (std::size_t i = 0; i < features.rows; ++i)
            features(i, j) = (features(i, j) - mean) / sigma;
    }
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, ',')) {
        while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
        while (!cell.empty() && cell.front() == ' ') cell.erase(cell.begin());
        cells.push_back(cell);
    }
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
}

}  // namespace

Dataset load_csv(const std::string& path, const std::string& label_column) {
    std::ifstream in(path);
    if (!in) throw ParseError("load_csv: cannot open " + path);

    std::string line;
    if (!std::getline(in, line) || line.empty())
        throw ParseError("load_csv: " + path + " is empty or missing a header row");
    const std::vector<std::string> header = split_csv_line(line);

    std::ptrdiff_t label_idx = -1;
    if (!label_column.empty()) {
        for (std::size_t i = 0; i < header.size(); ++i)
            if (header[i] == label_column) label_idx = static_cast<std::ptrdiff_t>(i);
        if (label_idx < 0)
            throw ParseError("load_csv: label column '" + label_column + "' not in header of " +
                             path);
    }

    Dataset ds;
    for (std::size_t i = 0; i < header.size(); ++i)
        if (static_cast<std::ptrdiff_t>(i) != label_idx) ds.feature_names.push_back(header[i]);

    std::vector<double> values;
    std::map<std::string, int> label_codes;  // first-appearance order via counter
    std::size_t n = 0;
    std::size_t row_number = 1;
    while (std::getline(in, line)) {
        ++row_number;
        if (line.empty() || line == "\r") continue;
        const std::vector<std::string> cells = split_csv_line(line);
        if (cells.size() != header.size())
            throw ParseError("load_csv: row " + std::to_string(row_number) + " has " +
                             std::to_string(cells.size()) + " cells, header has " +
                             std::to_string(header.size()));
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (static_cast<std::ptrdiff_t>(i) == label_idx) {
                auto it = label_codes.find(cells[i]);
                if (it == label_codes.end())
                    it = label_codes.emplace(cells[i], static_cast<int>(label_codes.size())).first;
                ds.labels.push_back(it->second);
                continue;
            }
            try {
                std::size_t consumed = 0;
                const double v = std::stod(cells[i], &consumed);
                if (consumed != cells[i].size()) throw std::invalid_argument("trailing");
                values.push_back(v);
            } catch (const std::exception&) {
                throw ParseError("load_csv: non-numeric cell '" + cells[i] + "' at row " +
                                 std::to_string(row_number) + ", column '" + header[i] + "'");
            }
        }
        ds.sample_ids.push_back(n++);
    }
    if (n == 0) throw ParseError("load_csv: " + path + " has no data rows");

    ds.features = DenseMatrix(n, ds.feature_names.size(), std::move(values));
    zscore_normalize(ds.features);
    ds.validate();
    return ds;
}

std::vector<std::uint64_t> align_samples(
    const std::vector<std::vector<std::uint64_t>>& id_lists) {
    if (id_lists.empty()) throw AlignmentError("align_samples: no parties");
    for (const auto& list : id_lists)
        if (list.empty()) throw AlignmentError("align_samples: a party has no samples");

    std::set<std::uint64_t> common(id_lists.front().begin(), id_lists.front().end());
    for (std::size_t k = 1; k < id_lists.size(); ++k) {
        const std::set<std::uint64_t> next(id_lists[k].begin(), id_lists[k].end());
        std::set<std::uint64_t> inter;
        std::set_intersection(common.begin(), common.end(), next.begin(), next.end(),
                              std::inserter(inter, inter.begin()));
        common = std::move(inter);
    }
    if (common.empty()) throw AlignmentError("align_samples: empty intersection");
    return {common.begin(), common.end()};
}

std::vector<Dataset> vertical_partition(const Dataset& dataset, const VerticalSplit& split) {
    split.validate(dataset.dim());
    std::vector<Dataset> parts;
    for (const auto& owned : split.assignments) {
        Dataset part;
        part.sample_ids = dataset.sample_ids;
        part.features = select_cols(dataset.features, owned);
        for (std::size_t c : owned)
            part.feature_names.push_back(c < dataset.feature_names.size()
                                             ? dataset.feature_names[c]
                                             : "f" + std::to_string(c));
        parts.push_back(std::move(part));
    }
    return parts;
}

BatchPlan make_batch_plan(std::size_t n, std::size_t batch_size, int epoch,
                          std::uint64_t seed) {
    if (n == 0) throw ValidationError("make_batch_plan: empty dataset");
    if (batch_size == 0) throw ConfigError("make_batch_plan: batch_size must be >= 1");

    std::vector<std::size_t> perm(n);
    for (std::size_t i = 0; i < n; ++i) perm[i] = i;
    std::mt19937_64 rng(mix_seed(seed, 0x6261746368ULL + static_cast<std::uint64_t>(epoch)));
    shuffle_deterministic(perm, rng);

    BatchPlan plan;
    plan.epoch = epoch;
    plan.seed = seed;
    for (std::size_t start = 0; start < n; start += batch_size) {
        const std::size_t end = std::min(start + batch_size, n);
        plan.batches.emplace_back(perm.begin() + static_cast<std::ptrdiff_t>(start),
                                  perm.begin() + static_cast<std::ptrdiff_t>(end));
    }
    return plan;
}

Dataset generate_synthetic(std::size_t n, std::size_t d, int classes, std::uint64_t seed) {
    if (n == 0 || d == 0 || classes < 1)
        throw ConfigError("generate_synthetic: n, d, classes must be >= 1");
    std::mt19937_64 rng(mix_seed(seed, 0x73796e7468ULL));

    Dataset ds;
    ds.features = DenseMatrix(n, d);
    for (std::size_t i = 0; i < n; ++i) {
        const int label = static_cast<int>(uniform_below(rng, static_cast<std::uint64_t>(classes)));
        ds.labels.push_back(label);
        for (std::size_t j = 0; j < d; ++j) {
            // Column j carries signal for class (j mod classes): unit-sigma
            // cluster at 3.0 for that class, at 0 for the others.
            const double mean =
                (static_cast<int>(j % static_cast<std::size_t>(classes)) == label) ? 3.0 : 0.0;
            ds.features(i, j) = mean + gaussian(rng);
        }
        ds.sample_ids.push_back(i);
    }
    for (std::size_t j = 0; j < d; ++j) ds.feature_names.push_back("f" + std::to_string(j));
    zscore_normalize(ds.features);
    ds.validate();
    return ds;
}

TrainTestSplit train_test_split(std::size_t n, double test_fraction, std::uint64_t seed) {
    if (test_fraction < 0.0 || test_fraction >= 1.0)
        throw ConfigError("train_test_split: test_fraction must be in [0, 1)");
    std::vector<std::size_t> perm(n);
    for (std::size_t i = 0; i < n; ++i) perm[i] = i;
    std::mt19937_64 rng(mix_seed(seed, 0x73706c6974ULL));
    shuffle_deterministic(perm, rng);

    const std::size_t n_test = static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(n)));
    TrainTestSplit split;
    split.train.assign(perm.begin(), perm.end() - static_cast<std::ptrdiff_t>(n_test));
    split.test.assign(perm.end() - static_cast<std::ptrdiff_t>(n_test), perm.end());
    std::sort(split.train.begin(), split.train.end());
    std::sort(split.test.begin(), split.test.end());
    return split;
}

Dataset subset_rows(const Dataset& dataset, const std::vector<std::size_t>& rows) {
    Dataset out;
    out.features = select_rows(dataset.features, rows);
    out.feature_names = dataset.feature_names;
    for (std::size_t r : rows) {
        out.sample_ids.push_back(dataset.sample_ids[r]);
        if (dataset.has_labels()) out.labels.push_back(dataset.labels[r]);
    }
    return out;
}

}  // namespace vfu
