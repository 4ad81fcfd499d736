#include "vfu/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "vfu/audit.hpp"
#include "vfu/rng.hpp"

namespace vfu {

namespace fs = std::filesystem;
using nlohmann::json;

ExperimentMode parse_mode(const std::string& name) {
    static const std::map<std::string, ExperimentMode> modes = {
        {"train", ExperimentMode::Train},
        {"unlearn-party", ExperimentMode::UnlearnParty},
        {"unlearn-feature", ExperimentMode::UnlearnFeature},
        {"unlearn-sample", ExperimentMode::UnlearnSample},
        {"retrain", ExperimentMode::Retrain},
        {"audit", ExperimentMode::Audit},
        {"ablation", ExperimentMode::Ablation},
        {"compare", ExperimentMode::Compare},
    };
    auto it = modes.find(name);
    if (it == modes.end()) throw ConfigError("unknown mode '" + name + "'");
    return it->second;
}

namespace {

bool is_unlearn_mode(ExperimentMode mode) {
    return mode == ExperimentMode::UnlearnParty || mode == ExperimentMode::UnlearnFeature ||
           mode == ExperimentMode::UnlearnSample || mode == ExperimentMode::Audit;
}

const char* mode_name(ExperimentMode mode) {
    switch (mode) {
        case ExperimentMode::Train: return "train";
        case ExperimentMode::UnlearnParty: return "unlearn-party";
        case ExperimentMode::UnlearnFeature: return "unlearn-feature";
        case ExperimentMode::UnlearnSample: return "unlearn-sample";
        case ExperimentMode::Retrain: return "retrain";
        case ExperimentMode::Audit: return "audit";
        case ExperimentMode::Ablation: return "ablation";
        case ExperimentMode::Compare: return "compare";
    }
    return "?";
}

}  // namespace

void ExperimentConfig::validate() const {
    if (epochs < 0) throw ConfigError("epochs: must be >= 0");
    if (is_unlearn_mode(mode) && !(unlearn_at > 0 && unlearn_at < epochs))
        throw ConfigError("unlearn_at: need 0 < unlearn_at < epochs");
    if (lr_active <= 0.0) throw ConfigError("lr_active: must be > 0");
    if (lr_passive < 0.0) throw ConfigError("lr_passive: must be >= 0");
    if (alpha < 0.0 || alpha > 1.0) throw ConfigError("alpha: must be in [0, 1]");
    if (lambda <= 0.0) throw ConfigError("lambda: must be > 0");
    if (u_ep < 1) throw ConfigError("u_ep: must be >= 1");
    if (batch_size < 1) throw ConfigError("batch_size: must be >= 1");
    if (repeats < 1) throw ConfigError("repeats: must be >= 1");
    if (parties < 2) throw ConfigError("parties: need at least 2");
    if (mode == ExperimentMode::Compare && (method_csv.empty() || benchmark_csv.empty()))
        throw ConfigError("method_csv/benchmark_csv: both required in compare mode");
    if (mode == ExperimentMode::UnlearnFeature && target_features.empty())
        throw ConfigError("target_features: required in unlearn-feature mode");
    if (mode == ExperimentMode::UnlearnSample && target_batches.empty())
        throw ConfigError("target_batches: required in unlearn-sample mode");
}

VflConfig ExperimentConfig::to_vfl_config() const {
    VflConfig cfg;
    cfg.parties = parties;
    cfg.lr_active = lr_active;
    cfg.lr_passive = lr_passive;
    cfg.alpha = alpha;
    cfg.lambda = lambda;
    cfg.u_ep = u_ep;
    cfg.epochs = epochs;
    cfg.batch_size = batch_size;
    cfg.update_rule = update_rule;
    cfg.seed = seed;
    return cfg;
}

namespace {

int parse_party_id(const std::string& value) {
    if (value.size() == 1 && value[0] >= 'A' && value[0] <= 'Z') return value[0] - 'A';
    if (value.size() == 1 && value[0] >= 'a' && value[0] <= 'z') return value[0] - 'a';
    return std::stoi(value);
}

template <typename T>
std::vector<T> parse_int_list(const std::string& value) {
    std::vector<T> out;
    std::stringstream ss(value);
    std::string cell;
    while (std::getline(ss, cell, ','))
        if (!cell.empty()) out.push_back(static_cast<T>(std::stoull(cell)));
    return out;
}

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r");
    std::size_t e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? "" : s.substr(b, e - b + 1);
}

}  // namespace

void apply_config_line(ExperimentConfig& config, const std::string& key,
                       const std::string& value) {
    try {
        if (key == "mode") config.mode = parse_mode(value);
        else if (key == "dataset") config.dataset = value;
        else if (key == "label_col") config.label_column = value;
        else if (key == "synthetic_n") config.synthetic_n = std::stoul(value);
        else if (key == "synthetic_d") config.synthetic_d = std::stoul(value);
        else if (key == "synthetic_classes") config.synthetic_classes = std::stoi(value);
        else if (key == "parties") config.parties = std::stoul(value);
        else if (key == "epochs") config.epochs = std::stoi(value);
        else if (key == "unlearn_at") config.unlearn_at = std::stoi(value);
        else if (key == "target_party") config.target_party = parse_party_id(value);
        else if (key == "target_features")
            config.target_features = parse_int_list<std::size_t>(value);
        else if (key == "target_batches")
            config.target_batches = parse_int_list<std::uint32_t>(value);
        else if (key == "alpha") config.alpha = std::stod(value);
        else if (key == "lambda") config.lambda = std::stod(value);
        else if (key == "u_ep") config.u_ep = std::stoi(value);
        else if (key == "lr_active") config.lr_active = std::stod(value);
        else if (key == "lr_passive") config.lr_passive = std::stod(value);
        else if (key == "batch_size") config.batch_size = std::stoul(value);
        else if (key == "seed") config.seed = std::stoull(value);
        else if (key == "update_rule") {
            if (value == "sgd") config.update_rule = UpdateRule::Sgd;
            else if (value == "newton") config.update_rule = UpdateRule::Newton;
            else throw ConfigError("update_rule: expected sgd or newton, got '" + value + "'");
        } else if (key == "repeats") config.repeats = std::stoi(value);
        else if (key == "out") config.output_dir = value;
        else if (key == "method_csv") config.method_csv = value;
        else if (key == "benchmark_csv") config.benchmark_csv = value;
        else if (key == "tolerance") config.tolerance = std::stod(value);
        else throw ConfigError("unknown config key '" + key + "'");
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception&) {
        throw ConfigError(key + ": cannot parse value '" + value + "'");
    }
}

ExperimentConfig load_config_file(const std::string& path, ExperimentConfig base) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError(path + ":" + std::to_string(line_no) + ": expected key = value");
        apply_config_line(base, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
    return base;
}

namespace {

Dataset load_experiment_dataset(const ExperimentConfig& cfg, std::uint64_t seed) {
    if (cfg.dataset == "synthetic")
        return generate_synthetic(cfg.synthetic_n, cfg.synthetic_d, cfg.synthetic_classes, seed);
    return load_csv(cfg.dataset, cfg.label_column);
}

std::vector<MetricsRecord> merged_metrics(const VflSimulation& sim,
                                          const UnlearningReport* report) {
    std::vector<MetricsRecord> records = sim.metrics();
    if (report)
        records.insert(records.end(), report->epochs.begin(), report->epochs.end());
    std::stable_sort(records.begin(), records.end(),
                     [](const MetricsRecord& a, const MetricsRecord& b) {
                         return a.epoch < b.epoch;
                     });
    return records;
}

json report_to_json(const UnlearningReport& report) {
    json j;
    j["messages_during_unlearn"] = report.messages_during_unlearn;
    j["wall_time_seconds"] = report.wall_time_seconds;
    j["unlearn_epochs_run"] = report.epochs.size();
    if (!report.student_teacher_kl.empty())
        j["terminal_student_teacher_kl"] = report.student_teacher_kl.back();
    if (report.pre_target_loss != 0.0 || report.post_target_loss != 0.0) {
        j["pre_target_loss"] = report.pre_target_loss;
        j["post_target_loss"] = report.post_target_loss;
    }
    return j;
}

struct SingleRunResult {
    std::vector<MetricsRecord> method;
    std::vector<MetricsRecord> benchmark;
};

SingleRunResult run_single(const ExperimentConfig& cfg, std::uint64_t seed,
                           const std::string& suffix) {
    const fs::path out_dir(cfg.output_dir);
    const Dataset dataset = load_experiment_dataset(cfg, seed);
    VflConfig vcfg = cfg.to_vfl_config();
    vcfg.seed = seed;

    VflSimulation sim(dataset, vcfg);
    const VerticalSplit split = sim.split();

    json summary;
    summary["mode"] = mode_name(cfg.mode);
    summary["seed"] = seed;

    SingleRunResult result;
    UnlearningReport report;
    bool have_report = false;
    bool have_benchmark = false;

    auto write_benchmark = [&](const UnlearnRequest& request) {
        VflSimulation bench = retrain_benchmark(dataset, vcfg, split, request);
        result.benchmark = bench.metrics();
        write_metrics_csv((out_dir / ("benchmark" + suffix + ".csv")).string(),
                          result.benchmark);
        have_benchmark = true;
        return bench;
    };

    switch (cfg.mode) {
        case ExperimentMode::Train: {
            sim.train(cfg.epochs);
            break;
        }
        case ExperimentMode::UnlearnParty:
        case ExperimentMode::Audit: {
            sim.train(cfg.unlearn_at);
            const DenseMatrix pre_logits = sim.test_logits();
            report = unlearn_party_kd(sim, cfg.target_party);
            have_report = true;
            sim.advance_epoch(static_cast<int>(report.epochs.size()));
            sim.train(cfg.epochs - cfg.unlearn_at, RunPhase::PostUnlearn);

            UnlearnRequest request;
            request.kind = UnlearnRequest::Kind::Party;
            request.target_party = cfg.target_party;
            request.issued_at_epoch = cfg.unlearn_at;
            VflSimulation bench = write_benchmark(request);

            const Dataset mia_set =
                build_mia_training_set(pre_logits, bench.test_logits(), seed);
            const MlpModel mia = train_mia(mia_set, 10, cfg.lr_active, seed);
            const std::vector<int> all_present(pre_logits.rows, 1);
            summary["mia_accuracy_before"] = mia_accuracy(mia, pre_logits, all_present);
            const DenseMatrix post_logits = sim.test_logits();
            const std::vector<int> post_present(post_logits.rows, 1);
            summary["mia_accuracy_after"] = mia_accuracy(mia, post_logits, post_present);
            break;
        }
        case ExperimentMode::UnlearnFeature: {
            sim.train(cfg.unlearn_at);
            report = unlearn_features_kd(sim, cfg.target_party, cfg.target_features);
            have_report = true;
            sim.advance_epoch(static_cast<int>(report.epochs.size()));
            sim.train(cfg.epochs - cfg.unlearn_at, RunPhase::PostUnlearn);

            UnlearnRequest request;
            request.kind = UnlearnRequest::Kind::Features;
            request.target_party = cfg.target_party;
            request.feature_indices = cfg.target_features;
            request.issued_at_epoch = cfg.unlearn_at;
            write_benchmark(request);
            break;
        }
        case ExperimentMode::UnlearnSample: {
            sim.train(cfg.unlearn_at);
            UnlearnRequest request;
            request.kind = UnlearnRequest::Kind::Samples;
            request.issued_at_epoch = cfg.unlearn_at;
            for (std::uint32_t b : cfg.target_batches)
                request.target_batches.emplace_back(
                    static_cast<std::uint32_t>(cfg.unlearn_at), b);

            // Sample ids for the benchmark, collected before the store is pruned.
            UnlearnRequest exclusion = request;
            for (const auto& [epoch, batch] : request.target_batches)
                for (std::uint64_t id : sim.store().get(epoch, batch).sample_ids)
                    exclusion.target_sample_ids.push_back(id);

            const DenseMatrix pre_logits = sim.test_logits();
            report = unlearn_samples_ga(sim, request);
            have_report = true;
            sim.advance_epoch(static_cast<int>(report.epochs.size()));
            sim.train(cfg.epochs - cfg.unlearn_at, RunPhase::PostUnlearn);

            VflSimulation bench = write_benchmark(exclusion);
            const Dataset mia_set =
                build_mia_training_set(pre_logits, bench.test_logits(), seed);
            const MlpModel mia = train_mia(mia_set, 10, cfg.lr_active, seed);
            const std::vector<int> all_present(pre_logits.rows, 1);
            summary["mia_accuracy_before"] = mia_accuracy(mia, pre_logits, all_present);
            const DenseMatrix post_logits = sim.test_logits();
            summary["mia_accuracy_after"] =
                mia_accuracy(mia, post_logits, std::vector<int>(post_logits.rows, 1));
            break;
        }
        case ExperimentMode::Retrain: {
            UnlearnRequest request;
            if (!cfg.target_features.empty()) {
                request.kind = UnlearnRequest::Kind::Features;
                request.feature_indices = cfg.target_features;
            } else {
                request.kind = UnlearnRequest::Kind::Party;
            }
            request.target_party = cfg.target_party;
            write_benchmark(request);
            break;
        }
        case ExperimentMode::Ablation: {
            sim.train(cfg.epochs);
            const AblationScore scores = feature_ablation(sim);
            std::ofstream out((out_dir / ("ablation" + suffix + ".csv")).string());
            out << "feature,score\n";
            char buf[64];
            for (std::size_t i = 0; i < scores.by_feature.size(); ++i) {
                std::snprintf(buf, sizeof(buf), "%zu,%.12g\n", i, scores.by_feature[i]);
                out << buf;
            }
            summary["most_important_feature"] = scores.most_important();
            summary["least_important_feature"] = scores.least_important();
            break;
        }
        case ExperimentMode::Compare:
            throw StateError("compare mode does not run experiments");
    }

    if (cfg.mode != ExperimentMode::Retrain) {
        result.method = merged_metrics(sim, have_report ? &report : nullptr);
        write_metrics_csv((out_dir / ("method" + suffix + ".csv")).string(), result.method);
        sim.store().save((out_dir / ("store" + suffix + ".bin")).string());

        const EvalResult final_eval = sim.evaluate_quiet();
        summary["terminal_test_loss"] = final_eval.loss;
        summary["terminal_f1"] = final_eval.f1;
        summary["terminal_auc"] = final_eval.auc;
        summary["messages_embedding_up"] = sim.tally().embedding_up;
        summary["messages_gradient_down"] = sim.tally().gradient_down;
        summary["messages_eval"] = sim.tally().eval_embedding_up;
    }
    if (have_report) summary["unlearning"] = report_to_json(report);
    if (have_benchmark && !result.benchmark.empty()) {
        summary["benchmark_terminal_f1"] = result.benchmark.back().f1;
        summary["benchmark_terminal_auc"] = result.benchmark.back().auc;
    }

    std::ofstream sum_out((out_dir / ("summary" + suffix + ".json")).string());
    sum_out << summary.dump(2) << "\n";
    return result;
}

void write_aggregate_csvs(const fs::path& out_dir, const std::string& stem,
                          const std::vector<std::vector<MetricsRecord>>& runs) {
    std::size_t len = runs.front().size();
    for (const auto& r : runs) len = std::min(len, r.size());
    if (len == 0) return;

    std::vector<MetricsRecord> mean(runs.front().begin(),
                                    runs.front().begin() + static_cast<std::ptrdiff_t>(len));
    std::vector<MetricsRecord> stddev = mean;
    const double n = static_cast<double>(runs.size());
    for (std::size_t i = 0; i < len; ++i) {
        double sums[4] = {0, 0, 0, 0}, sq[4] = {0, 0, 0, 0};
        for (const auto& run : runs) {
            const double vals[4] = {run[i].train_loss, run[i].test_loss, run[i].f1, run[i].auc};
            for (int k = 0; k < 4; ++k) {
                sums[k] += vals[k];
                sq[k] += vals[k] * vals[k];
            }
        }
        double m[4], s[4];
        for (int k = 0; k < 4; ++k) {
            m[k] = sums[k] / n;
            const double var = n > 1 ? std::max(0.0, (sq[k] - n * m[k] * m[k]) / (n - 1)) : 0.0;
            s[k] = std::sqrt(var);
        }
        mean[i].train_loss = m[0]; mean[i].test_loss = m[1]; mean[i].f1 = m[2]; mean[i].auc = m[3];
        mean[i].mia_accuracy.reset();
        stddev[i].train_loss = s[0]; stddev[i].test_loss = s[1]; stddev[i].f1 = s[2]; stddev[i].auc = s[3];
        stddev[i].mia_accuracy.reset();
    }
    write_metrics_csv((out_dir / (stem + "_mean.csv")).string(), mean);
    write_metrics_csv((out_dir / (stem + "_std.csv")).string(), stddev);
}

}  // namespace

std::vector<MetricComparison> compare_runs(const std::string& method_csv,
                                           const std::string& benchmark_csv,
                                           double tolerance) {
    const std::vector<MetricsRecord> method = read_metrics_csv(method_csv);
    const std::vector<MetricsRecord> benchmark = read_metrics_csv(benchmark_csv);
    if (method.empty() || benchmark.empty())
        throw ValidationError("compare_runs: a metrics file has no epochs");

    auto post_mean_loss = [](const std::vector<MetricsRecord>& records) {
        double sum = 0.0;
        std::size_t count = 0;
        for (const auto& r : records)
            if (r.phase == RunPhase::PostUnlearn) {
                sum += r.test_loss;
                ++count;
            }
        if (count == 0) {  // plain training run: fall back to all epochs
            for (const auto& r : records) sum += r.test_loss;
            count = records.size();
        }
        return sum / static_cast<double>(count);
    };

    std::vector<MetricComparison> out;
    auto add = [&](const std::string& name, double a, double b) {
        out.push_back({name, a, b, std::abs(a - b) <= tolerance});
    };
    add("terminal_f1", method.back().f1, benchmark.back().f1);
    add("terminal_auc", method.back().auc, benchmark.back().auc);
    add("post_unlearn_test_loss", post_mean_loss(method), post_mean_loss(benchmark));
    return out;
}

int run_experiment(const ExperimentConfig& config) {
    try {
        config.validate();
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    }
    try {
        if (config.mode == ExperimentMode::Compare) {
            const auto report =
                compare_runs(config.method_csv, config.benchmark_csv, config.tolerance);
            bool all_pass = true;
            for (const auto& cmp : report) {
                std::cout << cmp.metric << ": method=" << cmp.method_value
                          << " benchmark=" << cmp.benchmark_value << " -> "
                          << (cmp.pass ? "pass" : "FAIL") << "\n";
                all_pass = all_pass && cmp.pass;
            }
            return all_pass ? 0 : 2;
        }

        fs::create_directories(config.output_dir);
        std::vector<std::vector<MetricsRecord>> method_runs, benchmark_runs;
        for (int r = 0; r < config.repeats; ++r) {
            const std::string suffix =
                config.repeats > 1 ? "_seed" + std::to_string(r) : "";
            SingleRunResult res = run_single(config, config.seed + static_cast<std::uint64_t>(r),
                                             suffix);
            if (!res.method.empty()) method_runs.push_back(std::move(res.method));
            if (!res.benchmark.empty()) benchmark_runs.push_back(std::move(res.benchmark));
        }
        if (config.repeats > 1 && !method_runs.empty())
            write_aggregate_csvs(config.output_dir, "method", method_runs);
        if (config.repeats > 1 && !benchmark_runs.empty())
            write_aggregate_csvs(config.output_dir, "benchmark", benchmark_runs);
        return 0;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}

}  // namespace vfu
