#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "vfu/experiment.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Vertical federated learning simulator with communication-free unlearning"};

    std::string config_path, mode = "train", dataset, label_col, target_party;
    std::string target_features, target_batches, update_rule, out_dir, method_csv, benchmark_csv;
    int parties = -1, epochs = -1, unlearn_at = -1, u_ep = -1, repeats = -1;
    double alpha = -1, lambda = -1, lr_active = -1, lr_passive = -1, tolerance = -1;
    long long batch_size = -1, seed = -1;

    app.add_option("--config", config_path, "key = value config file; flags override it");
    app.add_option("--mode", mode,
                   "train | unlearn-party | unlearn-feature | unlearn-sample | retrain | "
                   "audit | ablation | compare");
    app.add_option("--dataset", dataset, "CSV path or 'synthetic'");
    app.add_option("--label-col", label_col, "label column name for CSV datasets");
    app.add_option("--parties", parties, "party count (highest id is the active party)");
    app.add_option("--epochs", epochs, "total training epochs");
    app.add_option("--unlearn-at", unlearn_at, "epoch after which unlearning runs");
    app.add_option("--target-party", target_party, "party to unlearn (A/B/C or index)");
    app.add_option("--target-features", target_features, "comma-separated global feature indices");
    app.add_option("--target-batches", target_batches, "comma-separated batch indices");
    app.add_option("--alpha", alpha, "distillation weight");
    app.add_option("--lambda", lambda, "gradient-ascent rate");
    app.add_option("--u-ep", u_ep, "sample-unlearning epochs");
    app.add_option("--lr-active", lr_active, "active model learning rate");
    app.add_option("--lr-passive", lr_passive, "passive model learning rate");
    app.add_option("--batch-size", batch_size, "minibatch size");
    app.add_option("--seed", seed, "run seed");
    app.add_option("--update-rule", update_rule, "sgd | newton");
    app.add_option("--repeats", repeats, "number of seeds to run");
    app.add_option("--out", out_dir, "output directory");
    app.add_option("--method-csv", method_csv, "compare mode: method metrics CSV");
    app.add_option("--benchmark-csv", benchmark_csv, "compare mode: benchmark metrics CSV");
    app.add_option("--tolerance", tolerance, "compare mode: per-metric tolerance");

    CLI11_PARSE(app, argc, argv);

    try {
        vfu::ExperimentConfig config;
        if (!config_path.empty()) config = vfu::load_config_file(config_path);

        auto set = [&](const char* key, const std::string& value) {
            vfu::apply_config_line(config, key, value);
        };
        if (app.count("--mode") || config_path.empty()) set("mode", mode);
        if (!dataset.empty()) set("dataset", dataset);
        if (!label_col.empty()) set("label_col", label_col);
        if (parties >= 0) set("parties", std::to_string(parties));
        if (epochs >= 0) set("epochs", std::to_string(epochs));
        if (unlearn_at >= 0) set("unlearn_at", std::to_string(unlearn_at));
        if (!target_party.empty()) set("target_party", target_party);
        if (!target_features.empty()) set("target_features", target_features);
        if (!target_batches.empty()) set("target_batches", target_batches);
        if (alpha >= 0) set("alpha", std::to_string(alpha));
        if (lambda >= 0) set("lambda", std::to_string(lambda));
        if (u_ep >= 0) set("u_ep", std::to_string(u_ep));
        if (lr_active >= 0) set("lr_active", std::to_string(lr_active));
        if (lr_passive >= 0) set("lr_passive", std::to_string(lr_passive));
        if (batch_size >= 0) set("batch_size", std::to_string(batch_size));
        if (seed >= 0) set("seed", std::to_string(seed));
        if (!update_rule.empty()) set("update_rule", update_rule);
        if (repeats >= 0) set("repeats", std::to_string(repeats));
        if (!out_dir.empty()) set("out", out_dir);
        if (!method_csv.empty()) set("method_csv", method_csv);
        if (!benchmark_csv.empty()) set("benchmark_csv", benchmark_csv);
        if (tolerance >= 0) set("tolerance", std::to_string(tolerance));

        return vfu::run_experiment(config);
    } catch (const vfu::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
