#include "vfu/unlearn.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <set>
#include <string>

#include "vfu/rng.hpp"

namespace vfu {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

std::map<std::uint64_t, int> label_by_sample_id(const Dataset& dataset) {
    std::map<std::uint64_t, int> out;
    for (std::size_t i = 0; i < dataset.size(); ++i)
        out[dataset.sample_ids[i]] = dataset.labels[i];
    return out;
}

std::vector<int> record_labels(const EmbeddingRecord& rec,
                               const std::map<std::uint64_t, int>& by_id) {
    std::vector<int> labels;
    labels.reserve(rec.sample_ids.size());
    for (std::uint64_t id : rec.sample_ids) labels.push_back(by_id.at(id));
    return labels;
}

// Test-split chain evaluation with one party's model/features overridden.
EvalResult evaluate_with_override(const VflSimulation& sim, int party_id,
                                  const MlpModel& override_model,
                                  const DenseMatrix& override_features) {
    const auto& rows = sim.row_split().test;
    std::vector<DenseMatrix> parts;
    for (const auto& p : sim.parties()) {
        if (p.owned_features.empty()) continue;
        if (p.party_id == party_id)
            parts.push_back(forward(override_model, select_rows(override_features, rows)));
        else
            parts.push_back(forward(p.model, select_rows(p.data.features, rows)));
    }
    const DenseMatrix logits = forward(sim.active_model(), concat_cols(parts));

    std::vector<int> labels;
    for (std::size_t r : rows) labels.push_back(sim.dataset().labels[r]);
    EvalResult res;
    res.loss = cross_entropy_loss(logits, labels).loss;
    const DenseMatrix probs = softmax(logits);
    res.f1 = f1_score(argmax_rows(probs), labels);
    const std::set<int> distinct(labels.begin(), labels.end());
    res.auc = distinct.size() < 2 ? 0.5 : auc_score(probs, labels);
    return res;
}

// Test-split evaluation of a candidate active model over the chain minus one
// provider.
EvalResult evaluate_student_chain(const VflSimulation& sim, const MlpModel& student,
                                  int excluded_party) {
    const auto& rows = sim.row_split().test;
    std::vector<DenseMatrix> parts;
    for (const auto& p : sim.parties()) {
        if (p.owned_features.empty() || p.party_id == excluded_party) continue;
        parts.push_back(forward(p.model, select_rows(p.data.features, rows)));
    }
    const DenseMatrix logits = forward(student, concat_cols(parts));

    std::vector<int> labels;
    for (std::size_t r : rows) labels.push_back(sim.dataset().labels[r]);
    EvalResult res;
    res.loss = cross_entropy_loss(logits, labels).loss;
    const DenseMatrix probs = softmax(logits);
    res.f1 = f1_score(argmax_rows(probs), labels);
    const std::set<int> distinct(labels.begin(), labels.end());
    res.auc = distinct.size() < 2 ? 0.5 : auc_score(probs, labels);
    return res;
}

std::vector<std::size_t> range_columns(ColumnRange range) {
    std::vector<std::size_t> cols;
    for (std::size_t c = range.begin; c < range.begin + range.width; ++c) cols.push_back(c);
    return cols;
}

}  // namespace

UnlearningReport unlearn_party_kd(VflSimulation& sim, int target_party, int distill_epochs) {
    const auto start = Clock::now();
    const MessageTally before = sim.tally();
    const VflConfig& cfg = sim.config();

    PartyState& target = sim.party(target_party);
    if (target.is_active) throw RequestError("cannot unlearn the active party");
    if (target.owned_features.empty())
        throw RequestError("party " + std::to_string(target_party) + " provides no embeddings");
    if (sim.store().records().empty())
        throw RequestError("no stored embeddings to unlearn from");

    const ColumnRange target_range = sim.store().column_range(target_party);
    const std::vector<std::size_t> target_cols = range_columns(target_range);
    if (distill_epochs < 0) distill_epochs = sim.current_epoch();

    const MlpModel teacher = sim.active_model();
    const std::size_t classes = teacher.output_dim();
    MlpModel student = make_mlp({sim.store().total_width() - target_range.width,
                                 cfg.active_hidden, classes},
                                mix_seed(cfg.seed, 0x73747564ULL));

    const auto labels_by_id = label_by_sample_id(sim.dataset());
    const double alpha = cfg.alpha;

    UnlearningReport report;
    double prev_overall = 0.0;
    for (int t = 1; t <= distill_epochs; ++t) {
        double sum_overall = 0.0, sum_pred = 0.0, sum_distill = 0.0;
        std::size_t steps = 0;
        for (const auto& rec : sim.store().records()) {
            const DenseMatrix teacher_logits = forward(teacher, rec.concat);
            const DenseMatrix pruned = remove_cols(rec.concat, target_cols);
            const std::vector<int> labels = record_labels(rec, labels_by_id);

            if (cfg.update_rule == UpdateRule::Sgd) {
                ForwardCache cache;
                const DenseMatrix student_logits = forward(student, pruned, &cache);
                const LossResult pred = cross_entropy_loss(student_logits, labels);
                const LossResult distill = kl_divergence(student_logits, teacher_logits);
                DenseMatrix grad = distill.grad;
                for (std::size_t i = 0; i < grad.data.size(); ++i)
                    grad.data[i] = alpha * grad.data[i] + (1.0 - alpha) * pred.grad.data[i];
                sgd_step(student, backward(student, cache, grad), cfg.lr_active);
                sum_pred += pred.loss;
                sum_distill += distill.loss;
                sum_overall += alpha * distill.loss + (1.0 - alpha) * pred.loss;
            } else {
                double last_pred = 0.0, last_distill = 0.0;
                newton_step(student,
                            [&](const MlpModel& m) {
                                ForwardCache cache;
                                const DenseMatrix logits = forward(m, pruned, &cache);
                                const LossResult pred = cross_entropy_loss(logits, labels);
                                const LossResult distill = kl_divergence(logits, teacher_logits);
                                DenseMatrix grad = distill.grad;
                                for (std::size_t i = 0; i < grad.data.size(); ++i)
                                    grad.data[i] = alpha * grad.data[i] +
                                                   (1.0 - alpha) * pred.grad.data[i];
                                last_pred = pred.loss;
                                last_distill = distill.loss;
                                const double loss =
                                    alpha * distill.loss + (1.0 - alpha) * pred.loss;
                                return std::make_pair(loss, backward(m, cache, grad));
                            },
                            cfg.newton_damping);
                sum_pred += last_pred;
                sum_distill += last_distill;
                sum_overall += alpha * last_distill + (1.0 - alpha) * last_pred;
            }
            ++steps;
        }
        const double n = static_cast<double>(steps);
        report.overall_loss.push_back(sum_overall / n);
        report.pred_loss.push_back(sum_pred / n);
        report.distill_loss.push_back(sum_distill / n);
        report.student_teacher_kl.push_back(sum_distill / n);

        const EvalResult eval = evaluate_student_chain(sim, student, target_party);
        MetricsRecord rec;
        rec.epoch = sim.current_epoch() + t;
        rec.phase = RunPhase::Unlearn;
        rec.train_loss = sum_overall / n;
        rec.test_loss = eval.loss;
        rec.f1 = eval.f1;
        rec.auc = eval.auc;
        report.epochs.push_back(rec);

        if (t >= 2 && prev_overall - sum_overall / n < 1e-5) break;
        prev_overall = sum_overall / n;
    }

    // Permanent pruning: the store drops the slice, the party leaves the
    // roster, the student becomes the active model.
    sim.store().remove_party(target_party);
    sim.drop_party(target_party);
    sim.set_active_model(std::move(student));

    report.messages_during_unlearn = sim.tally().training_total() - before.training_total();
    report.wall_time_seconds = seconds_since(start);
    return report;
}

UnlearningReport unlearn_features_kd(VflSimulation& sim, int party_id,
                                     const std::vector<std::size_t>& feature_indices,
                                     int distill_epochs) {
    const auto start = Clock::now();
    const MessageTally before = sim.tally();
    const VflConfig& cfg = sim.config();

    PartyState& party = sim.party(party_id);
    if (party.owned_features.empty())
        throw RequestError("party " + std::to_string(party_id) + " owns no features");
    if (feature_indices.empty()) throw RequestError("feature unlearning: empty target set");

    // Global indices -> positions inside the party's local feature matrix.
    std::vector<std::size_t> local_cols;
    for (std::size_t g : feature_indices) {
        auto it = std::find(party.owned_features.begin(), party.owned_features.end(), g);
        if (it == party.owned_features.end())
            throw RequestError("feature " + std::to_string(g) + " is not owned by party " +
                               std::to_string(party_id));
        local_cols.push_back(
            static_cast<std::size_t>(it - party.owned_features.begin()));
    }
    std::sort(local_cols.begin(), local_cols.end());
    if (local_cols.size() >= party.owned_features.size())
        throw RequestError(
            "feature unlearning of every owned feature is degenerate; unlearn the party instead");

    const MlpModel teacher = party.model;
    std::vector<std::size_t> dims{party.owned_features.size() - local_cols.size()};
    for (const auto& layer : teacher.layers) dims.push_back(layer.weights.cols);
    MlpModel student = make_mlp(dims, mix_seed(cfg.seed, 0x66656174ULL + party_id));
    for (std::size_t li = 0; li < student.layers.size(); ++li)
        student.layers[li].activation = teacher.layers[li].activation;

    if (distill_epochs < 0) distill_epochs = std::max(sim.current_epoch(), 1);

    const auto& train_rows = sim.row_split().train;
    UnlearningReport report;
    double prev_kl = 0.0;
    for (int t = 1; t <= distill_epochs; ++t) {
        const BatchPlan plan =
            make_batch_plan(train_rows.size(), cfg.batch_size, 100000 + t,
                            mix_seed(cfg.seed, 0x66755f00ULL + party_id));
        double sum_kl = 0.0;
        for (const auto& batch : plan.batches) {
            std::vector<std::size_t> rows;
            for (std::size_t idx : batch) rows.push_back(train_rows[idx]);
            const DenseMatrix x = select_rows(party.data.features, rows);
            const DenseMatrix x_pruned = remove_cols(x, local_cols);
            const DenseMatrix teacher_emb = forward(teacher, x);

            if (cfg.update_rule == UpdateRule::Sgd) {
                ForwardCache cache;
                const DenseMatrix student_emb = forward(student, x_pruned, &cache);
                const LossResult kl = kl_divergence(student_emb, teacher_emb);
                sgd_step(student, backward(student, cache, kl.grad), cfg.lr_passive);
                sum_kl += kl.loss;
            } else {
                double last_kl = 0.0;
                newton_step(student,
                            [&](const MlpModel& m) {
                                ForwardCache cache;
                                const DenseMatrix emb = forward(m, x_pruned, &cache);
                                const LossResult kl = kl_divergence(emb, teacher_emb);
                                last_kl = kl.loss;
                                return std::make_pair(kl.loss, backward(m, cache, kl.grad));
                            },
                            cfg.newton_damping);
                sum_kl += last_kl;
            }
        }
        const double epoch_kl = sum_kl / static_cast<double>(plan.batches.size());
        report.student_teacher_kl.push_back(epoch_kl);
        report.overall_loss.push_back(epoch_kl);

        const DenseMatrix pruned_features = remove_cols(party.data.features, local_cols);
        const EvalResult eval =
            evaluate_with_override(sim, party_id, student, pruned_features);
        MetricsRecord rec;
        rec.epoch = sim.current_epoch() + t;
        rec.phase = RunPhase::Unlearn;
        rec.train_loss = epoch_kl;
        rec.test_loss = eval.loss;
        rec.f1 = eval.f1;
        rec.auc = eval.auc;
        report.epochs.push_back(rec);

        if (t >= 2 && prev_kl - epoch_kl < 1e-5) break;
        prev_kl = epoch_kl;
    }

    // Swap the student in and shrink the party's local view.
    party.model = std::move(student);
    party.data.features = remove_cols(party.data.features, local_cols);
    for (std::size_t i = local_cols.size(); i-- > 0;) {
        party.data.feature_names.erase(party.data.feature_names.begin() +
                                       static_cast<std::ptrdiff_t>(local_cols[i]));
        party.owned_features.erase(party.owned_features.begin() +
                                   static_cast<std::ptrdiff_t>(local_cols[i]));
    }

    report.messages_during_unlearn = sim.tally().training_total() - before.training_total();
    report.wall_time_seconds = seconds_since(start);
    return report;
}

UnlearningReport unlearn_samples_ga(VflSimulation& sim, const UnlearnRequest& request) {
    const auto start = Clock::now();
    const MessageTally before = sim.tally();
    const VflConfig& cfg = sim.config();

    if (request.target_batches.empty() && request.target_sample_ids.empty())
        throw RequestError("sample unlearning: empty target set");
    for (const auto& [epoch, batch] : request.target_batches)
        if (!sim.store().contains(epoch, batch))
            throw RequestError("sample unlearning: batch (" + std::to_string(epoch) + ", " +
                               std::to_string(batch) + ") not in store");

    // The target set is a set of samples: explicit ids plus every sample in a
    // requested batch. Rows of those samples are targets in every record they
    // appear in, not only in the requested batch's record.
    std::set<std::uint64_t> target_ids(request.target_sample_ids.begin(),
                                       request.target_sample_ids.end());
    for (const auto& [epoch, batch] : request.target_batches)
        for (std::uint64_t id : sim.store().get(epoch, batch).sample_ids)
            target_ids.insert(id);
    const auto labels_by_id = label_by_sample_id(sim.dataset());

    DenseMatrix target_rows, retain_rows;
    std::vector<int> target_labels, retain_labels;
    for (const auto& rec : sim.store().records()) {
        std::vector<std::size_t> t_rows, r_rows;
        for (std::size_t r = 0; r < rec.sample_ids.size(); ++r) {
            if (target_ids.count(rec.sample_ids[r])) {
                t_rows.push_back(r);
                target_labels.push_back(labels_by_id.at(rec.sample_ids[r]));
            } else {
                r_rows.push_back(r);
                retain_labels.push_back(labels_by_id.at(rec.sample_ids[r]));
            }
        }
        if (!t_rows.empty()) target_rows = vstack(target_rows, select_rows(rec.concat, t_rows));
        if (!r_rows.empty()) retain_rows = vstack(retain_rows, select_rows(rec.concat, r_rows));
    }
    if (target_rows.rows == 0)
        throw RequestError("sample unlearning: target samples not present in the store");
    if (retain_rows.rows == 0)
        throw RequestError("sample unlearning: nothing would remain in the retain set");

    MlpModel& model = sim.active_model();
    UnlearningReport report;
    report.pre_target_loss =
        cross_entropy_loss(forward(model, target_rows), target_labels).loss;

    for (int t = 1; t <= cfg.u_ep; ++t) {
        ForwardCache retain_cache;
        const LossResult retain =
            cross_entropy_loss(forward(model, retain_rows, &retain_cache), retain_labels);
        const GradientSet retain_grads = backward(model, retain_cache, retain.grad);

        ForwardCache target_cache;
        const LossResult target =
            cross_entropy_loss(forward(model, target_rows, &target_cache), target_labels);
        const GradientSet target_grads = backward(model, target_cache, target.grad);

        // One combined update: descend on retain, ascend on target.
        sgd_step(model, retain_grads, cfg.lr_active);
        sgd_step(model, target_grads, -cfg.lambda);

        report.overall_loss.push_back(retain.loss);
        report.target_loss.push_back(target.loss);

        const EvalResult eval = sim.evaluate_quiet();
        MetricsRecord rec;
        rec.epoch = sim.current_epoch() + t;
        rec.phase = RunPhase::Unlearn;
        rec.train_loss = retain.loss;
        rec.test_loss = eval.loss;
        rec.f1 = eval.f1;
        rec.auc = eval.auc;
        report.epochs.push_back(rec);
    }

    report.post_target_loss =
        cross_entropy_loss(forward(model, target_rows), target_labels).loss;

    // Targets were needed for the ascent term; they leave the store now.
    if (!request.target_batches.empty()) sim.store().remove_batches(request.target_batches);
    sim.store().remove_samples({target_ids.begin(), target_ids.end()});

    report.messages_during_unlearn = sim.tally().training_total() - before.training_total();
    report.wall_time_seconds = seconds_since(start);
    return report;
}

namespace {

// New column index after dropping `dropped` (sorted ascending).
std::size_t remap_column(std::size_t col, const std::vector<std::size_t>& dropped) {
    std::size_t shift = 0;
    for (std::size_t d : dropped) {
        if (d == col) throw StateError("remap_column: column was dropped");
        if (d < col) ++shift;
    }
    return col - shift;
}

}  // namespace

VflSimulation retrain_benchmark(const Dataset& dataset, const VflConfig& config,
                                const VerticalSplit& split, const UnlearnRequest& exclusion) {
    Dataset reduced = dataset;
    VerticalSplit new_split = split;
    VflConfig new_config = config;
    new_config.seed = mix_seed(config.seed, 0x7265747261696eULL);

    switch (exclusion.kind) {
        case UnlearnRequest::Kind::Party: {
            const std::size_t k = static_cast<std::size_t>(exclusion.target_party);
            if (k >= split.assignments.size())
                throw RequestError("retrain_benchmark: unknown party " +
                                   std::to_string(exclusion.target_party));
            std::vector<std::size_t> dropped = split.assignments[k];
            std::sort(dropped.begin(), dropped.end());
            reduced.features = remove_cols(reduced.features, dropped);
            reduced.feature_names.clear();

            new_split.assignments.clear();
            for (std::size_t p = 0; p < split.assignments.size(); ++p) {
                if (p == k) continue;
                std::vector<std::size_t> remapped;
                for (std::size_t c : split.assignments[p])
                    remapped.push_back(remap_column(c, dropped));
                new_split.assignments.push_back(std::move(remapped));
            }
            new_config.parties -= 1;
            break;
        }
        case UnlearnRequest::Kind::Features: {
            std::vector<std::size_t> dropped = exclusion.feature_indices;
            std::sort(dropped.begin(), dropped.end());
            reduced.features = remove_cols(reduced.features, dropped);
            reduced.feature_names.clear();

            new_split.assignments.clear();
            for (const auto& owned : split.assignments) {
                std::vector<std::size_t> remapped;
                for (std::size_t c : owned) {
                    if (std::binary_search(dropped.begin(), dropped.end(), c)) continue;
                    remapped.push_back(remap_column(c, dropped));
                }
                if (remapped.empty())
                    throw RequestError("retrain_benchmark: exclusion empties a party");
                new_split.assignments.push_back(std::move(remapped));
            }
            break;
        }
        case UnlearnRequest::Kind::Samples: {
            if (exclusion.target_sample_ids.empty())
                throw RequestError(
                    "retrain_benchmark: sample exclusion needs explicit sample ids");
            const std::set<std::uint64_t> doomed(exclusion.target_sample_ids.begin(),
                                                 exclusion.target_sample_ids.end());
            std::vector<std::size_t> keep;
            for (std::size_t r = 0; r < dataset.size(); ++r)
                if (!doomed.count(dataset.sample_ids[r])) keep.push_back(r);
            reduced = subset_rows(dataset, keep);
            break;
        }
    }

    VflSimulation benchmark(std::move(reduced), new_config, new_split);
    benchmark.train(config.epochs);
    return benchmark;
}

}  // namespace vfu
