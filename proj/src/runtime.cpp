#include "vfu/runtime.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <string>

#include "vfu/rng.hpp"

namespace vfu {

void VflConfig::validate() const {
    if (parties < 1) throw ConfigError("config: need at least one party");
    if (!active_owns_features && parties < 2)
        throw ConfigError("config: a label-only active party needs at least one passive party");
    if (lr_active <= 0.0 || lr_passive < 0.0)
        throw ConfigError("config: learning rates must be positive (lr_passive may be 0)");
    if (alpha < 0.0 || alpha > 1.0) throw ConfigError("config: alpha must be in [0, 1]");
    if (lambda <= 0.0) throw ConfigError("config: lambda must be > 0");
    if (u_ep < 1) throw ConfigError("config: u_ep must be >= 1");
    if (batch_size < 1) throw ConfigError("config: batch_size must be >= 1");
    if (test_fraction < 0.0 || test_fraction >= 1.0)
        throw ConfigError("config: test_fraction must be in [0, 1)");
}

ActiveStepResult active_batch_step(const MlpModel& active_model,
                                   std::vector<std::pair<int, DenseMatrix>> embeddings,
                                   const std::vector<int>& labels) {
    if (embeddings.empty()) throw ProtocolError("active_batch_step: no embeddings");
    std::sort(embeddings.begin(), embeddings.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    for (const auto& [id, emb] : embeddings)
        if (emb.rows != embeddings.front().second.rows)
            throw ProtocolError("active_batch_step: row-count mismatch at party " +
                                std::to_string(id));

    std::vector<DenseMatrix> parts;
    parts.reserve(embeddings.size());
    for (auto& [id, emb] : embeddings) parts.push_back(emb);

    ActiveStepResult res;
    res.concat = concat_cols(parts);
    if (res.concat.cols != active_model.input_dim())
        throw ProtocolError("active_batch_step: concatenated width " +
                            std::to_string(res.concat.cols) + " != active input width " +
                            std::to_string(active_model.input_dim()));

    ForwardCache cache;
    const DenseMatrix logits = forward(active_model, res.concat, &cache);
    LossResult ce = cross_entropy_loss(logits, labels);
    res.loss = ce.loss;
    res.active_grads = backward(active_model, cache, ce.grad);

    std::size_t offset = 0;
    for (const auto& [id, emb] : embeddings) {
        res.gradient_slices.emplace_back(id,
                                         slice_cols(res.active_grads.input_gradient, offset,
                                                    emb.cols));
        offset += emb.cols;
    }
    return res;
}

VflSimulation::VflSimulation(Dataset dataset, VflConfig config,
                             std::optional<VerticalSplit> split)
    : config_(config), dataset_(std::move(dataset)) {
    config_.validate();
    dataset_.validate();
    if (!dataset_.has_labels())
        throw ConfigError("VflSimulation: dataset must carry labels for the active party");

    const std::size_t providers =
        config_.active_owns_features ? config_.parties : config_.parties - 1;
    split_ = split ? *split : equal_split(dataset_.dim(), providers);
    split_.validate(dataset_.dim());
    if (split_.assignments.size() != providers)
        throw ConfigError("VflSimulation: split has " +
                          std::to_string(split_.assignments.size()) + " parts for " +
                          std::to_string(providers) + " feature-owning parties");

    rows_ = train_test_split(dataset_.size(), config_.test_fraction, config_.seed);

    const std::vector<Dataset> parts = vertical_partition(dataset_, split_);
    for (std::size_t k = 0; k < config_.parties; ++k) {
        PartyState party;
        party.party_id = static_cast<int>(k);
        party.is_active = (k + 1 == config_.parties);
        if (k < providers) {
            party.owned_features = split_.assignments[k];
            party.data = parts[k];
            party.model = make_mlp({party.owned_features.size(), config_.passive_hidden},
                                   mix_seed(config_.seed, 100 + k));
            party.model.layers.back().activation = Activation::Relu;
        }
        if (party.is_active) party.labels = dataset_.labels;
        parties_.push_back(std::move(party));
    }

    std::size_t total_width = 0;
    for (const auto& p : parties_)
        if (!p.owned_features.empty()) total_width += p.model.output_dim();
    active_model_ = make_mlp({total_width, config_.active_hidden,
                              static_cast<std::size_t>(dataset_.num_classes())},
                             mix_seed(config_.seed, 7));
}

PartyState& VflSimulation::party(int id) {
    for (auto& p : parties_)
        if (p.party_id == id) return p;
    throw RequestError("unknown party " + std::to_string(id));
}

PartyState& VflSimulation::active_party() {
    for (auto& p : parties_)
        if (p.is_active) return p;
    throw StateError("no active party");
}

std::vector<int> VflSimulation::provider_ids() const {
    std::vector<int> ids;
    for (const auto& p : parties_)
        if (!p.owned_features.empty()) ids.push_back(p.party_id);
    return ids;
}

void VflSimulation::drop_party(int id) {
    for (std::size_t i = 0; i < parties_.size(); ++i)
        if (parties_[i].party_id == id) {
            if (parties_[i].is_active)
                throw RequestError("cannot drop the active party");
            parties_.erase(parties_.begin() + static_cast<std::ptrdiff_t>(i));
            return;
        }
    throw RequestError("unknown party " + std::to_string(id));
}

DenseMatrix VflSimulation::embed_rows(const std::vector<std::size_t>& rows) const {
    std::vector<DenseMatrix> parts;
    for (const auto& p : parties_) {
        if (p.owned_features.empty()) continue;
        parts.push_back(forward(p.model, select_rows(p.data.features, rows)));
    }
    return concat_cols(parts);
}

void VflSimulation::run_batch(int epoch, int batch_index,
                              const std::vector<std::size_t>& batch_rows, double& loss_accum) {
    const int active_id = active_party().party_id;

    // Passive forward passes; every provider's embedding goes over the bus.
    std::map<int, ForwardCache> caches;
    for (auto& p : parties_) {
        if (p.owned_features.empty()) continue;
        ForwardCache cache;
        DenseMatrix emb = forward(p.model, select_rows(p.data.features, batch_rows), &cache);
        if (emb.cols != p.model.output_dim())
            throw ProtocolError("party " + std::to_string(p.party_id) +
                                ": embedding width != declared output width");
        caches[p.party_id] = std::move(cache);
        bus_.post({MessageKind::EmbeddingUp, p.party_id, active_id, epoch, batch_index,
                   std::move(emb)});
    }

    std::vector<std::pair<int, DenseMatrix>> embeddings;
    while (bus_.has_message(active_id)) {
        Message msg = bus_.receive(active_id);
        if (msg.kind != MessageKind::EmbeddingUp)
            throw ProtocolError("active party received a non-embedding message mid-batch");
        embeddings.emplace_back(msg.from_party, std::move(msg.payload));
    }

    std::vector<int> batch_labels;
    std::vector<std::uint64_t> batch_sample_ids;
    for (std::size_t r : batch_rows) {
        batch_labels.push_back(dataset_.labels[r]);
        batch_sample_ids.push_back(dataset_.sample_ids[r]);
    }

    ActiveStepResult step = active_batch_step(active_model_, std::move(embeddings), batch_labels);
    loss_accum += step.loss;

    // H^t is persisted before the active update.
    if (store_.party_ids().empty()) {
        std::vector<int> ids = provider_ids();
        std::vector<std::uint32_t> widths;
        for (int id : ids)
            widths.push_back(static_cast<std::uint32_t>(party(id).model.output_dim()));
        store_ = EmbeddingStore(std::move(ids), std::move(widths),
                                static_cast<std::uint32_t>(config_.batch_size));
    }
    store_.put(static_cast<std::uint32_t>(epoch), static_cast<std::uint32_t>(batch_index),
               step.concat, batch_sample_ids);

    if (config_.update_rule == UpdateRule::Sgd) {
        sgd_step(active_model_, step.active_grads, config_.lr_active);
    } else {
        const DenseMatrix& concat = step.concat;
        newton_step(active_model_,
                    [&](const MlpModel& m) {
                        ForwardCache cache;
                        const DenseMatrix logits = forward(m, concat, &cache);
                        LossResult ce = cross_entropy_loss(logits, batch_labels);
                        return std::make_pair(ce.loss, backward(m, cache, ce.grad));
                    },
                    config_.newton_damping);
    }

    for (auto& [id, slice] : step.gradient_slices)
        bus_.post({MessageKind::GradientDown, active_id, id, epoch, batch_index,
                   std::move(slice)});

    for (auto& p : parties_) {
        if (p.owned_features.empty()) continue;
        Message msg = bus_.receive(p.party_id);
        if (msg.kind != MessageKind::GradientDown)
            throw ProtocolError("party received a non-gradient message mid-batch");
        const GradientSet grads = backward(p.model, caches.at(p.party_id), msg.payload);
        if (config_.update_rule == UpdateRule::Sgd) {
            sgd_step(p.model, grads, config_.lr_passive);
        } else {
            // Local surrogate: <embedding, upstream-grad> has the same gradient
            // as the joint loss at the current parameters, and its curvature is
            // computable without further communication.
            const DenseMatrix x = select_rows(p.data.features, batch_rows);
            const DenseMatrix upstream = msg.payload;
            newton_step(p.model,
                        [&](const MlpModel& m) {
                            ForwardCache cache;
                            const DenseMatrix emb = forward(m, x, &cache);
                            double loss = 0.0;
                            for (std::size_t i = 0; i < emb.data.size(); ++i)
                                loss += emb.data[i] * upstream.data[i];
                            return std::make_pair(loss, backward(m, cache, upstream));
                        },
                        config_.newton_damping);
        }
    }
}

void VflSimulation::train(int epochs, RunPhase phase) {
    const std::size_t n_train = rows_.train.size();
    for (int e = 0; e < epochs; ++e) {
        ++epoch_;
        const BatchPlan plan =
            make_batch_plan(n_train, config_.batch_size, epoch_, config_.seed);
        double loss_accum = 0.0;
        for (std::size_t b = 0; b < plan.batches.size(); ++b) {
            std::vector<std::size_t> batch_rows;
            for (std::size_t idx : plan.batches[b]) batch_rows.push_back(rows_.train[idx]);
            run_batch(epoch_, static_cast<int>(b), batch_rows, loss_accum);
        }
        const EvalResult eval = evaluate();
        MetricsRecord rec;
        rec.epoch = epoch_;
        rec.phase = phase;
        rec.train_loss = loss_accum / static_cast<double>(plan.batches.size());
        rec.test_loss = eval.loss;
        rec.f1 = eval.f1;
        rec.auc = eval.auc;
        metrics_.push_back(rec);
    }
}

EvalResult VflSimulation::evaluate() {
    const int active_id = 0;  // counter only; routing is not exercised for eval
    for (const auto& p : parties_)
        if (!p.owned_features.empty())
            bus_.post_eval_embedding(p.party_id, active_id, rows_.test.size());
    return evaluate_quiet();
}

EvalResult VflSimulation::evaluate_quiet() const {
    const DenseMatrix concat = embed_rows(rows_.test);
    const DenseMatrix logits = forward(active_model_, concat);
    const std::vector<int> labels = test_labels();

    EvalResult res;
    res.loss = cross_entropy_loss(logits, labels).loss;
    const DenseMatrix probs = softmax(logits);
    res.f1 = f1_score(argmax_rows(probs), labels);
    const std::set<int> distinct(labels.begin(), labels.end());
    res.auc = distinct.size() < 2 ? 0.5 : auc_score(probs, labels);
    return res;
}

DenseMatrix VflSimulation::test_logits() const {
    return forward(active_model_, embed_rows(rows_.test));
}

std::vector<int> VflSimulation::test_labels() const {
    std::vector<int> labels;
    for (std::size_t r : rows_.test) labels.push_back(dataset_.labels[r]);
    return labels;
}

}  // namespace vfu
