#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <string>
#include <vector>

#include "vfu/matrix.hpp"

namespace vfu {

enum class MessageKind { EmbeddingUp, GradientDown };

struct Message {
    MessageKind kind = MessageKind::EmbeddingUp;
    int from_party = 0;
    int to_party = 0;
    int epoch = 0;
    int batch_index = 0;
    DenseMatrix payload;
};

// Monotone per-run message counters. Evaluation traffic is tallied apart so
// the unlearning window can assert exact equality on the training counters.
struct MessageTally {
    std::uint64_t embedding_up = 0;
    std::uint64_t gradient_down = 0;
    std::uint64_t eval_embedding_up = 0;

    std::uint64_t training_total() const { return embedding_up + gradient_down; }
    bool operator==(const MessageTally&) const = default;
};

// In-process transport: counted delivery into per-party inboxes.
class MessageBus {
public:
    void post(Message msg);
    void post_eval_embedding(int from_party, int to_party, std::size_t rows);

    bool has_message(int party) const;
    Message receive(int party);
    std::size_t pending(int party) const;

    const MessageTally& tally() const { return tally_; }

private:
    MessageTally tally_;
    std::map<int, std::deque<Message>> inboxes_;
};

struct EmbeddingRecord {
    std::uint32_t epoch = 0;
    std::uint32_t batch = 0;
    std::vector<std::uint64_t> sample_ids;
    DenseMatrix concat;  // H^t
};

struct ColumnRange {
    std::size_t begin = 0;
    std::size_t width = 0;
};

// The active party's persisted log of concatenated embeddings, keyed by
// (epoch, batch). Party slices are store-global: widths per ascending
// party id, tiling every record's columns.
class EmbeddingStore {
public:
    EmbeddingStore() = default;
    EmbeddingStore(std::vector<int> party_ids, std::vector<std::uint32_t> widths,
                   std::uint32_t batch_size);

    void put(std::uint32_t epoch, std::uint32_t batch, DenseMatrix concat,
             std::vector<std::uint64_t> sample_ids);
    bool contains(std::uint32_t epoch, std::uint32_t batch) const;
    const EmbeddingRecord& get(std::uint32_t epoch, std::uint32_t batch) const;

    const std::vector<EmbeddingRecord>& records() const { return records_; }
    const std::vector<int>& party_ids() const { return party_ids_; }
    const std::vector<std::uint32_t>& widths() const { return widths_; }
    std::uint32_t batch_size() const { return batch_size_; }
    std::size_t total_width() const;
    ColumnRange column_range(int party) const;

    // Rewrites every record dropping the party's slice.
    void remove_party(int party);
    // Drops whole records by key.
    void remove_batches(const std::vector<std::pair<std::uint32_t, std::uint32_t>>& keys);
    // Drops matching rows everywhere; records left empty are removed.
    void remove_samples(const std::vector<std::uint64_t>& ids);
    // Replaces a record's matrix in place (same key, new width after pruning).
    void replace_record(std::uint32_t epoch, std::uint32_t batch, DenseMatrix concat);

    void save(const std::string& path) const;
    static EmbeddingStore load(const std::string& path);

private:
    std::vector<int> party_ids_;           // ascending
    std::vector<std::uint32_t> widths_;    // same order as party_ids_
    std::uint32_t batch_size_ = 0;
    std::vector<EmbeddingRecord> records_;  // write order
    std::map<std::pair<std::uint32_t, std::uint32_t>, std::size_t> index_;

    void rebuild_index();
};

}  // namespace vfu
