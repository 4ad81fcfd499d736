#include "vfu/protocol.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <iostream>
#include <set>

namespace vfu {

void MessageBus::post(Message msg) {
    if (msg.kind == MessageKind::EmbeddingUp) ++tally_.embedding_up;
    else ++tally_.gradient_down;
    inboxes_[msg.to_party].push_back(std::move(msg));
}

void MessageBus::post_eval_embedding(int, int, std::size_t) {
    ++tally_.eval_embedding_up;
}

bool MessageBus::has_message(int party) const {
    auto it = inboxes_.find(party);
    return it != inboxes_.end() && !it->second.empty();
}

Message MessageBus::receive(int party) {
    auto it = inboxes_.find(party);
    if (it == inboxes_.end() || it->second.empty())
        throw ProtocolError("receive: no pending message for party " + std::to_string(party));
    Message msg = std::move(it->second.front());
    it->second.pop_front();
    return msg;
}

std::size_t MessageBus::pending(int party) const {
    auto it = inboxes_.find(party);
    return it == inboxes_.end() ? 0 : it->second.size();
}

EmbeddingStore::EmbeddingStore(std::vector<int> party_ids, std::vector<std::uint32_t> widths,
                               std::uint32_t batch_size)
    : party_ids_(std::move(party_ids)), widths_(std::move(widths)), batch_size_(batch_size) {
    if (party_ids_.size() != widths_.size())
        throw StorageError("EmbeddingStore: party/width count mismatch");
    if (!std::is_sorted(party_ids_.begin(), party_ids_.end()))
        throw StorageError("EmbeddingStore: party ids must be ascending");
}

std::size_t EmbeddingStore::total_width() const {
    std::size_t w = 0;
    for (std::uint32_t v : widths_) w += v;
    return w;
}

ColumnRange EmbeddingStore::column_range(int party) const {
    std::size_t begin = 0;
    for (std::size_t k = 0; k < party_ids_.size(); ++k) {
        if (party_ids_[k] == party) return {begin, widths_[k]};
        begin += widths_[k];
    }
    throw StorageError("column_range: unknown party " + std::to_string(party));
}

void EmbeddingStore::put(std::uint32_t epoch, std::uint32_t batch, DenseMatrix concat,
                         std::vector<std::uint64_t> sample_ids) {
    if (concat.cols != total_width())
        throw StorageError("put: record width " + std::to_string(concat.cols) +
                           " does not tile the registered slices (" +
                           std::to_string(total_width()) + ")");
    if (sample_ids.size() != concat.rows)
        throw StorageError("put: sample id count != row count");

    EmbeddingRecord rec{epoch, batch, std::move(sample_ids), std::move(concat)};
    auto it = index_.find({epoch, batch});
    if (it != index_.end()) {
        std::cerr << "embedding store: overwriting record (" << epoch << ", " << batch << ")\n";
        records_[it->second] = std::move(rec);
        return;
    }
    index_[{epoch, batch}] = records_.size();
    records_.push_back(std::move(rec));
}

bool EmbeddingStore::contains(std::uint32_t epoch, std::uint32_t batch) const {
    return index_.count({epoch, batch}) > 0;
}

const EmbeddingRecord& EmbeddingStore::get(std::uint32_t epoch, std::uint32_t batch) const {
    auto it = index_.find({epoch, batch});
    if (it == index_.end())
        throw StorageError("get: no record (" + std::to_string(epoch) + ", " +
                           std::to_string(batch) + ")");
    return records_[it->second];
}

void EmbeddingStore::rebuild_index() {
    index_.clear();
    for (std::size_t i = 0; i < records_.size(); ++i)
        index_[{records_[i].epoch, records_[i].batch}] = i;
}

void EmbeddingStore::remove_party(int party) {
    const ColumnRange range = column_range(party);
    std::vector<std::size_t> drop;
    for (std::size_t c = range.begin; c < range.begin + range.width; ++c) drop.push_back(c);
    for (auto& rec : records_) rec.concat = remove_cols(rec.concat, drop);

    for (std::size_t k = 0; k < party_ids_.size(); ++k)
        if (party_ids_[k] == party) {
            party_ids_.erase(party_ids_.begin() + static_cast<std::ptrdiff_t>(k));
            widths_.erase(widths_.begin() + static_cast<std::ptrdiff_t>(k));
            break;
        }
}

void EmbeddingStore::remove_batches(
    const std::vector<std::pair<std::uint32_t, std::uint32_t>>& keys) {
    const std::set<std::pair<std::uint32_t, std::uint32_t>> doomed(keys.begin(), keys.end());
    std::vector<EmbeddingRecord> kept;
    for (auto& rec : records_)
        if (!doomed.count({rec.epoch, rec.batch})) kept.push_back(std::move(rec));
    records_ = std::move(kept);
    rebuild_index();
}

void EmbeddingStore::remove_samples(const std::vector<std::uint64_t>& ids) {
    const std::set<std::uint64_t> doomed(ids.begin(), ids.end());
    std::vector<EmbeddingRecord> kept;
    for (auto& rec : records_) {
        std::vector<std::size_t> keep_rows;
        for (std::size_t r = 0; r < rec.sample_ids.size(); ++r)
            if (!doomed.count(rec.sample_ids[r])) keep_rows.push_back(r);
        if (keep_rows.empty()) continue;
        if (keep_rows.size() != rec.sample_ids.size()) {
            rec.concat = select_rows(rec.concat, keep_rows);
            std::vector<std::uint64_t> kept_ids;
            for (std::size_t r : keep_rows) kept_ids.push_back(rec.sample_ids[r]);
            rec.sample_ids = std::move(kept_ids);
        }
        kept.push_back(std::move(rec));
    }
    records_ = std::move(kept);
    rebuild_index();
}

void EmbeddingStore::replace_record(std::uint32_t epoch, std::uint32_t batch,
                                    DenseMatrix concat) {
    auto it = index_.find({epoch, batch});
    if (it == index_.end())
        throw StorageError("replace_record: no record (" + std::to_string(epoch) + ", " +
                           std::to_string(batch) + ")");
    records_[it->second].concat = std::move(concat);
}

namespace {

// All integers little-endian. This code assumes a little-endian host.
template <typename T>
void write_raw(std::ofstream& out, T v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_raw(std::ifstream& in) {
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in) throw StorageError("embedding store file truncated");
    return v;
}

constexpr std::uint32_t kStoreVersion = 1;
constexpr std::uint32_t kStoreMagic = 0x53554656;  // "VFUS" as on-disk bytes

}  // namespace

void EmbeddingStore::save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw StorageError("save: cannot open " + path);
    write_raw(out, kStoreMagic);
    write_raw(out, kStoreVersion);
    write_raw(out, static_cast<std::uint32_t>(party_ids_.size()));
    write_raw(out, batch_size_);
    for (std::size_t k = 0; k < party_ids_.size(); ++k) {
        write_raw(out, static_cast<std::int32_t>(party_ids_[k]));
        write_raw(out, widths_[k]);
    }
    write_raw(out, static_cast<std::uint32_t>(records_.size()));
    for (const auto& rec : records_) {
        write_raw(out, rec.epoch);
        write_raw(out, rec.batch);
        write_raw(out, static_cast<std::uint32_t>(rec.concat.rows));
        for (std::uint64_t id : rec.sample_ids) write_raw(out, id);
        out.write(reinterpret_cast<const char*>(rec.concat.data.data()),
                  static_cast<std::streamsize>(rec.concat.data.size() * sizeof(double)));
    }
    if (!out) throw StorageError("save: write failed for " + path);
}

EmbeddingStore EmbeddingStore::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw StorageError("load: cannot open " + path);
    if (read_raw<std::uint32_t>(in) != kStoreMagic)
        throw StorageError("load: " + path + " is not an embedding store file");
    if (read_raw<std::uint32_t>(in) != kStoreVersion)
        throw StorageError("load: unsupported store version in " + path);
    const std::uint32_t parties = read_raw<std::uint32_t>(in);
    const std::uint32_t batch_size = read_raw<std::uint32_t>(in);
    std::vector<int> ids;
    std::vector<std::uint32_t> widths;
    for (std::uint32_t k = 0; k < parties; ++k) {
        ids.push_back(read_raw<std::int32_t>(in));
        widths.push_back(read_raw<std::uint32_t>(in));
    }
    EmbeddingStore store(std::move(ids), std::move(widths), batch_size);
    const std::uint32_t count = read_raw<std::uint32_t>(in);
    const std::size_t width = store.total_width();
    for (std::uint32_t i = 0; i < count; ++i) {
        EmbeddingRecord rec;
        rec.epoch = read_raw<std::uint32_t>(in);
        rec.batch = read_raw<std::uint32_t>(in);
        const std::uint32_t rows = read_raw<std::uint32_t>(in);
        rec.sample_ids.resize(rows);
        for (std::uint32_t r = 0; r < rows; ++r) rec.sample_ids[r] = read_raw<std::uint64_t>(in);
        rec.concat = DenseMatrix(rows, width);
        in.read(reinterpret_cast<char*>(rec.concat.data.data()),
                static_cast<std::streamsize>(rec.concat.data.size() * sizeof(double)));
        if (!in) throw StorageError("load: truncated record in " + path);
        store.index_[{rec.epoch, rec.batch}] = store.records_.size();
        store.records_.push_back(std::move(rec));
    }
    return store;
}

}  // namespace vfu
