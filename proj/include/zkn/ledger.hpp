#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "zkn/canon.hpp"
#include "zkn/errors.hpp"
#include "zkn/evidence.hpp"
#include "zkn/hex.hpp"
#include "zkn/sha256.hpp"

namespace zkn {

/// One link of the hash chain. block_hash covers the canonical JSON of
/// (index, payload, prev_hash, timestamp); prev_hash is the previous
/// block's hash, all zeros for the genesis block.
struct LedgerBlock {
    std::uint64_t index = 0;
    std::uint64_t timestamp = 0;
    Digest prev_hash{};
    std::vector<EvidenceRecord> payload;
    Digest block_hash{};
};

inline Json block_body_json(const LedgerBlock& block) {
    Json payload = Json::array();
    for (const EvidenceRecord& r : block.payload) payload.push_back(record_to_json(r));
    return Json{{"index", block.index},
                {"payload", payload},
                {"prev_hash", to_hex(ByteView(block.prev_hash.data(), block.prev_hash.size()))},
                {"timestamp", block.timestamp}};
}

inline Digest compute_block_hash(const LedgerBlock& block) {
    std::string body = canonical_dump(block_body_json(block));
    return sha256(ByteView(reinterpret_cast<const std::uint8_t*>(body.data()), body.size()));
}

inline Json block_to_json(const LedgerBlock& block) {
    Json j = block_body_json(block);
    j["block_hash"] = to_hex(ByteView(block.block_hash.data(), block.block_hash.size()));
    return j;
}

inline Digest digest_from_hex(const std::string& hex) {
    if (hex.size() != 64) throw ParseError("digest must be 64 hex chars");
    Bytes b = from_hex(hex);
    Digest d{};
    std::copy(b.begin(), b.end(), d.begin());
    return d;
}

inline LedgerBlock block_from_json(const Json& j) {
    require_fields(j, {"block_hash", "index", "payload", "prev_hash", "timestamp"});
    LedgerBlock block;
    block.index = get_u64(j, "index");
    block.timestamp = get_u64(j, "timestamp");
    block.prev_hash = digest_from_hex(get_string(j, "prev_hash"));
    block.block_hash = digest_from_hex(get_string(j, "block_hash"));
    const Json& payload = j.at("payload");
    if (!payload.is_array()) throw ParseError("payload must be an array");
    for (const Json& r : payload) block.payload.push_back(record_from_json(r));
    return block;
}

struct ChainReport {
    bool ok = true;
    std::size_t first_bad = 0;
    std::string what;
    explicit operator bool() const { return ok; }
};

/// Append-only store of evidence records, one record per block. The API
/// exposes no way to touch an existing block; tampering happens outside
/// the process and is what verify_chain exists to expose.
class Ledger {
public:
    std::size_t size() const { return blocks_.size(); }
    const std::vector<LedgerBlock>& blocks() const { return blocks_; }

    std::size_t append_evidence(const EvidenceRecord& record, std::uint64_t timestamp) {
        if (!valid_contract_id(record.contract_id))
            throw ContentError("invalid contract id");
        if (index_.contains(record.contract_id))
            throw DuplicateIdError("contract id already registered: " + record.contract_id);
        LedgerBlock block;
        block.index = blocks_.size();
        block.timestamp = timestamp;
        if (!blocks_.empty()) block.prev_hash = blocks_.back().block_hash;
        block.payload.push_back(record);
        block.block_hash = compute_block_hash(block);
        index_[record.contract_id] = {blocks_.size(), 0};
        blocks_.push_back(std::move(block));
        return blocks_.size() - 1;
    }

    const EvidenceRecord* find_evidence(const std::string& contract_id) const {
        auto it = index_.find(contract_id);
        if (it == index_.end()) return nullptr;
        return &blocks_[it->second.first].payload[it->second.second];
    }

    const EvidenceRecord& get_evidence(const std::string& contract_id) const {
        const EvidenceRecord* r = find_evidence(contract_id);
        if (!r) throw NotFoundError("no evidence for contract id: " + contract_id);
        return *r;
    }

    ChainReport verify_chain() const {
        std::map<std::string, bool> ids;
        for (std::size_t i = 0; i < blocks_.size(); ++i) {
            const LedgerBlock& b = blocks_[i];
            if (b.index != i)
                return {false, i, "stored index does not match position"};
            Digest expected_prev{};
            if (i > 0) expected_prev = blocks_[i - 1].block_hash;
            if (b.prev_hash != expected_prev)
                return {false, i, "prev_hash does not match previous block"};
            if (compute_block_hash(b) != b.block_hash)
                return {false, i, "stored block_hash does not match recomputation"};
            for (const EvidenceRecord& r : b.payload)
                if (!ids.emplace(r.contract_id, true).second)
                    return {false, i, "duplicate contract id: " + r.contract_id};
        }
        return {};
    }

    // Used by load_ledger, which re-verifies everything afterwards.
    void restore_block(LedgerBlock block) {
        for (std::size_t off = 0; off < block.payload.size(); ++off)
            index_.emplace(block.payload[off].contract_id,
                           std::make_pair(blocks_.size(), off));
        blocks_.push_back(std::move(block));
    }

private:
    std::vector<LedgerBlock> blocks_;
    std::map<std::string, std::pair<std::size_t, std::size_t>> index_;
};

// ---- ledger file: one canonical-JSON block per line ----

inline void save_ledger(const Ledger& ledger, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path);
    for (const LedgerBlock& b : ledger.blocks())
        out << canonical_dump(block_to_json(b)) << "\n";
    if (!out) throw IoError("write failed: " + path);
}

/// Strict load: each line must parse, must be bit-identical to the
/// canonical re-serialization of what it parses to, and the rebuilt chain
/// must verify. Any violation names the offending block.
inline Ledger load_ledger(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    std::string text = buf.str();

    Ledger ledger;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos < text.size()) {
        auto nl = text.find('\n', pos);
        if (nl == std::string::npos)
            throw IntegrityError(line_no, "file truncated mid-block");
        std::string line = text.substr(pos, nl - pos);
        pos = nl + 1;
        LedgerBlock block;
        try {
            Json j = parse_json(line);
            if (canonical_dump(j) != line)
                throw ParseError("line is not in canonical form");
            block = block_from_json(j);
        } catch (const ParseError& e) {
            throw IntegrityError(line_no, e.what());
        } catch (const Json::exception& e) {
            throw IntegrityError(line_no, e.what());
        }
        ledger.restore_block(std::move(block));
        ++line_no;
    }
    ChainReport report = ledger.verify_chain();
    if (!report.ok) throw IntegrityError(report.first_bad, report.what);
    return ledger;
}

}  // namespace zkn
