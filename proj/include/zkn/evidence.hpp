#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "zkn/bytes.hpp"
#include "zkn/canon.hpp"
#include "zkn/errors.hpp"
#include "zkn/group.hpp"

namespace zkn {

inline constexpr std::size_t kMinSaltBytes = 16;

inline bool valid_label(std::string_view s) {
    if (s.empty() || s.size() > 64) return false;
    return std::all_of(s.begin(), s.end(), [](char c) {
        return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
               (c >= '0' && c <= '9') || c == '.' || c == '_' || c == '-';
    });
}

/// The confidential contract: the full text plus the named terms a party
/// might later want to prove knowledge of individually. Neither the body
/// nor any term value ever leaves the holder's machine.
struct ContractContent {
    Bytes body;
    std::vector<std::pair<std::string, Bytes>> terms;  // ordered, labels unique

    const Bytes* find_term(std::string_view label) const {
        for (const auto& [l, v] : terms)
            if (l == label) return &v;
        return nullptr;
    }
};

inline void validate_content(const ContractContent& content) {
    if (content.body.empty()) throw ContentError("contract body is empty");
    std::set<std::string> seen;
    for (const auto& term : content.terms) {
        if (!valid_label(term.first))
            throw ContentError("invalid term label: '" + term.first + "'");
        if (!seen.insert(term.first).second)
            throw ContentError("duplicate term label: '" + term.first + "'");
    }
}

/// The secret exponents. x binds the whole body; each term witness binds
/// one term value. All hashes mix in the salt, so a public evidence value
/// cannot be brute-forced from a guessable contract.
struct SecretWitness {
    Scalar x;
    std::vector<std::pair<std::string, Scalar>> term_witnesses;
    Bytes salt;

    const Scalar* find_term(std::string_view label) const {
        for (const auto& [l, v] : term_witnesses)
            if (l == label) return &v;
        return nullptr;
    }
};

inline SecretWitness derive_witness(const ContractContent& content, ByteView salt,
                                    const GroupParams& params) {
    if (salt.size() < kMinSaltBytes)
        throw SaltError("salt must be at least 16 bytes");
    validate_content(content);
    SecretWitness w;
    w.salt.assign(salt.begin(), salt.end());
    Bytes body_enc = length_prefixed({salt, view(content.body)});
    w.x = hash_to_scalar(view(body_enc), params);
    for (const auto& [label, value] : content.terms) {
        Bytes label_bytes = to_bytes(label);
        Bytes enc = length_prefixed({salt, view(label_bytes), view(value)});
        w.term_witnesses.emplace_back(label, hash_to_scalar(view(enc), params));
    }
    return w;
}

/// The public record: g^x for the whole contract and g^{x_j} per term.
/// Contains no salt, no content bytes, no witness material.
struct EvidenceRecord {
    std::string contract_id;
    GroupElement e;
    std::vector<std::pair<std::string, GroupElement>> term_evidence;
    std::string params_id;
    std::uint64_t created_at = 0;

    const GroupElement* find_term(std::string_view label) const {
        for (const auto& [l, v] : term_evidence)
            if (l == label) return &v;
        return nullptr;
    }
};

inline bool valid_contract_id(std::string_view s) {
    return valid_label(s);
}

inline EvidenceRecord generate_evidence(const SecretWitness& witness,
                                        const GroupParams& params,
                                        const std::string& contract_id,
                                        std::uint64_t created_at) {
    if (!valid_contract_id(contract_id))
        throw ContentError("invalid contract id: '" + contract_id + "'");
    EvidenceRecord record;
    record.contract_id = contract_id;
    record.e = mod_exp(params.g, witness.x, params);
    for (const auto& [label, xj] : witness.term_witnesses)
        record.term_evidence.emplace_back(label, mod_exp(params.g, xj, params));
    record.params_id = params_id(params);
    record.created_at = created_at;
    return record;
}

inline Json record_to_json(const EvidenceRecord& record) {
    Json terms = Json::array();
    for (const auto& [label, value] : record.term_evidence)
        terms.push_back(Json::array({label, bigint_to_hex(value.v)}));
    return Json{{"contract_id", record.contract_id},
                {"created_at", record.created_at},
                {"e", bigint_to_hex(record.e.v)},
                {"params_id", record.params_id},
                {"term_evidence", terms}};
}

inline EvidenceRecord record_from_json(const Json& j) {
    require_fields(j, {"contract_id", "created_at", "e", "params_id", "term_evidence"});
    EvidenceRecord record;
    record.contract_id = get_string(j, "contract_id");
    if (!valid_contract_id(record.contract_id))
        throw ParseError("invalid contract id");
    record.created_at = get_u64(j, "created_at");
    record.e = GroupElement{bigint_from_hex(get_string(j, "e"))};
    record.params_id = get_string(j, "params_id");
    const Json& terms = j.at("term_evidence");
    if (!terms.is_array()) throw ParseError("term_evidence must be an array");
    std::set<std::string> seen;
    for (const Json& t : terms) {
        if (!t.is_array() || t.size() != 2 || !t[0].is_string() || !t[1].is_string())
            throw ParseError("term_evidence entries must be [label, hex] pairs");
        std::string label = t[0].get<std::string>();
        if (!valid_label(label)) throw ParseError("invalid term label");
        if (!seen.insert(label).second) throw ParseError("duplicate term label");
        record.term_evidence.emplace_back(
            label, GroupElement{bigint_from_hex(t[1].get<std::string>())});
    }
    return record;
}

struct BindingReport {
    bool ok = true;
    std::vector<std::string> mismatches;  // "body" or the failing term label
    explicit operator bool() const { return ok; }
};

/// Re-derives the witness from (content, salt) and checks that it
/// reproduces the record exactly. Only parties holding the content can run
/// this; it is the direct (non-interactive) binding check.
inline BindingReport verify_binding(const ContractContent& content, ByteView salt,
                                    const EvidenceRecord& record,
                                    const GroupParams& params) {
    SecretWitness w = derive_witness(content, salt, params);
    EvidenceRecord fresh =
        generate_evidence(w, params, record.contract_id, record.created_at);
    BindingReport report;
    if (fresh.e != record.e) report.mismatches.push_back("body");
    for (const auto& [label, value] : fresh.term_evidence) {
        const GroupElement* stored = record.find_term(label);
        if (!stored || !(*stored == value)) report.mismatches.push_back(label);
    }
    for (const auto& [label, value] : record.term_evidence)
        if (!content.find_term(label)) report.mismatches.push_back(label);
    report.ok = report.mismatches.empty();
    return report;
}

// ---- contract container file ----
//
//   contract/1
//   body <len>
//   <len raw bytes>
//   term <label> <len>
//   <len raw bytes>
//
// Each raw byte run is followed by one newline that is not part of the
// value. Lengths are decimal. Binary-safe.

inline std::string format_contract_file(const ContractContent& content) {
    validate_content(content);
    std::string out = "contract/1\n";
    out += "body " + std::to_string(content.body.size()) + "\n";
    out.append(content.body.begin(), content.body.end());
    out += "\n";
    for (const auto& [label, value] : content.terms) {
        out += "term " + label + " " + std::to_string(value.size()) + "\n";
        out.append(value.begin(), value.end());
        out += "\n";
    }
    return out;
}

inline ContractContent parse_contract_file(std::string_view text) {
    std::size_t pos = 0;
    auto read_line = [&]() -> std::string {
        auto nl = text.find('\n', pos);
        if (nl == std::string_view::npos)
            throw ParseError("unterminated line in contract file");
        std::string line(text.substr(pos, nl - pos));
        pos = nl + 1;
        return line;
    };
    auto read_raw = [&](std::size_t n) -> Bytes {
        if (pos + n + 1 > text.size())
            throw ParseError("contract file truncated inside a value");
        Bytes out(text.begin() + pos, text.begin() + pos + n);
        pos += n;
        if (text[pos] != '\n')
            throw ParseError("value not followed by newline");
        ++pos;
        return out;
    };
    auto parse_len = [](const std::string& s) -> std::size_t {
        if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos)
            throw ParseError("bad length field: '" + s + "'");
        return static_cast<std::size_t>(std::stoull(s));
    };

    if (read_line() != "contract/1")
        throw ParseError("missing contract/1 header");
    std::string body_hdr = read_line();
    if (body_hdr.rfind("body ", 0) != 0)
        throw ParseError("expected 'body <len>' line");
    ContractContent content;
    content.body = read_raw(parse_len(body_hdr.substr(5)));
    while (pos < text.size()) {
        std::string line = read_line();
        if (line.empty()) continue;  // trailing blank lines tolerated
        if (line.rfind("term ", 0) != 0)
            throw ParseError("expected 'term <label> <len>' line");
        auto sp = line.find(' ', 5);
        if (sp == std::string::npos)
            throw ParseError("term line missing length");
        std::string label = line.substr(5, sp - 5);
        content.terms.emplace_back(label, read_raw(parse_len(line.substr(sp + 1))));
    }
    validate_content(content);
    return content;
}

inline void save_contract(const ContractContent& content, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path);
    out << format_contract_file(content);
    if (!out) throw IoError("write failed: " + path);
}

inline ContractContent load_contract(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_contract_file(buf.str());
}

}  // namespace zkn
