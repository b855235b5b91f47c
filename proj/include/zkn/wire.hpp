#pragma once

#include <string>
#include <variant>

#include "zkn/bigint.hpp"
#include "zkn/bytes.hpp"
#include "zkn/canon.hpp"
#include "zkn/errors.hpp"
#include "zkn/net.hpp"
#include "zkn/sigma.hpp"

namespace zkn {

// Frames are a 4-byte big-endian length followed by a canonical-JSON body.
inline constexpr std::size_t kMaxFrameBytes = 1 << 20;  // 1 MiB

struct HelloBody {
    std::string contract_id;
    ProofTarget target;
    std::uint32_t k = 0;  // requested round count; the verifier's policy governs
};
struct CommitBody {
    BigInt s;
};
struct ChallengeBody {
    int bit = 0;
};
struct ResponseBody {
    BigInt z;
};
struct RoundResultBody {
    bool accept = false;
    bool more = false;
};
struct FinalResultBody {
    bool overall = false;
    std::uint32_t k = 0;
};
struct AbortBody {
    std::string reason;
};

/// One protocol message. Per session the order is fixed:
/// hello(0), then per round j=1..k commit(j) -> challenge(j) ->
/// response(j) -> round-result(j), then final-result(k). Either side may
/// send abort instead of its next message.
struct WireMessage {
    std::string session;  // 16-byte token as 32 lowercase hex chars
    std::uint64_t round = 0;
    std::variant<HelloBody, CommitBody, ChallengeBody, ResponseBody,
                 RoundResultBody, FinalResultBody, AbortBody>
        body;
};

inline bool valid_session_token(std::string_view s) {
    if (s.size() != 32) return false;
    for (char c : s)
        if (hex_nibble(c) < 0) return false;
    return true;
}

inline std::string message_kind(const WireMessage& m) {
    struct Visitor {
        std::string operator()(const HelloBody&) { return "hello"; }
        std::string operator()(const CommitBody&) { return "commit"; }
        std::string operator()(const ChallengeBody&) { return "challenge"; }
        std::string operator()(const ResponseBody&) { return "response"; }
        std::string operator()(const RoundResultBody&) { return "round-result"; }
        std::string operator()(const FinalResultBody&) { return "final-result"; }
        std::string operator()(const AbortBody&) { return "abort"; }
    };
    return std::visit(Visitor{}, m.body);
}

inline Json message_to_json(const WireMessage& m) {
    Json j{{"kind", message_kind(m)}, {"round", m.round}, {"session", m.session}};
    if (const auto* h = std::get_if<HelloBody>(&m.body)) {
        j["contract_id"] = h->contract_id;
        j["scope"] = h->target.scope == Scope::term ? "term" : "contract";
        j["label"] = h->target.label;
        j["k"] = h->k;
    } else if (const auto* c = std::get_if<CommitBody>(&m.body)) {
        j["s"] = bigint_to_hex(c->s);
    } else if (const auto* ch = std::get_if<ChallengeBody>(&m.body)) {
        j["i"] = ch->bit;
    } else if (const auto* r = std::get_if<ResponseBody>(&m.body)) {
        j["z"] = bigint_to_hex(r->z);
    } else if (const auto* rr = std::get_if<RoundResultBody>(&m.body)) {
        j["accept"] = rr->accept;
        j["more"] = rr->more;
    } else if (const auto* f = std::get_if<FinalResultBody>(&m.body)) {
        j["overall"] = f->overall;
        j["k"] = f->k;
    } else if (const auto* a = std::get_if<AbortBody>(&m.body)) {
        j["reason"] = a->reason;
    }
    return j;
}

/// Full frame: length prefix plus canonical JSON.
inline Bytes encode_message(const WireMessage& m) {
    std::string body = canonical_dump(message_to_json(m));
    if (body.size() > kMaxFrameBytes) throw FrameError("message exceeds frame bound");
    Bytes out;
    append_u32_be(out, static_cast<std::uint32_t>(body.size()));
    append(out, ByteView(reinterpret_cast<const std::uint8_t*>(body.data()), body.size()));
    return out;
}

inline WireMessage message_from_json(const Json& j) {
    try {
        std::string kind = get_string(j, "kind");
        WireMessage m;
        m.session = get_string(j, "session");
        if (!valid_session_token(m.session)) throw ParseError("bad session token");
        m.round = get_u64(j, "round");
        if (kind == "hello") {
            require_fields(j, {"kind", "round", "session", "contract_id", "scope",
                               "label", "k"});
            HelloBody h;
            h.contract_id = get_string(j, "contract_id");
            if (!valid_contract_id(h.contract_id)) throw ParseError("bad contract id");
            std::string scope = get_string(j, "scope");
            std::string label = get_string(j, "label");
            if (scope == "contract") {
                if (!label.empty()) throw ParseError("contract scope with label");
                h.target = ProofTarget::whole_contract();
            } else if (scope == "term") {
                if (!valid_label(label)) throw ParseError("bad term label");
                h.target = ProofTarget::term(label);
            } else {
                throw ParseError("unknown scope");
            }
            std::uint64_t k = get_u64(j, "k");
            if (k < 1 || k > 1'000'000) throw ParseError("k out of range");
            h.k = static_cast<std::uint32_t>(k);
            m.body = h;
        } else if (kind == "commit") {
            require_fields(j, {"kind", "round", "session", "s"});
            m.body = CommitBody{bigint_from_hex(get_string(j, "s"))};
        } else if (kind == "challenge") {
            require_fields(j, {"kind", "round", "session", "i"});
            std::uint64_t bit = get_u64(j, "i");
            if (bit > 1) throw ParseError("challenge bit out of range");
            m.body = ChallengeBody{static_cast<int>(bit)};
        } else if (kind == "response") {
            require_fields(j, {"kind", "round", "session", "z"});
            m.body = ResponseBody{bigint_from_hex(get_string(j, "z"))};
        } else if (kind == "round-result") {
            require_fields(j, {"kind", "round", "session", "accept", "more"});
            m.body = RoundResultBody{get_bool(j, "accept"), get_bool(j, "more")};
        } else if (kind == "final-result") {
            require_fields(j, {"kind", "round", "session", "overall", "k"});
            std::uint64_t k = get_u64(j, "k");
            if (k < 1 || k > 1'000'000) throw ParseError("k out of range");
            m.body = FinalResultBody{get_bool(j, "overall"), static_cast<std::uint32_t>(k)};
        } else if (kind == "abort") {
            require_fields(j, {"kind", "round", "session", "reason"});
            std::string reason = get_string(j, "reason");
            if (reason.size() > 256) throw ParseError("abort reason too long");
            m.body = AbortBody{reason};
        } else {
            throw ParseError("unknown message kind: " + kind);
        }
        return m;
    } catch (const ParseError& e) {
        throw DecodeError(e.what());
    } catch (const Json::exception& e) {
        throw DecodeError(e.what());
    }
}

/// Decodes a complete frame (prefix included). The length bound is
/// enforced before the body is looked at.
inline WireMessage decode_message(ByteView frame) {
    if (frame.size() < 4) throw FrameError("frame shorter than length prefix");
    std::uint32_t len = read_u32_be(frame);
    if (len > kMaxFrameBytes) throw FrameError("declared frame length exceeds bound");
    if (frame.size() != 4u + len) throw FrameError("frame length mismatch");
    std::string body(reinterpret_cast<const char*>(frame.data()) + 4, len);
    Json j;
    try {
        j = parse_json(body);
    } catch (const ParseError& e) {
        throw DecodeError(e.what());
    }
    return message_from_json(j);
}

// ---- framed socket I/O ----

inline void send_message(Socket& sock, const WireMessage& m) {
    Bytes frame = encode_message(m);
    sock.send_all(view(frame));
}

/// Reads one frame; checks the declared length against the bound before
/// reading the body.
inline WireMessage read_message(Socket& sock) {
    Bytes prefix = sock.recv_exact(4);
    std::uint32_t len = read_u32_be(view(prefix));
    if (len > kMaxFrameBytes) throw FrameError("declared frame length exceeds bound");
    Bytes body = sock.recv_exact(len);
    Bytes frame = prefix;
    append(frame, view(body));
    return decode_message(view(frame));
}

inline std::string new_session_token(RandomSource& rng) {
    Bytes token = rng.bytes(16);
    return to_hex(view(token));
}

}  // namespace zkn
