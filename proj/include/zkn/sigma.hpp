#pragma once

#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "zkn/canon.hpp"
#include "zkn/errors.hpp"
#include "zkn/evidence.hpp"
#include "zkn/group.hpp"
#include "zkn/rng.hpp"

namespace zkn {

// ---------------------------------------------------------------------------
// Interactive proof of knowledge of x in e = g^x, one bit challenge per
// round:
//
//   prover:   r <- uniform [0,q),  s = g^r           (commitment)
//   verifier: i <- {0,1}                             (challenge)
//   prover:   z = r            when i = 0            (response)
//             z = r + x mod q  when i = 1
//   verifier: accept iff g^z == s        (i = 0)
//                       g^z == s * e     (i = 1)
//
// A witnessless prover can prepare for exactly one of the two challenge
// values, so each round halves the cheating probability; k rounds leave
// 2^-k. The accepting transcripts for a fixed challenge bit are uniform in
// (s, z) with one degree of freedom, which is why a simulator without x
// can produce identically distributed ones.
// ---------------------------------------------------------------------------

struct Commitment {
    GroupElement s;
    bool operator==(const Commitment&) const = default;
};

struct Challenge {
    int bit = 0;  // 0 or 1
    bool operator==(const Challenge&) const = default;
};

struct Response {
    Scalar z;
    bool operator==(const Response&) const = default;
};

struct RoundTranscript {
    Commitment commitment;
    Challenge challenge;
    Response response;
    bool accepted = false;
};

enum class Scope { contract, term };

/// What a proof is about: the whole contract, or one named term.
struct ProofTarget {
    Scope scope = Scope::contract;
    std::string label;  // empty iff scope == contract

    static ProofTarget whole_contract() { return {Scope::contract, ""}; }
    static ProofTarget term(std::string label) { return {Scope::term, std::move(label)}; }
    bool operator==(const ProofTarget&) const = default;
};

struct ProofTranscript {
    std::string contract_id;
    ProofTarget target;
    std::uint32_t k = 0;
    std::vector<RoundTranscript> rounds;
    bool overall = false;
    std::string params_id;
};

inline Challenge random_challenge(RandomSource& rng) {
    return Challenge{random_bit(rng)};
}

/// Verdict from public values only: (s, i, z) against the published e.
/// Non-members and out-of-range values are rejected, never evaluated.
inline bool verify_round(const Commitment& commitment, const Challenge& challenge,
                         const Response& response, const GroupElement& e,
                         const GroupParams& params) {
    if (challenge.bit != 0 && challenge.bit != 1) return false;
    if (response.z.v < 0 || response.z.v >= params.q) return false;
    if (!is_subgroup_member(commitment.s, params)) return false;
    if (!is_subgroup_member(e, params)) return false;
    GroupElement lhs = mod_exp(params.g, response.z, params);
    GroupElement rhs =
        challenge.bit == 1 ? mul(commitment.s, e, params) : commitment.s;
    return lhs == rhs;
}

enum class Phase { awaiting_commit, awaiting_challenge, awaiting_response, done };

/// Prover half of one proof session. Holds the per-round nonce r between
/// commit and respond; the nonce is single-use and cleared as soon as the
/// response is computed (reusing r across rounds would let a verifier
/// recover x by subtracting two responses).
class ProverSession {
public:
    explicit ProverSession(GroupParams params) : params_(std::move(params)) {}

    Commitment commit(RandomSource& rng) {
        if (phase_ != Phase::awaiting_commit)
            throw ProtocolOrderError("commit out of order");
        nonce_ = random_scalar(params_, rng);
        Commitment c{mod_exp(params_.g, nonce_, params_)};
        phase_ = Phase::awaiting_challenge;
        return c;
    }

    Response respond(const Scalar& witness, const Challenge& challenge) {
        if (phase_ != Phase::awaiting_challenge)
            throw ProtocolOrderError("respond before commit");
        if (challenge.bit != 0 && challenge.bit != 1)
            throw DecodeError("challenge bit out of range");
        Response r{challenge.bit == 1 ? scalar_add(nonce_, witness, params_)
                                      : nonce_};
        nonce_ = Scalar{0};  // single-use
        ++round_;
        phase_ = Phase::awaiting_commit;
        return r;
    }

    void finish() { phase_ = Phase::done; }
    Phase phase() const { return phase_; }
    std::uint32_t round() const { return round_; }

private:
    GroupParams params_;
    Scalar nonce_{0};
    Phase phase_ = Phase::awaiting_commit;
    std::uint32_t round_ = 0;
};

/// Verifier half. Fed with received messages in strict order; every verdict
/// is a pure function of public values.
class VerifierSession {
public:
    VerifierSession(GroupParams params, GroupElement evidence)
        : params_(std::move(params)), e_(std::move(evidence)) {
        if (!is_subgroup_member(e_, params_))
            throw ParamError("evidence value is not a subgroup member");
    }

    void receive_commitment(const Commitment& c) {
        if (phase_ != Phase::awaiting_commit)
            throw ProtocolOrderError("commitment out of order");
        if (!is_subgroup_member(c.s, params_))
            throw DecodeError("commitment is not a subgroup member");
        current_ = c;
        phase_ = Phase::awaiting_challenge;
    }

    Challenge issue_challenge(RandomSource& rng) {
        if (phase_ != Phase::awaiting_challenge)
            throw ProtocolOrderError("challenge before commit");
        current_challenge_ = random_challenge(rng);
        phase_ = Phase::awaiting_response;
        return current_challenge_;
    }

    bool receive_response(const Response& r) {
        if (phase_ != Phase::awaiting_response)
            throw ProtocolOrderError("response out of order");
        // s and e already passed the membership checks on arrival, so only
        // the response range and the equation itself are left; the verdict
        // is exactly what verify_round would return.
        bool ok = r.z.v >= 0 && r.z.v < params_.q;
        if (ok) {
            GroupElement lhs = mod_exp(params_.g, r.z, params_);
            GroupElement rhs = current_challenge_.bit == 1
                                   ? mul(current_.s, e_, params_)
                                   : current_.s;
            ok = lhs == rhs;
        }
        ++round_;
        phase_ = Phase::awaiting_commit;
        return ok;
    }

    void finish() { phase_ = Phase::done; }
    Phase phase() const { return phase_; }
    std::uint32_t round() const { return round_; }
    const GroupElement& evidence() const { return e_; }

private:
    GroupParams params_;
    GroupElement e_;
    Commitment current_{};
    Challenge current_challenge_{};
    Phase phase_ = Phase::awaiting_commit;
    std::uint32_t round_ = 0;
};

/// Anything that can play the prover side round by round.
class ProverEndpoint {
public:
    virtual ~ProverEndpoint() = default;
    virtual Commitment begin_round() = 0;
    virtual Response answer(const Challenge& challenge) = 0;
};

class HonestProver final : public ProverEndpoint {
public:
    HonestProver(const GroupParams& params, Scalar witness, RandomSource& rng)
        : session_(params), witness_(std::move(witness)), rng_(&rng) {}

    Commitment begin_round() override { return session_.commit(*rng_); }
    Response answer(const Challenge& challenge) override {
        return session_.respond(witness_, challenge);
    }

private:
    ProverSession session_;
    Scalar witness_;
    RandomSource* rng_;
};

/// Witnessless cheater: guesses the challenge bit before committing and
/// prepares the unique (s, z) pair that passes for the guessed bit. Right
/// half the time, which is the best any fixed strategy can do.
class RandomGuessProver final : public ProverEndpoint {
public:
    RandomGuessProver(GroupParams params, GroupElement evidence, RandomSource& rng)
        : params_(std::move(params)), e_(std::move(evidence)), rng_(&rng) {}

    Commitment begin_round() override {
        guess_ = random_bit(*rng_);
        z_ = random_scalar(params_, *rng_);
        GroupElement gz = mod_exp(params_.g, z_, params_);
        s_ = guess_ == 1 ? mul(gz, inverse(e_, params_), params_) : gz;
        return Commitment{s_};
    }

    Response answer(const Challenge&) override { return Response{z_}; }

private:
    GroupParams params_;
    GroupElement e_;
    RandomSource* rng_;
    Scalar z_{0};
    GroupElement s_{};
    int guess_ = 0;
};

/// Runs k strictly sequential rounds between an in-process prover and
/// verifier. Accepts overall iff every round accepts.
inline ProofTranscript run_protocol(ProverEndpoint& prover, VerifierSession& verifier,
                                    std::uint32_t k, RandomSource& verifier_rng,
                                    const std::string& contract_id,
                                    const ProofTarget& target,
                                    const std::string& group_id) {
    if (k < 1) throw Error("round count must be at least 1");
    ProofTranscript t;
    t.contract_id = contract_id;
    t.target = target;
    t.k = k;
    t.params_id = group_id;
    t.overall = true;
    for (std::uint32_t j = 0; j < k; ++j) {
        Commitment c = prover.begin_round();
        verifier.receive_commitment(c);
        Challenge ch = verifier.issue_challenge(verifier_rng);
        Response z = prover.answer(ch);
        bool ok = verifier.receive_response(z);
        t.rounds.push_back({c, ch, z, ok});
        t.overall = t.overall && ok;
    }
    verifier.finish();
    return t;
}

/// Accepting round produced without the witness: draw z first, then solve
/// for the commitment (s = g^z for i=0, s = g^z * e^-1 for i=1). For each
/// challenge bit the output distribution over (s, z) equals the honest
/// prover's, which is the zero-knowledge argument in executable form.
inline RoundTranscript simulate_transcript(const GroupElement& e,
                                           const Challenge& challenge,
                                           const GroupParams& params,
                                           RandomSource& rng) {
    if (challenge.bit != 0 && challenge.bit != 1)
        throw DecodeError("challenge bit out of range");
    if (!is_subgroup_member(e, params))
        throw ParamError("evidence value is not a subgroup member");
    Scalar z = random_scalar(params, rng);
    GroupElement gz = mod_exp(params.g, z, params);
    GroupElement s = challenge.bit == 1 ? mul(gz, inverse(e, params), params) : gz;
    return RoundTranscript{Commitment{s}, challenge, Response{z}, true};
}

/// Special-soundness identity: two accepting rounds with the same
/// commitment and both challenge values pin the witness down exactly.
inline Scalar extract_witness(const Response& z0, const Response& z1,
                              const GroupParams& params) {
    return scalar_sub(z1.z, z0.z, params);
}

/// Independent proof per term label, k rounds each. A prover whose witness
/// lacks a label still plays and loses (it cannot answer i=1 rounds).
inline std::vector<ProofTranscript> run_term_protocol(
    const SecretWitness& witness, const EvidenceRecord& record,
    const std::vector<std::string>& labels, std::uint32_t rounds_per_term,
    RandomSource& prover_rng, RandomSource& verifier_rng,
    const GroupParams& params) {
    std::vector<ProofTranscript> out;
    for (const std::string& label : labels) {
        const GroupElement* ev = record.find_term(label);
        if (!ev) throw LabelError("no evidence for term label '" + label + "'");
        const Scalar* w = witness.find_term(label);
        HonestProver prover(params, w ? *w : Scalar{0}, prover_rng);
        VerifierSession verifier(params, *ev);
        out.push_back(run_protocol(prover, verifier, rounds_per_term, verifier_rng,
                                   record.contract_id, ProofTarget::term(label),
                                   record.params_id));
    }
    return out;
}

// ---- transcript serialization (canonical JSON) ----

inline Json transcript_to_json(const ProofTranscript& t) {
    Json rounds = Json::array();
    for (const RoundTranscript& r : t.rounds)
        rounds.push_back(Json{{"challenge", r.challenge.bit},
                              {"commitment", bigint_to_hex(r.commitment.s.v)},
                              {"response", bigint_to_hex(r.response.z.v)},
                              {"verdict", r.accepted}});
    return Json{{"contract_id", t.contract_id},
                {"k", t.k},
                {"label", t.target.label},
                {"overall", t.overall},
                {"params_id", t.params_id},
                {"rounds", rounds},
                {"scope", t.target.scope == Scope::term ? "term" : "contract"}};
}

inline ProofTranscript transcript_from_json(const Json& j) {
    require_fields(j, {"contract_id", "k", "label", "overall", "params_id",
                       "rounds", "scope"});
    ProofTranscript t;
    t.contract_id = get_string(j, "contract_id");
    if (!valid_contract_id(t.contract_id)) throw ParseError("invalid contract id");
    std::uint64_t k = get_u64(j, "k");
    if (k < 1 || k > 1'000'000) throw ParseError("k out of range");
    t.k = static_cast<std::uint32_t>(k);
    std::string scope = get_string(j, "scope");
    std::string label = get_string(j, "label");
    if (scope == "contract") {
        if (!label.empty()) throw ParseError("contract-scope transcript with a label");
        t.target = ProofTarget::whole_contract();
    } else if (scope == "term") {
        if (!valid_label(label)) throw ParseError("invalid term label");
        t.target = ProofTarget::term(label);
    } else {
        throw ParseError("unknown scope: " + scope);
    }
    t.overall = get_bool(j, "overall");
    t.params_id = get_string(j, "params_id");
    const Json& rounds = j.at("rounds");
    if (!rounds.is_array()) throw ParseError("rounds must be an array");
    bool conjunction = true;
    for (const Json& r : rounds) {
        require_fields(r, {"challenge", "commitment", "response", "verdict"});
        std::uint64_t bit = get_u64(r, "challenge");
        if (bit > 1) throw ParseError("challenge bit out of range");
        RoundTranscript round;
        round.challenge = Challenge{static_cast<int>(bit)};
        round.commitment = Commitment{GroupElement{bigint_from_hex(get_string(r, "commitment"))}};
        round.response = Response{Scalar{bigint_from_hex(get_string(r, "response"))}};
        round.accepted = get_bool(r, "verdict");
        conjunction = conjunction && round.accepted;
        t.rounds.push_back(std::move(round));
    }
    if (t.rounds.size() != t.k) throw ParseError("k does not match round count");
    if (t.overall != conjunction)
        throw ParseError("overall verdict inconsistent with rounds");
    return t;
}

/// Recomputes every verdict of a stored transcript against the published
/// evidence. True iff all recorded verdicts are what the public values
/// dictate; whether the proof convinces is then transcript.overall.
inline bool recheck_transcript(const ProofTranscript& t, const GroupElement& e,
                               const GroupParams& params) {
    bool conjunction = true;
    for (const RoundTranscript& r : t.rounds) {
        bool recomputed = verify_round(r.commitment, r.challenge, r.response, e, params);
        if (recomputed != r.accepted) return false;
        conjunction = conjunction && recomputed;
    }
    return t.overall == conjunction && t.k == t.rounds.size();
}

inline void save_transcript(const ProofTranscript& t, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path);
    out << canonical_dump(transcript_to_json(t)) << "\n";
    if (!out) throw IoError("write failed: " + path);
}

inline ProofTranscript load_transcript(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    std::string text = buf.str();
    while (!text.empty() && (text.back() == '\n' || text.back() == '\r')) text.pop_back();
    return transcript_from_json(parse_json(text));
}

}  // namespace zkn
