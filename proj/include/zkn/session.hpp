#pragma once

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "zkn/errors.hpp"
#include "zkn/ledger.hpp"
#include "zkn/net.hpp"
#include "zkn/rng.hpp"
#include "zkn/sigma.hpp"
#include "zkn/wire.hpp"

namespace zkn {

struct VerifierPolicy {
    std::uint32_t k = 40;
    std::vector<ProofTarget> allowed_targets;  // empty: any target may be proven
    std::uint32_t message_timeout_ms = 30'000;
    std::string transcript_dir;  // persist completed transcripts when non-empty
};

struct SessionOutcome {
    std::optional<ProofTranscript> transcript;
    std::string abort_reason;  // empty when the session ran to completion
};

namespace detail {

inline void send_abort_quietly(Socket& sock, const std::string& session,
                               std::uint64_t round, const std::string& reason) {
    try {
        send_message(sock, WireMessage{session, round, AbortBody{reason}});
    } catch (const Error&) {
        // peer already gone; nothing to do
    }
}

inline constexpr const char* kNullSession = "00000000000000000000000000000000";

}  // namespace detail

/// Runs the verifier side of one connection: hello, then policy.k rounds,
/// then final-result. Every deviation from the expected message order is
/// answered with a single abort and the session ends. Only public values
/// are ever read from or written to the socket.
inline SessionOutcome handle_verifier_session(Socket& sock, const Ledger& ledger,
                                              const GroupParams& params,
                                              const VerifierPolicy& policy,
                                              RandomSource& rng) {
    sock.set_receive_timeout(policy.message_timeout_ms);
    std::string session = detail::kNullSession;
    std::uint64_t round = 0;

    auto abort_with = [&](const std::string& reason) -> SessionOutcome {
        detail::send_abort_quietly(sock, session, round, reason);
        return {std::nullopt, reason};
    };

    WireMessage hello_msg;
    try {
        hello_msg = read_message(sock);
    } catch (const TransportError& e) {
        return {std::nullopt, std::string("transport: ") + e.what()};
    } catch (const Error&) {
        return abort_with("malformed-message");
    }
    const auto* hello = std::get_if<HelloBody>(&hello_msg.body);
    if (!hello || hello_msg.round != 0) return abort_with("protocol-order");
    session = hello_msg.session;

    if (!policy.allowed_targets.empty() &&
        std::find(policy.allowed_targets.begin(), policy.allowed_targets.end(),
                  hello->target) == policy.allowed_targets.end())
        return abort_with("target-not-allowed");

    const EvidenceRecord* record = ledger.find_evidence(hello->contract_id);
    if (!record) return abort_with("unknown-contract");
    if (record->params_id != params_id(params)) return abort_with("params-mismatch");

    const GroupElement* evidence = &record->e;
    if (hello->target.scope == Scope::term) {
        evidence = record->find_term(hello->target.label);
        if (!evidence) return abort_with("unknown-label");
    }

    std::optional<VerifierSession> verifier;
    try {
        verifier.emplace(params, *evidence);
    } catch (const ParamError&) {
        return abort_with("invalid-evidence");
    }

    ProofTranscript transcript;
    transcript.contract_id = hello->contract_id;
    transcript.target = hello->target;
    transcript.k = policy.k;
    transcript.params_id = params_id(params);
    transcript.overall = true;

    try {
        for (std::uint32_t j = 1; j <= policy.k; ++j) {
            round = j;
            WireMessage commit_msg;
            try {
                commit_msg = read_message(sock);
            } catch (const TransportError& e) {
                return abort_with(
                    std::string(e.what()).find("timed out") != std::string::npos
                        ? "timeout"
                        : "transport-failure");
            } catch (const Error&) {
                return abort_with("malformed-message");
            }
            const auto* commit = std::get_if<CommitBody>(&commit_msg.body);
            if (!commit || commit_msg.session != session || commit_msg.round != j)
                return abort_with("protocol-order");

            Commitment c{GroupElement{commit->s}};
            try {
                verifier->receive_commitment(c);
            } catch (const DecodeError&) {
                return abort_with("malformed-commitment");
            }

            Challenge challenge = verifier->issue_challenge(rng);
            send_message(sock, WireMessage{session, j, ChallengeBody{challenge.bit}});

            WireMessage response_msg;
            try {
                response_msg = read_message(sock);
            } catch (const TransportError& e) {
                return abort_with(
                    std::string(e.what()).find("timed out") != std::string::npos
                        ? "timeout"
                        : "transport-failure");
            } catch (const Error&) {
                return abort_with("malformed-message");
            }
            const auto* response = std::get_if<ResponseBody>(&response_msg.body);
            if (!response || response_msg.session != session || response_msg.round != j)
                return abort_with("protocol-order");

            Response z{Scalar{response->z}};
            bool ok = verifier->receive_response(z);
            transcript.rounds.push_back({c, challenge, z, ok});
            transcript.overall = transcript.overall && ok;
            send_message(sock,
                         WireMessage{session, j, RoundResultBody{ok, j < policy.k}});
        }
        verifier->finish();
        send_message(sock, WireMessage{session, policy.k,
                                       FinalResultBody{transcript.overall, policy.k}});
    } catch (const TransportError&) {
        // peer vanished while we were sending; nothing left to notify
        return {std::nullopt, "transport-failure"};
    }

    if (!policy.transcript_dir.empty()) {
        std::filesystem::create_directories(policy.transcript_dir);
        save_transcript(transcript, policy.transcript_dir + "/" + session + ".json");
    }
    return {transcript, ""};
}

/// Accept loop: sessions are handled one at a time and share the ledger
/// read-only. Runs until max_sessions connections have been served
/// (0 = forever) or *stop becomes true.
inline std::vector<ProofTranscript> serve_verifier(
    TcpListener& listener, const Ledger& ledger, const GroupParams& params,
    const VerifierPolicy& policy, std::size_t max_sessions = 0,
    RandomSource* rng = nullptr,
    const std::function<void(const SessionOutcome&)>& sink = {},
    const std::atomic<bool>* stop = nullptr) {
    std::optional<SystemRandomSource> own_rng;
    if (!rng) rng = &own_rng.emplace();
    std::vector<ProofTranscript> completed;
    std::size_t handled = 0;
    while ((max_sessions == 0 || handled < max_sessions) && !(stop && *stop)) {
        std::optional<Socket> sock = listener.accept(200);
        if (!sock) continue;
        SessionOutcome outcome =
            handle_verifier_session(*sock, ledger, params, policy, *rng);
        ++handled;
        if (outcome.transcript) completed.push_back(*outcome.transcript);
        if (sink) sink(outcome);
    }
    return completed;
}

struct ProveOptions {
    std::uint32_t requested_k = 40;  // sent in hello; the verifier's policy decides
    std::uint32_t message_timeout_ms = 30'000;
};

/// Client side of the protocol. Draws one nonce per round from prover_rng;
/// the session token comes from session_rng so seeded protocol streams
/// stay aligned with in-process runs. Returns the transcript whether the
/// verifier accepted or not; throws TransportError if the connection never
/// got going and SessionAborted if the verifier aborted mid-way.
inline ProofTranscript run_prover(const std::string& host, std::uint16_t port,
                                  const GroupParams& params, const Scalar& witness,
                                  const std::string& contract_id,
                                  const ProofTarget& target,
                                  const ProveOptions& options,
                                  RandomSource& prover_rng,
                                  RandomSource& session_rng) {
    if (options.requested_k < 1) throw Error("round count must be at least 1");
    Socket sock = connect_to(host, port);
    sock.set_receive_timeout(options.message_timeout_ms);
    std::string session = new_session_token(session_rng);

    send_message(sock, WireMessage{session, 0,
                                   HelloBody{contract_id, target, options.requested_k}});

    ProofTranscript transcript;
    transcript.contract_id = contract_id;
    transcript.target = target;
    transcript.params_id = params_id(params);
    transcript.overall = true;

    // rounds completed so far, serialized for the abort error
    auto partial_json = [&]() -> std::string {
        if (transcript.rounds.empty()) return {};
        ProofTranscript p = transcript;
        p.k = static_cast<std::uint32_t>(p.rounds.size());
        return canonical_dump(transcript_to_json(p));
    };
    auto abort_session = [&](const std::string& reason, bool notify_peer,
                             std::uint64_t round) -> SessionAborted {
        if (notify_peer) detail::send_abort_quietly(sock, session, round, reason);
        return SessionAborted(reason, transcript.rounds.size(), partial_json());
    };

    ProverSession prover(params);
    try {
        auto receive_or_abort = [&](std::uint64_t expected_round) -> WireMessage {
            WireMessage m = read_message(sock);
            if (const auto* a = std::get_if<AbortBody>(&m.body))
                throw abort_session(a->reason, false, expected_round);
            if (m.session != session || m.round != expected_round)
                throw abort_session("unexpected-message-from-verifier", true,
                                    expected_round);
            return m;
        };

        for (std::uint64_t j = 1;; ++j) {
            Commitment c = prover.commit(prover_rng);
            send_message(sock, WireMessage{session, j, CommitBody{c.s.v}});

            WireMessage challenge_msg = receive_or_abort(j);
            const auto* ch = std::get_if<ChallengeBody>(&challenge_msg.body);
            if (!ch) throw abort_session("unexpected-message-from-verifier", true, j);
            Challenge challenge{ch->bit};

            Response z = prover.respond(witness, challenge);
            send_message(sock, WireMessage{session, j, ResponseBody{z.z.v}});

            WireMessage result_msg = receive_or_abort(j);
            const auto* rr = std::get_if<RoundResultBody>(&result_msg.body);
            if (!rr) throw abort_session("unexpected-message-from-verifier", true, j);
            transcript.rounds.push_back({c, challenge, z, rr->accept});
            transcript.overall = transcript.overall && rr->accept;
            if (!rr->more) break;
        }

        WireMessage final_msg = receive_or_abort(transcript.rounds.size());
        const auto* fr = std::get_if<FinalResultBody>(&final_msg.body);
        if (!fr || fr->k != transcript.rounds.size() || fr->overall != transcript.overall)
            throw abort_session("inconsistent-final-result", true,
                                transcript.rounds.size());
        transcript.k = fr->k;
    } catch (const TransportError& e) {
        // mid-session transport death becomes a session abort that carries
        // whatever rounds finished; connect failures above stay transport
        // errors with no transcript attached
        throw SessionAborted(std::string("transport: ") + e.what(),
                             transcript.rounds.size(), partial_json());
    } catch (const FrameError& e) {
        throw SessionAborted(std::string("malformed-frame: ") + e.what(),
                             transcript.rounds.size(), partial_json());
    } catch (const DecodeError& e) {
        throw SessionAborted(std::string("malformed-message: ") + e.what(),
                             transcript.rounds.size(), partial_json());
    }
    prover.finish();
    return transcript;
}

}  // namespace zkn
