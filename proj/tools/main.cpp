// zkn: register confidential-contract evidence on a hash-chained ledger and
// prove knowledge of the content interactively, in zero knowledge.

#include <CLI11.hpp>

#include <termios.h>
#include <unistd.h>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <memory>
#include <optional>
#include <string>

#include "zkn/zkn.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailed = 1;   // verification, audit or registration failure
constexpr int kExitUsage = 2;    // bad flags or bad operator input
constexpr int kExitIo = 3;       // unreadable/unwritable files, transport

constexpr const char* kSaltEnvVar = "ZKN_SALT";

struct UsageError : zkn::Error {
    using Error::Error;
};

using Clock = std::function<std::uint64_t()>;

struct CommonOptions {
    std::string params_arg = "production";  // production | toy | <file>
    std::optional<std::uint64_t> seed;
    bool json = false;

    bool seeded() const { return seed.has_value(); }

    zkn::GroupParams load_params() const {
        if (seeded() && params_arg == "production")
            throw UsageError("--seed is a test facility; not allowed with the production profile");
        zkn::GroupParams params;
        if (params_arg == "toy") params = zkn::toy_group();
        else if (params_arg == "production") params = zkn::modp2048_group();
        else params = zkn::load_params(params_arg);
        zkn::ParamsReport report = zkn::validate_params(params);
        if (!report.ok)
            throw zkn::ParamError("group parameters invalid: " + report.violation);
        return params;
    }

    std::unique_ptr<zkn::RandomSource> make_rng(std::uint64_t stream = 0) const {
        if (seeded()) return std::make_unique<zkn::Drbg>(*seed + stream);
        return std::make_unique<zkn::SystemRandomSource>();
    }

    Clock make_clock() const {
        if (seeded()) {
            auto counter = std::make_shared<std::uint64_t>(1'700'000'000);
            return [counter] { return (*counter)++; };
        }
        return [] {
            return static_cast<std::uint64_t>(
                std::chrono::duration_cast<std::chrono::seconds>(
                    std::chrono::system_clock::now().time_since_epoch())
                    .count());
        };
    }
};

void add_common(CLI::App* cmd, CommonOptions& common) {
    cmd->add_option("--params", common.params_arg,
                    "group parameters: 'production', 'toy', or a parameter file");
    cmd->add_option("--seed", common.seed,
                    "deterministic randomness for tests (toy/file profiles only)");
    cmd->add_flag("--json", common.json, "machine-readable JSON output");
}

void emit(const CommonOptions& common, const zkn::Json& json,
          const std::string& human) {
    if (common.json)
        std::cout << zkn::canonical_dump(json) << "\n";
    else
        std::cout << human << "\n";
    std::cout.flush();
}

// Salt comes from the environment or an interactive prompt, never from a
// positional argument that would end up in shell history.
zkn::Bytes read_salt() {
    if (const char* env = std::getenv(kSaltEnvVar)) {
        try {
            return zkn::from_hex(env);
        } catch (const zkn::ParseError& e) {
            throw UsageError(std::string(kSaltEnvVar) + " must be hex: " + e.what());
        }
    }
    if (::isatty(STDIN_FILENO)) {
        std::cerr << "salt (hex, not echoed): " << std::flush;
        termios before{};
        bool restore = ::tcgetattr(STDIN_FILENO, &before) == 0;
        if (restore) {
            termios noecho = before;
            noecho.c_lflag &= ~static_cast<tcflag_t>(ECHO);
            ::tcsetattr(STDIN_FILENO, TCSANOW, &noecho);
        }
        std::string line;
        std::getline(std::cin, line);
        if (restore) ::tcsetattr(STDIN_FILENO, TCSANOW, &before);
        std::cerr << "\n";
        try {
            return zkn::from_hex(line);
        } catch (const zkn::ParseError& e) {
            throw UsageError(std::string("salt must be hex: ") + e.what());
        }
    }
    throw UsageError(std::string("set ") + kSaltEnvVar +
                     " (hex) or run interactively to be prompted");
}

zkn::Ledger load_or_new_ledger(const std::string& path) {
    if (!std::filesystem::exists(path)) return zkn::Ledger{};
    return zkn::load_ledger(path);
}

zkn::ProofTarget parse_target(const std::string& label) {
    return label.empty() ? zkn::ProofTarget::whole_contract()
                         : zkn::ProofTarget::term(label);
}

// ---- subcommand bodies ----

int cmd_params_gen(const CommonOptions& common, const std::string& profile,
                   unsigned bits, const std::string& out_path) {
    zkn::GroupParams params;
    if (profile == "toy") {
        params = zkn::toy_group();
    } else if (profile == "production") {
        params = zkn::modp2048_group();
    } else if (profile == "fresh") {
        auto rng = common.make_rng();
        params = zkn::generate_group(bits, *rng);
    } else {
        throw UsageError("profile must be toy, production or fresh");
    }
    zkn::ParamsReport report = zkn::validate_params(params);
    if (!report.ok) throw zkn::ParamError("generated parameters invalid: " + report.violation);
    zkn::save_params(params, out_path);
    emit(common,
         zkn::Json{{"path", out_path},
                   {"params_id", zkn::params_id(params)},
                   {"bits", zkn::bit_length(params.p)}},
         "wrote " + std::to_string(zkn::bit_length(params.p)) + "-bit group " +
             zkn::params_id(params) + " to " + out_path);
    return kExitOk;
}

int cmd_register(const CommonOptions& common, const std::string& content_path,
                 const std::string& contract_id, const std::string& ledger_path) {
    zkn::GroupParams params = common.load_params();
    zkn::ContractContent content = zkn::load_contract(content_path);
    zkn::Bytes salt = read_salt();
    Clock clock = common.make_clock();

    zkn::SecretWitness witness = zkn::derive_witness(content, zkn::view(salt), params);
    zkn::EvidenceRecord record =
        zkn::generate_evidence(witness, params, contract_id, clock());

    zkn::Ledger ledger = load_or_new_ledger(ledger_path);
    std::size_t block = ledger.append_evidence(record, clock());
    zkn::save_ledger(ledger, ledger_path);

    emit(common,
         zkn::Json{{"contract_id", contract_id},
                   {"e", zkn::bigint_to_hex(record.e.v)},
                   {"block", block},
                   {"terms", record.term_evidence.size()},
                   {"params_id", record.params_id}},
         "registered " + contract_id + " in block " + std::to_string(block) +
             "\ne = " + zkn::bigint_to_hex(record.e.v));
    return kExitOk;
}

int cmd_prove(const CommonOptions& common, const std::string& endpoint,
              const std::string& content_path, const std::string& contract_id,
              std::uint32_t k, const std::string& target_label,
              std::string transcript_path) {
    zkn::GroupParams params = common.load_params();
    zkn::ContractContent content = zkn::load_contract(content_path);
    zkn::Bytes salt = read_salt();
    zkn::SecretWitness witness = zkn::derive_witness(content, zkn::view(salt), params);

    zkn::ProofTarget target = parse_target(target_label);
    const zkn::Scalar* scalar = &witness.x;
    if (target.scope == zkn::Scope::term) {
        scalar = witness.find_term(target.label);
        if (!scalar)
            throw UsageError("content has no term labelled '" + target.label + "'");
    }

    auto [host, port] = zkn::parse_endpoint(endpoint);
    auto prover_rng = common.make_rng(1);
    auto session_rng = common.make_rng(2);
    zkn::ProveOptions options;
    options.requested_k = k;

    zkn::ProofTranscript transcript =
        zkn::run_prover(host, port, params, *scalar, contract_id, target, options,
                        *prover_rng, *session_rng);

    if (transcript_path.empty())
        transcript_path = contract_id +
                          (target.scope == zkn::Scope::term ? "-" + target.label : "") +
                          ".transcript.json";
    zkn::save_transcript(transcript, transcript_path);

    emit(common,
         zkn::Json{{"accepted", transcript.overall},
                   {"k", transcript.k},
                   {"transcript", transcript_path}},
         std::string(transcript.overall ? "ACCEPTED" : "REJECTED") + " after " +
             std::to_string(transcript.k) + " rounds; transcript written to " +
             transcript_path);
    return transcript.overall ? kExitOk : kExitFailed;
}

int cmd_serve(const CommonOptions& common, const std::string& endpoint,
              const std::string& ledger_path, std::uint32_t k,
              std::uint64_t max_sessions, const std::string& transcript_dir,
              const std::vector<std::string>& target_labels) {
    zkn::GroupParams params = common.load_params();
    zkn::Ledger ledger = zkn::load_ledger(ledger_path);

    auto [host, port] = zkn::parse_endpoint(endpoint);
    zkn::TcpListener listener(host, port);
    zkn::VerifierPolicy policy;
    policy.k = k;
    policy.transcript_dir = transcript_dir;
    for (const std::string& label : target_labels)
        policy.allowed_targets.push_back(parse_target(label));

    std::string bound = host + ":" + std::to_string(listener.port());
    emit(common, zkn::Json{{"listening", bound}}, "listening on " + bound);

    auto rng = common.make_rng(3);
    auto sink = [&](const zkn::SessionOutcome& outcome) {
        if (outcome.transcript) {
            emit(common,
                 zkn::Json{{"contract_id", outcome.transcript->contract_id},
                           {"result", outcome.transcript->overall ? "accept" : "reject"},
                           {"k", outcome.transcript->k}},
                 std::string("session ") +
                     (outcome.transcript->overall ? "ACCEPTED" : "REJECTED") + " for " +
                     outcome.transcript->contract_id);
        } else {
            emit(common, zkn::Json{{"result", "abort"}, {"reason", outcome.abort_reason}},
                 "session aborted: " + outcome.abort_reason);
        }
    };
    zkn::serve_verifier(listener, ledger, params, policy, max_sessions, rng.get(), sink);
    return kExitOk;
}

int cmd_audit(const CommonOptions& common, const std::string& ledger_path) {
    zkn::Ledger ledger = zkn::load_ledger(ledger_path);  // throws on tamper
    zkn::ChainReport report = ledger.verify_chain();
    if (!report.ok) {
        emit(common,
             zkn::Json{{"valid", false}, {"block", report.first_bad}, {"what", report.what}},
             "INVALID at block " + std::to_string(report.first_bad) + ": " + report.what);
        return kExitFailed;
    }
    emit(common, zkn::Json{{"valid", true}, {"blocks", ledger.size()}},
         "chain valid, " + std::to_string(ledger.size()) + " block(s)");
    return kExitOk;
}

int cmd_verify_transcript(const CommonOptions& common, const std::string& transcript_path,
                          const std::string& ledger_path) {
    zkn::GroupParams params = common.load_params();
    zkn::ProofTranscript transcript = zkn::load_transcript(transcript_path);
    zkn::Ledger ledger = zkn::load_ledger(ledger_path);

    const zkn::EvidenceRecord& record = ledger.get_evidence(transcript.contract_id);
    if (transcript.params_id != zkn::params_id(params)) {
        emit(common, zkn::Json{{"consistent", false}, {"why", "params-mismatch"}},
             "transcript was made under different group parameters");
        return kExitFailed;
    }
    const zkn::GroupElement* evidence = &record.e;
    if (transcript.target.scope == zkn::Scope::term) {
        evidence = record.find_term(transcript.target.label);
        if (!evidence) {
            emit(common, zkn::Json{{"consistent", false}, {"why", "unknown-label"}},
                 "ledger record has no term '" + transcript.target.label + "'");
            return kExitFailed;
        }
    }
    bool consistent = zkn::recheck_transcript(transcript, *evidence, params);
    bool accepted = consistent && transcript.overall;
    emit(common, zkn::Json{{"consistent", consistent}, {"accepted", accepted}},
         consistent ? (accepted ? "transcript verifies: ACCEPTED"
                                : "transcript verifies: proof was REJECTED")
                    : "transcript DOES NOT match the ledger evidence");
    return accepted ? kExitOk : kExitFailed;
}

int cmd_simulate_cheater(const CommonOptions& common, const std::string& ledger_path,
                         const std::string& contract_id, std::uint32_t k,
                         std::uint64_t trials, const std::string& target_label) {
    zkn::GroupParams params = common.load_params();
    zkn::Ledger ledger = zkn::load_ledger(ledger_path);
    const zkn::EvidenceRecord& record = ledger.get_evidence(contract_id);
    zkn::ProofTarget target = parse_target(target_label);
    const zkn::GroupElement* evidence = &record.e;
    if (target.scope == zkn::Scope::term) {
        evidence = record.find_term(target.label);
        if (!evidence) throw zkn::LabelError("no term '" + target.label + "' in record");
    }

    auto prover_rng = common.make_rng(4);
    auto verifier_rng = common.make_rng(5);
    std::uint64_t session_accepts = 0;
    std::uint64_t round_accepts = 0;
    for (std::uint64_t t = 0; t < trials; ++t) {
        zkn::RandomGuessProver cheater(params, *evidence, *prover_rng);
        zkn::VerifierSession verifier(params, *evidence);
        zkn::ProofTranscript transcript =
            zkn::run_protocol(cheater, verifier, k, *verifier_rng, contract_id, target,
                              record.params_id);
        session_accepts += transcript.overall ? 1 : 0;
        for (const zkn::RoundTranscript& r : transcript.rounds)
            round_accepts += r.accepted ? 1 : 0;
    }
    double per_round = static_cast<double>(round_accepts) / (static_cast<double>(trials) * k);
    double overall = static_cast<double>(session_accepts) / static_cast<double>(trials);
    double bound = std::pow(2.0, -static_cast<double>(k));
    emit(common,
         zkn::Json{{"trials", trials},
                   {"k", k},
                   {"round_acceptance", per_round},
                   {"overall_acceptance", overall},
                   {"bound", bound},
                   {"within_bound", overall <= bound * 4 + 1e-9}},
         "witnessless prover over " + std::to_string(trials) + " trials, k=" +
             std::to_string(k) + ":\n  per-round acceptance " + std::to_string(per_round) +
             " (expected 0.5)\n  overall acceptance " + std::to_string(overall) +
             " (bound 2^-" + std::to_string(k) + " = " + std::to_string(bound) + ")");
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"zkn: confidential-contract evidence with zero-knowledge verification"};
    app.require_subcommand(1);

    // params-gen
    CommonOptions pg_common;
    std::string pg_profile = "production";
    unsigned pg_bits = 2048;
    std::string pg_out;
    CLI::App* pg = app.add_subcommand("params-gen", "emit a group parameter file");
    pg->add_option("--profile", pg_profile, "toy | production | fresh")->capture_default_str();
    pg->add_option("--bits", pg_bits, "modulus size for --profile fresh")
        ->check(CLI::Range(16u, 8192u));
    pg->add_option("--out", pg_out, "output path")->required();
    add_common(pg, pg_common);

    // register
    CommonOptions reg_common;
    std::string reg_content, reg_id, reg_ledger;
    CLI::App* reg = app.add_subcommand("register", "derive evidence and append it to the ledger");
    reg->add_option("--content", reg_content, "contract content file")->required();
    reg->add_option("--id", reg_id, "contract id")->required();
    reg->add_option("--ledger", reg_ledger, "ledger file")->required();
    add_common(reg, reg_common);

    // prove
    CommonOptions prove_common;
    std::string prove_connect, prove_content, prove_id, prove_label, prove_out;
    std::uint32_t prove_k = 40;
    CLI::App* prove = app.add_subcommand("prove", "prove knowledge of content to a verifier");
    prove->add_option("--connect", prove_connect, "verifier host:port")->required();
    prove->add_option("--content", prove_content, "contract content file")->required();
    prove->add_option("--id", prove_id, "contract id")->required();
    prove->add_option("-k,--rounds", prove_k, "requested round count")
        ->check(CLI::PositiveNumber);
    prove->add_option("--target", prove_label, "term label (default: whole contract)");
    prove->add_option("--transcript-out", prove_out, "transcript output path");
    add_common(prove, prove_common);

    // serve
    CommonOptions serve_common;
    std::string serve_listen, serve_ledger, serve_dir;
    std::uint32_t serve_k = 40;
    std::uint64_t serve_max = 0;
    std::vector<std::string> serve_targets;
    CLI::App* serve = app.add_subcommand("serve", "run the verifier (arbitrator) endpoint");
    serve->add_option("--listen", serve_listen, "host:port (port 0 for ephemeral)")->required();
    serve->add_option("--ledger", serve_ledger, "ledger file")->required();
    serve->add_option("-k,--rounds", serve_k, "rounds per session")->check(CLI::PositiveNumber);
    serve->add_option("--max-sessions", serve_max, "stop after this many sessions (0 = forever)");
    serve->add_option("--transcript-dir", serve_dir, "directory for per-session transcripts");
    serve->add_option("--target", serve_targets,
                      "allowed target label ('' = whole contract); repeatable");
    add_common(serve, serve_common);

    // audit
    CommonOptions audit_common;
    std::string audit_ledger;
    CLI::App* audit = app.add_subcommand("audit", "verify the ledger hash chain");
    audit->add_option("--ledger", audit_ledger, "ledger file")->required();
    add_common(audit, audit_common);

    // verify-transcript
    CommonOptions vt_common;
    std::string vt_transcript, vt_ledger;
    CLI::App* vt = app.add_subcommand("verify-transcript",
                                      "re-verify a stored transcript against ledger evidence");
    vt->add_option("--transcript", vt_transcript, "transcript file")->required();
    vt->add_option("--ledger", vt_ledger, "ledger file")->required();
    add_common(vt, vt_common);

    // simulate-cheater
    CommonOptions sim_common;
    std::string sim_ledger, sim_id, sim_label;
    std::uint32_t sim_k = 1;
    std::uint64_t sim_trials = 0;
    CLI::App* sim = app.add_subcommand("simulate-cheater",
                                       "measure the witnessless prover's acceptance rate");
    sim->add_option("--ledger", sim_ledger, "ledger file")->required();
    sim->add_option("--id", sim_id, "contract id")->required();
    sim->add_option("-k,--rounds", sim_k, "rounds per trial")->check(CLI::PositiveNumber);
    sim->add_option("--trials", sim_trials, "number of trials")
        ->required()
        ->check(CLI::PositiveNumber);
    sim->add_option("--target", sim_label, "term label (default: whole contract)");
    add_common(sim, sim_common);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (pg->parsed())
            return cmd_params_gen(pg_common, pg_profile, pg_bits, pg_out);
        if (reg->parsed())
            return cmd_register(reg_common, reg_content, reg_id, reg_ledger);
        if (prove->parsed())
            return cmd_prove(prove_common, prove_connect, prove_content, prove_id,
                             prove_k, prove_label, prove_out);
        if (serve->parsed())
            return cmd_serve(serve_common, serve_listen, serve_ledger, serve_k,
                             serve_max, serve_dir, serve_targets);
        if (audit->parsed()) return cmd_audit(audit_common, audit_ledger);
        if (vt->parsed())
            return cmd_verify_transcript(vt_common, vt_transcript, vt_ledger);
        if (sim->parsed())
            return cmd_simulate_cheater(sim_common, sim_ledger, sim_id, sim_k,
                                        sim_trials, sim_label);
        return kExitUsage;
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const zkn::SaltError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const zkn::IoError& e) {
        std::cerr << "i/o error: " << e.what() << "\n";
        return kExitIo;
    } catch (const zkn::TransportError& e) {
        std::cerr << "transport error: " << e.what() << "\n";
        return kExitIo;
    } catch (const zkn::EntropyError& e) {
        std::cerr << "entropy error: " << e.what() << "\n";
        return kExitIo;
    } catch (const zkn::IntegrityError& e) {
        std::cerr << "integrity error: " << e.what() << "\n";
        return kExitFailed;
    } catch (const zkn::SessionAborted& e) {
        std::cerr << "session error: " << e.what() << " (after "
                  << e.rounds_completed << " completed rounds)\n";
        return kExitFailed;
    } catch (const zkn::ParseError& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return kExitIo;
    } catch (const zkn::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitFailed;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitFailed;
    }
}
