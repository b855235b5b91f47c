// Walks the whole lifecycle in-process: derive a witness from contract
// content, publish evidence on the ledger, prove knowledge interactively,
// and re-verify the stored transcript from public data alone.

#include <iostream>

#include "zkn/zkn.hpp"

int main() {
    using namespace zkn;

    GroupParams params = toy_group();
    Drbg prover_rng(1), verifier_rng(2), salt_rng(3);

    ContractContent content;
    content.body = to_bytes(
        "Lodging agreement: the tenant rents 12 Elm Street from 2024-01-01 "
        "to 2024-02-29 at 900/month.");
    content.terms = {{"period", to_bytes("2024-01-01..2024-02-29")},
                     {"address", to_bytes("12 Elm Street")}};

    Bytes salt = salt_rng.bytes(16);
    SecretWitness witness = derive_witness(content, view(salt), params);
    EvidenceRecord record = generate_evidence(witness, params, "lodging-2024", 1700000000);

    Ledger ledger;
    ledger.append_evidence(record, 1700000001);
    std::cout << "ledger block 0: " << canonical_dump(block_to_json(ledger.blocks()[0]))
              << "\n\n";

    // whole-contract proof, 20 rounds
    HonestProver prover(params, witness.x, prover_rng);
    VerifierSession verifier(params, record.e);
    ProofTranscript proof = run_protocol(prover, verifier, 20, verifier_rng,
                                         record.contract_id,
                                         ProofTarget::whole_contract(),
                                         record.params_id);
    std::cout << "whole-contract proof accepted: " << proof.overall << "\n";

    // per-term proofs: the prover can show it knows just the period
    auto term_proofs = run_term_protocol(witness, record, {"period"}, 20,
                                         prover_rng, verifier_rng, params);
    std::cout << "period proof accepted: " << term_proofs[0].overall << "\n";

    // anyone can recheck the stored transcript against the ledger
    const EvidenceRecord& stored = ledger.get_evidence("lodging-2024");
    std::cout << "offline recheck: " << recheck_transcript(proof, stored.e, params)
              << "\n";

    // a party that misremembers the content cannot prove it
    ContractContent wrong = content;
    wrong.body = to_bytes("Lodging agreement: the tenant rents 13 Elm Street ...");
    SecretWitness bad = derive_witness(wrong, view(salt), params);
    HonestProver impostor(params, bad.x, prover_rng);
    VerifierSession verifier2(params, record.e);
    ProofTranscript rejected = run_protocol(impostor, verifier2, 20, verifier_rng,
                                            record.contract_id,
                                            ProofTarget::whole_contract(),
                                            record.params_id);
    std::cout << "impostor accepted: " << rejected.overall << "\n";
    return 0;
}
