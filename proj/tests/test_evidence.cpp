#include <catch2/catch_amalgamated.hpp>

#include "support.hpp"
#include "zkn/evidence.hpp"

using namespace zkn;

namespace {

ContractContent sample_content() {
    ContractContent c;
    c.body = to_bytes("Lodging agreement for 12 Elm Street, 2024-01 through 2024-02.");
    c.terms = {{"period", to_bytes("2024-01..2024-02")},
               {"address", to_bytes("12 Elm Street")}};
    return c;
}

// Contract whose term values literally appear in the body, the way real
// contracts embed their own terms. Editing a term rewrites that span.
struct EmbeddedContract {
    std::vector<std::string> values;
    ContractContent content() const {
        ContractContent c;
        std::string body = "AGREEMENT";
        for (std::size_t i = 0; i < values.size(); ++i) {
            body += " clause" + std::to_string(i) + "=" + values[i] + ";";
            c.terms.emplace_back("clause" + std::to_string(i), to_bytes(values[i]));
        }
        c.body = to_bytes(body);
        return c;
    }
};

}  // namespace

TEST_CASE("derive_witness is deterministic") {
    GroupParams toy = toy_group();
    ContractContent c = sample_content();
    Bytes salt = to_bytes("0123456789abcdef");
    SecretWitness w1 = derive_witness(c, view(salt), toy);
    SecretWitness w2 = derive_witness(c, view(salt), toy);
    CHECK(w1.x == w2.x);
    CHECK(w1.term_witnesses == w2.term_witnesses);
}

TEST_CASE("different salts give different witnesses over a seeded corpus") {
    GroupParams prod = modp2048_group();
    ContractContent c = sample_content();
    Drbg rng(321);
    for (int i = 0; i < 1000; ++i) {
        Bytes salt_a = rng.bytes(16);
        Bytes salt_b = rng.bytes(16);
        REQUIRE(derive_witness(c, view(salt_a), prod).x !=
                derive_witness(c, view(salt_b), prod).x);
    }
}

TEST_CASE("term witnesses carry the contract's labels in order") {
    GroupParams toy = toy_group();
    ContractContent c = sample_content();
    SecretWitness w = derive_witness(c, view(to_bytes("0123456789abcdef")), toy);
    REQUIRE(w.term_witnesses.size() == 2);
    CHECK(w.term_witnesses[0].first == "period");
    CHECK(w.term_witnesses[1].first == "address");
}

TEST_CASE("derive_witness rejects bad inputs") {
    GroupParams toy = toy_group();
    ContractContent c = sample_content();
    CHECK_THROWS_AS(derive_witness(c, view(to_bytes("short")), toy), SaltError);
    ContractContent empty = c;
    empty.body.clear();
    Bytes salt = to_bytes("0123456789abcdef");
    CHECK_THROWS_AS(derive_witness(empty, view(salt), toy), ContentError);
    ContractContent dup = c;
    dup.terms.emplace_back("period", to_bytes("again"));
    CHECK_THROWS_AS(derive_witness(dup, view(salt), toy), ContentError);
    ContractContent bad_label = c;
    bad_label.terms.emplace_back("no spaces allowed", to_bytes("x"));
    CHECK_THROWS_AS(derive_witness(bad_label, view(salt), toy), ContentError);
}

TEST_CASE("generate_evidence computes g^x per target") {
    GroupParams toy = toy_group();
    SecretWitness w;
    w.x = Scalar{3};
    w.salt = to_bytes("0123456789abcdef");
    EvidenceRecord r = generate_evidence(w, toy, "c-1", 1700000000);
    CHECK(r.e.v == 8);  // 2^3 mod 23

    w.x = Scalar{0};
    CHECK(generate_evidence(w, toy, "c-1", 0).e.v == 1);

    w.term_witnesses = {{"period", Scalar{4}}};
    EvidenceRecord rt = generate_evidence(w, toy, "c-2", 0);
    REQUIRE(rt.term_evidence.size() == 1);
    CHECK(rt.term_evidence[0].second.v == 16);  // 2^4 mod 23

    CHECK_THROWS_AS(generate_evidence(w, toy, "bad id!", 0), ContentError);
}

TEST_CASE("serialized records never contain salt or content bytes") {
    GroupParams toy = toy_group();
    Drbg rng(777);
    for (int i = 0; i < 100; ++i) {
        ContractContent c;
        // bodies over 0x80..0xff can never appear in ASCII JSON output
        c.body = rng.bytes(40 + i % 50);
        for (auto& b : c.body) b |= 0x80;
        Bytes term_val = rng.bytes(12);
        for (auto& b : term_val) b |= 0x80;
        c.terms = {{"term0", term_val}};
        Bytes salt = rng.bytes(16);

        SecretWitness w = derive_witness(c, view(salt), toy);
        EvidenceRecord r = generate_evidence(w, toy, "c-" + std::to_string(i), i);
        std::string json = canonical_dump(record_to_json(r));
        ByteView artifact(reinterpret_cast<const std::uint8_t*>(json.data()), json.size());

        REQUIRE_FALSE(zkt::leaks_window(artifact, view(salt)));
        REQUIRE_FALSE(zkt::leaks_window(artifact, view(c.body)));
        REQUIRE_FALSE(zkt::leaks_window(artifact, view(term_val)));
        // the hex spellings must not appear either
        Bytes salt_hex = to_bytes(to_hex(view(salt)));
        Bytes body_hex = to_bytes(to_hex(view(c.body)));
        REQUIRE_FALSE(zkt::contains_bytes(artifact, view(salt_hex)));
        REQUIRE_FALSE(zkt::contains_bytes(artifact, view(body_hex)));
    }
}

TEST_CASE("verify_binding round-trips and detects mismatches") {
    // q must be large here: with a toy-sized exponent ring a mutated body
    // hash can collide mod q and mask the change
    GroupParams params = modp2048_group();
    ContractContent c = sample_content();
    Bytes salt = to_bytes("fedcba9876543210");
    SecretWitness w = derive_witness(c, view(salt), params);
    EvidenceRecord r = generate_evidence(w, params, "c-1", 42);

    CHECK(verify_binding(c, view(salt), r, params).ok);

    SECTION("one flipped body byte is always detected") {
        Drbg rng(9);
        for (int i = 0; i < 100; ++i) {
            ContractContent mutated = c;
            std::uint8_t which = 0;
            rng.fill(&which, 1);
            mutated.body[which % mutated.body.size()] ^= 0x01;
            BindingReport report = verify_binding(mutated, view(salt), r, params);
            REQUIRE_FALSE(report.ok);
            REQUIRE(std::find(report.mismatches.begin(), report.mismatches.end(),
                              "body") != report.mismatches.end());
        }
    }

    SECTION("changed term value names the failing label") {
        ContractContent mutated = c;
        mutated.terms[1].second = to_bytes("13 Oak Street");
        BindingReport report = verify_binding(mutated, view(salt), r, params);
        REQUIRE_FALSE(report.ok);
        CHECK(report.mismatches == std::vector<std::string>{"address"});
    }

    SECTION("wrong salt fails") {
        Bytes other = to_bytes("aaaaaaaaaaaaaaaa");
        CHECK_FALSE(verify_binding(c, view(other), r, params).ok);
    }
}

TEST_CASE("term independence: editing one term moves only its evidence and e") {
    GroupParams prod = modp2048_group();
    Bytes salt = to_bytes("0123456789abcdef");
    EmbeddedContract base{{"2024-01..2024-02", "12-Elm-Street", "900-per-month"}};

    SecretWitness w0 = derive_witness(base.content(), view(salt), prod);
    EvidenceRecord r0 = generate_evidence(w0, prod, "c-1", 0);

    EmbeddedContract edited = base;
    edited.values[1] = "13-Oak-Street";
    SecretWitness w1 = derive_witness(edited.content(), view(salt), prod);
    EvidenceRecord r1 = generate_evidence(w1, prod, "c-1", 0);

    CHECK(r0.e != r1.e);  // body text contains the term, so e moves too
    CHECK(r0.term_evidence[0].second == r1.term_evidence[0].second);
    CHECK(r0.term_evidence[1].second != r1.term_evidence[1].second);
    CHECK(r0.term_evidence[2].second == r1.term_evidence[2].second);
}

TEST_CASE("body-only edits leave term evidence untouched") {
    GroupParams toy = toy_group();
    Bytes salt = to_bytes("0123456789abcdef");
    ContractContent a = sample_content();
    ContractContent b = a;
    b.body.push_back('!');
    SecretWitness wa = derive_witness(a, view(salt), toy);
    SecretWitness wb = derive_witness(b, view(salt), toy);
    CHECK(wa.x != wb.x);
    CHECK(wa.term_witnesses == wb.term_witnesses);
}

TEST_CASE("evidence record JSON round-trips and is strict") {
    GroupParams toy = toy_group();
    ContractContent c = sample_content();
    SecretWitness w = derive_witness(c, view(to_bytes("0123456789abcdef")), toy);
    EvidenceRecord r = generate_evidence(w, toy, "c-1", 1700000000);

    Json j = record_to_json(r);
    EvidenceRecord back = record_from_json(j);
    CHECK(canonical_dump(record_to_json(back)) == canonical_dump(j));

    Json extra = j;
    extra["junk"] = 1;
    CHECK_THROWS_AS(record_from_json(extra), ParseError);
    Json missing = j;
    missing.erase("e");
    CHECK_THROWS_AS(record_from_json(missing), ParseError);
    Json bad_hex = j;
    bad_hex["e"] = "0F";
    CHECK_THROWS_AS(record_from_json(bad_hex), ParseError);
    Json bad_time = j;
    bad_time["created_at"] = -5;
    CHECK_THROWS_AS(record_from_json(bad_time), ParseError);
    Json dup = j;
    dup["term_evidence"] = Json::array({Json::array({"period", "8"}),
                                        Json::array({"period", "8"})});
    CHECK_THROWS_AS(record_from_json(dup), ParseError);
}

TEST_CASE("contract container round-trips binary bodies") {
    ContractContent c;
    c.body = {0x00, 0x0a, 0xff, 'b', 'o', 'd', 'y', 0x0a, 0x0d};
    c.terms = {{"bin", Bytes{0x0a, 0x00, 0x0a}}, {"empty-ok", Bytes{}}};
    std::string file = format_contract_file(c);
    ContractContent back = parse_contract_file(file);
    CHECK(back.body == c.body);
    CHECK(back.terms == c.terms);

    zkt::TempDir dir;
    save_contract(c, dir.file("c.contract"));
    ContractContent loaded = load_contract(dir.file("c.contract"));
    CHECK(loaded.body == c.body);
    CHECK_THROWS_AS(load_contract(dir.file("nope")), IoError);
}

TEST_CASE("contract container rejects malformed files") {
    CHECK_THROWS_AS(parse_contract_file("nonsense\n"), ParseError);
    CHECK_THROWS_AS(parse_contract_file("contract/1\n"), ParseError);
    CHECK_THROWS_AS(parse_contract_file("contract/1\nbody x\n"), ParseError);
    CHECK_THROWS_AS(parse_contract_file("contract/1\nbody 10\nshort\n"), ParseError);
    CHECK_THROWS_AS(parse_contract_file("contract/1\nbody 4\nabcdX"), ParseError);
    CHECK_THROWS_AS(parse_contract_file("contract/1\nbody 0\n\n"), ContentError);
    CHECK_THROWS_AS(parse_contract_file("contract/1\nbody 2\nok\nterm a b 5\nvalue\n"),
                    ParseError);
    CHECK_THROWS_AS(
        parse_contract_file("contract/1\nbody 2\nok\nterm t 1\nv\nterm t 1\nv\n"),
        ContentError);
}
