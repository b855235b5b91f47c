#include <catch2/catch_amalgamated.hpp>

#include <fstream>

#include "support.hpp"
#include "zkn/zkn.hpp"

using namespace zkn;

namespace {

const std::string kCli = ZKN_CLI_PATH;
const std::string kSaltHex = "00112233445566778899aabbccddeeff";

std::string with_salt(const std::string& args) {
    return "ZKN_SALT=" + kSaltHex + " " + kCli + " " + args;
}

std::string without_salt(const std::string& args) {
    return "env -u ZKN_SALT " + kCli + " " + args + " < /dev/null";
}

void write_sample_contract(const std::string& path) {
    ContractContent c;
    c.body = to_bytes("Lodging agreement: 12 Elm Street, 2024-01 through 2024-02.");
    c.terms = {{"period", to_bytes("2024-01..2024-02")},
               {"address", to_bytes("12 Elm Street")}};
    save_contract(c, path);
}

Json first_json_line(const std::string& output) {
    auto nl = output.find('\n');
    return parse_json(output.substr(0, nl));
}

}  // namespace

TEST_CASE("params-gen writes validated parameter files") {
    zkt::TempDir dir;
    auto toy = zkt::run_command(kCli + " params-gen --profile toy --out " +
                                dir.file("toy.params") + " --json");
    REQUIRE(toy.exit_code == 0);
    GroupParams loaded = load_params(dir.file("toy.params"));
    CHECK(loaded.p == 23);
    CHECK(loaded.q == 11);
    CHECK(loaded.g == 2);
    CHECK(validate_params(loaded).ok);

    auto prod = zkt::run_command(kCli + " params-gen --profile production --out " +
                                 dir.file("prod.params") + " --json");
    REQUIRE(prod.exit_code == 0);
    CHECK(first_json_line(prod.output)["bits"] == 2048);
    CHECK(validate_params(load_params(dir.file("prod.params"))).ok);

    auto fresh = zkt::run_command(kCli + " params-gen --profile fresh --bits 96 --seed 5 --out " +
                                  dir.file("fresh.params"));
    REQUIRE(fresh.exit_code == 0);
    GroupParams fp = load_params(dir.file("fresh.params"));
    CHECK(bit_length(fp.p) == 96);
    CHECK(validate_params(fp).ok);

    CHECK(zkt::run_command(kCli + " params-gen --profile bogus --out /tmp/x").exit_code == 2);
    CHECK(zkt::run_command(kCli + " params-gen --profile toy --out /nonexistent-dir/x")
              .exit_code == 3);
}

TEST_CASE("register appends evidence and refuses duplicates") {
    zkt::TempDir dir;
    write_sample_contract(dir.file("c.contract"));
    std::string base = "register --content " + dir.file("c.contract") +
                       " --id c-1 --ledger " + dir.file("test.ledger") +
                       " --params toy --seed 9 --json";

    auto first = zkt::run_command(with_salt(base));
    REQUIRE(first.exit_code == 0);
    Json out = first_json_line(first.output);
    CHECK(out["contract_id"] == "c-1");
    CHECK(out["block"] == 0);
    CHECK(out["terms"] == 2);

    Ledger ledger = load_ledger(dir.file("test.ledger"));
    CHECK(ledger.size() == 1);
    CHECK(ledger.verify_chain().ok);

    // the registered record binds to the original content and salt
    ContractContent content = load_contract(dir.file("c.contract"));
    Bytes salt = from_hex(kSaltHex);
    CHECK(verify_binding(content, view(salt), ledger.get_evidence("c-1"), toy_group()).ok);
    CHECK(out["e"] == bigint_to_hex(ledger.get_evidence("c-1").e.v));

    auto dup = zkt::run_command(with_salt(base));
    CHECK(dup.exit_code == 1);
    CHECK(dup.output.find("already registered") != std::string::npos);

    auto second = zkt::run_command(with_salt(
        "register --content " + dir.file("c.contract") + " --id c-2 --ledger " +
        dir.file("test.ledger") + " --params toy --seed 9 --json"));
    REQUIRE(second.exit_code == 0);
    CHECK(load_ledger(dir.file("test.ledger")).size() == 2);
}

TEST_CASE("register is byte-reproducible under a fixed seed") {
    zkt::TempDir dir;
    write_sample_contract(dir.file("c.contract"));
    for (const char* name : {"a.ledger", "b.ledger"}) {
        auto r = zkt::run_command(with_salt("register --content " + dir.file("c.contract") +
                                            " --id c-1 --ledger " + dir.file(name) +
                                            " --params toy --seed 13 --json"));
        REQUIRE(r.exit_code == 0);
    }
    std::ifstream a(dir.file("a.ledger")), b(dir.file("b.ledger"));
    std::stringstream sa, sb;
    sa << a.rdbuf();
    sb << b.rdbuf();
    CHECK(sa.str() == sb.str());
}

TEST_CASE("register guards its inputs") {
    zkt::TempDir dir;
    write_sample_contract(dir.file("c.contract"));
    std::string base = "register --content " + dir.file("c.contract") +
                       " --id c-1 --ledger " + dir.file("l") + " --params toy";

    CHECK(zkt::run_command(without_salt(base)).exit_code == 2);
    CHECK(zkt::run_command("ZKN_SALT=aabb " + kCli + " " + base).exit_code == 2);  // short
    CHECK(zkt::run_command("ZKN_SALT=xyz " + kCli + " " + base).exit_code == 2);   // not hex
    CHECK(zkt::run_command(with_salt("register --content " + dir.file("missing") +
                                     " --id c-1 --ledger " + dir.file("l") +
                                     " --params toy"))
              .exit_code == 3);
    CHECK(zkt::run_command(with_salt(base + " --seed 4 --params production")).exit_code == 2);
    CHECK(zkt::run_command(kCli).exit_code == 2);
    CHECK(zkt::run_command(kCli + " --help").exit_code == 0);
}

TEST_CASE("audit reports chain state with distinct exit codes") {
    zkt::TempDir dir;
    write_sample_contract(dir.file("c.contract"));
    REQUIRE(zkt::run_command(with_salt("register --content " + dir.file("c.contract") +
                                       " --id c-1 --ledger " + dir.file("test.ledger") +
                                       " --params toy --seed 9"))
                .exit_code == 0);
    REQUIRE(zkt::run_command(with_salt("register --content " + dir.file("c.contract") +
                                       " --id c-2 --ledger " + dir.file("test.ledger") +
                                       " --params toy --seed 9"))
                .exit_code == 0);

    auto ok = zkt::run_command(kCli + " audit --ledger " + dir.file("test.ledger") + " --json");
    CHECK(ok.exit_code == 0);
    CHECK(first_json_line(ok.output)["valid"] == true);
    CHECK(first_json_line(ok.output)["blocks"] == 2);

    // flip one byte inside block 1 and expect the index in the output
    std::ifstream in(dir.file("test.ledger"), std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    std::string text = ss.str();
    auto second_line = text.find('\n') + 1;
    auto epos = text.find("\"created_at\":", second_line);
    REQUIRE(epos != std::string::npos);
    text[epos + 13] = text[epos + 13] == '1' ? '2' : '1';
    std::ofstream out(dir.file("tampered.ledger"), std::ios::binary);
    out << text;
    out.close();

    auto bad = zkt::run_command(kCli + " audit --ledger " + dir.file("tampered.ledger"));
    CHECK(bad.exit_code == 1);
    CHECK(bad.output.find("block 1") != std::string::npos);

    CHECK(zkt::run_command(kCli + " audit --ledger " + dir.file("missing.ledger")).exit_code == 3);
}

TEST_CASE("serve and prove complete the protocol end to end") {
    zkt::TempDir dir;
    write_sample_contract(dir.file("c.contract"));
    REQUIRE(zkt::run_command(with_salt("register --content " + dir.file("c.contract") +
                                       " --id c-1 --ledger " + dir.file("test.ledger") +
                                       " --params toy --seed 9"))
                .exit_code == 0);

    zkt::BackgroundProcess server(kCli + " serve --listen 127.0.0.1:0 --ledger " +
                                  dir.file("test.ledger") +
                                  " --params toy --seed 30 -k 20 --max-sessions 3 --json" +
                                  " --transcript-dir " + dir.file("transcripts"));
    Json listening = parse_json(server.read_line());
    std::string endpoint = listening["listening"].get<std::string>();

    auto good = zkt::run_command(with_salt(
        "prove --connect " + endpoint + " --content " + dir.file("c.contract") +
        " --id c-1 -k 20 --params toy --seed 31 --json --transcript-out " +
        dir.file("proof.json")));
    REQUIRE(good.exit_code == 0);
    CHECK(first_json_line(good.output)["accepted"] == true);

    auto vt = zkt::run_command(kCli + " verify-transcript --transcript " +
                               dir.file("proof.json") + " --ledger " +
                               dir.file("test.ledger") + " --params toy --json");
    CHECK(vt.exit_code == 0);
    CHECK(first_json_line(vt.output)["accepted"] == true);

    // a prover with the wrong salt is rejected
    auto bad = zkt::run_command("ZKN_SALT=ffffffffffffffffffffffffffffffff " + kCli +
                                " prove --connect " + endpoint + " --content " +
                                dir.file("c.contract") +
                                " --id c-1 -k 20 --params toy --seed 32 --json" +
                                " --transcript-out " + dir.file("bad.json"));
    CHECK(bad.exit_code == 1);
    CHECK(first_json_line(bad.output)["accepted"] == false);

    // the rejected transcript is consistent but does not convince
    auto vt_bad = zkt::run_command(kCli + " verify-transcript --transcript " +
                                   dir.file("bad.json") + " --ledger " +
                                   dir.file("test.ledger") + " --params toy --json");
    CHECK(vt_bad.exit_code == 1);
    CHECK(first_json_line(vt_bad.output)["consistent"] == true);
    CHECK(first_json_line(vt_bad.output)["accepted"] == false);

    // term-scoped proof, re-verified offline as well
    auto term = zkt::run_command(with_salt(
        "prove --connect " + endpoint + " --content " + dir.file("c.contract") +
        " --id c-1 -k 20 --target period --params toy --seed 33 --json" +
        " --transcript-out " + dir.file("term.json")));
    CHECK(term.exit_code == 0);
    auto vt_term = zkt::run_command(kCli + " verify-transcript --transcript " +
                                    dir.file("term.json") + " --ledger " +
                                    dir.file("test.ledger") + " --params toy --json");
    CHECK(vt_term.exit_code == 0);
    CHECK(first_json_line(vt_term.output)["accepted"] == true);

    server.wait();
}

TEST_CASE("prove against a dead port is a transport error") {
    zkt::TempDir dir;
    write_sample_contract(dir.file("c.contract"));
    std::uint16_t dead_port;
    {
        TcpListener throwaway("127.0.0.1", 0);
        dead_port = throwaway.port();
    }
    auto r = zkt::run_command(with_salt(
        "prove --connect 127.0.0.1:" + std::to_string(dead_port) + " --content " +
        dir.file("c.contract") + " --id c-1 --params toy --seed 31"));
    CHECK(r.exit_code == 3);
}

TEST_CASE("round counts and trial counts are validated") {
    zkt::TempDir dir;
    write_sample_contract(dir.file("c.contract"));
    CHECK(zkt::run_command(with_salt("prove --connect 127.0.0.1:1 --content " +
                                     dir.file("c.contract") +
                                     " --id c-1 -k 0 --params toy"))
              .exit_code == 2);
    CHECK(zkt::run_command(kCli + " serve --listen 127.0.0.1:0 --ledger x -k 0").exit_code == 2);
    CHECK(zkt::run_command(kCli + " simulate-cheater --ledger x --id c-1 --trials 0").exit_code ==
          2);
}

TEST_CASE("simulate-cheater measures the soundness error") {
    zkt::TempDir dir;
    write_sample_contract(dir.file("c.contract"));
    REQUIRE(zkt::run_command(with_salt("register --content " + dir.file("c.contract") +
                                       " --id c-1 --ledger " + dir.file("test.ledger") +
                                       " --params toy --seed 9"))
                .exit_code == 0);

    auto one = zkt::run_command(kCli + " simulate-cheater --ledger " +
                                dir.file("test.ledger") +
                                " --id c-1 -k 1 --trials 2000 --params toy --seed 77 --json");
    REQUIRE(one.exit_code == 0);
    Json j = first_json_line(one.output);
    double rate = j["overall_acceptance"].get<double>();
    CHECK(rate > 0.45);
    CHECK(rate < 0.55);

    auto twenty = zkt::run_command(kCli + " simulate-cheater --ledger " +
                                   dir.file("test.ledger") +
                                   " --id c-1 -k 20 --trials 500 --params toy --seed 78 --json");
    REQUIRE(twenty.exit_code == 0);
    CHECK(first_json_line(twenty.output)["overall_acceptance"].get<double>() == 0.0);

    CHECK(zkt::run_command(kCli + " simulate-cheater --ledger " + dir.file("test.ledger") +
                           " --id ghost --trials 10 --params toy")
              .exit_code == 1);
}
