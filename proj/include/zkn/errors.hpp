#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace zkn {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Group parameters missing, inconsistent or unusable.
struct ParamError : Error {
    using Error::Error;
};

// Randomness source failed to deliver bytes.
struct EntropyError : Error {
    using Error::Error;
};

// Witness salt too short or otherwise unusable.
struct SaltError : Error {
    using Error::Error;
};

// Contract content violates its structural rules.
struct ContentError : Error {
    using Error::Error;
};

// Malformed textual input: hex strings, parameter files, content files.
struct ParseError : Error {
    using Error::Error;
};

// File could not be read or written.
struct IoError : Error {
    using Error::Error;
};

// A session message arrived outside the expected phase order.
struct ProtocolOrderError : Error {
    using Error::Error;
};

// Evidence registration for a contract id that is already on the ledger.
struct DuplicateIdError : Error {
    using Error::Error;
};

struct NotFoundError : Error {
    using Error::Error;
};

// Requested term label does not exist in the evidence record.
struct LabelError : Error {
    using Error::Error;
};

// Ledger file or chain failed an integrity check; names the block.
struct IntegrityError : Error {
    std::size_t block_index;
    IntegrityError(std::size_t index, const std::string& what)
        : Error("block " + std::to_string(index) + ": " + what), block_index(index) {}
};

// Wire frame violated the framing rules (length bound, short read).
struct FrameError : Error {
    using Error::Error;
};

// Wire message body failed schema validation.
struct DecodeError : Error {
    using Error::Error;
};

// Socket-level failure: connect, send, receive, timeout.
struct TransportError : Error {
    using Error::Error;
};

// Peer aborted the session, or we aborted it on a rule violation. Carries
// whatever rounds completed before the abort, serialized as transcript
// JSON (empty when no round finished).
struct SessionAborted : Error {
    std::string reason;
    std::size_t rounds_completed;
    std::string partial_transcript_json;
    SessionAborted(const std::string& r, std::size_t rounds,
                   std::string partial_json = {})
        : Error("session aborted: " + r),
          reason(r),
          rounds_completed(rounds),
          partial_transcript_json(std::move(partial_json)) {}
};

}  // namespace zkn
