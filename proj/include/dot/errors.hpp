#pragma once
// Error hierarchy shared across the library. Everything derives from
// dot::Error so callers can catch domain failures in one place and still
// distinguish the cases that carry extra context (attempt counts, byte
// offsets, expected script substrings).

#include <cstddef>
#include <stdexcept>
#include <string>

namespace dot {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Precondition or invariant violated by caller-supplied data.
struct ValidationError : Error {
    using Error::Error;
};

// A stage was appended out of the fixed stage order.
struct SequencingError : Error {
    using Error::Error;
};

// Bad run configuration: unknown stage/phase routing, invalid search limits.
struct ConfigError : Error {
    using Error::Error;
};

// Prompt template problem; message names the offending placeholder.
struct TemplateError : Error {
    using Error::Error;
};

// Scripted backend ran out of entries.
struct ScriptUnderrunError : Error {
    using Error::Error;
};

// Scripted backend entry had a match constraint the prompt did not satisfy.
struct ScriptMismatchError : Error {
    ScriptMismatchError(const std::string& message, std::string expected_substring)
        : Error(message), expected(std::move(expected_substring)) {}
    std::string expected;
};

// Live transport gave up after the configured retry budget.
struct TransportError : Error {
    TransportError(const std::string& message, int attempt_count)
        : Error(message), attempts(attempt_count) {}
    int attempts = 0;
};

// Structured input (trace, record file, ratings) failed to parse.
struct ParseError : Error {
    ParseError(const std::string& message, std::size_t byte)
        : Error(message), byte_offset(byte) {}
    std::size_t byte_offset = 0;
};

// Search-level failure; request_index is the backend call that failed
// within the current expansion, -1 when not applicable.
struct SearchError : Error {
    explicit SearchError(const std::string& message, int failing_request = -1)
        : Error(message), request_index(failing_request) {}
    int request_index = -1;
};

// Operation not available on this object (e.g. call log on a
// non-recording backend).
struct UnsupportedError : Error {
    using Error::Error;
};

}  // namespace dot
