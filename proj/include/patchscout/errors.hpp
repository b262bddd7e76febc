#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace patchscout {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct IoError : Error {
    using Error::Error;
};

struct ParseError : Error {
    using Error::Error;
};

struct FetchError : Error {
    explicit FetchError(const std::string& msg, int status = 0)
        : Error(msg), status(status) {}
    int status;
};

struct NotFoundError : Error {
    using Error::Error;
};

struct RepoError : Error {
    using Error::Error;
};

// Tag lookup failed; carries nearest candidates for diagnostics.
struct NoTagError : Error {
    NoTagError(const std::string& msg, std::vector<std::string> nearest)
        : Error(msg), nearest(std::move(nearest)) {}
    std::vector<std::string> nearest;
};

struct AmbiguousTagError : Error {
    AmbiguousTagError(const std::string& msg, std::vector<std::string> matches)
        : Error(msg), matches(std::move(matches)) {}
    std::vector<std::string> matches;
};

struct EmptyCandidateError : Error {
    using Error::Error;
};

struct GatewayError : Error {
    using Error::Error;
};

struct ScriptError : GatewayError {
    using GatewayError::GatewayError;
};

struct ExtractionError : Error {
    enum class Kind { no_answer_tag, empty_answer };
    ExtractionError(const std::string& msg, Kind kind) : Error(msg), kind(kind) {}
    Kind kind;
};

struct BudgetError : Error {
    BudgetError(const std::string& msg, int minimal_budget)
        : Error(msg), minimal_budget(minimal_budget) {}
    int minimal_budget;
};

struct ContractError : Error {
    using Error::Error;
};

}  // namespace patchscout
