#pragma once

#include <stdexcept>
#include <string>

namespace toporag {

// Process exit codes used by the CLI. Every exception below maps onto one.
enum class ExitCode : int {
    kOk = 0,
    kValidation = 2,
    kProvider = 3,
    kInternal = 4,
};

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
    virtual ExitCode exit_code() const noexcept { return ExitCode::kInternal; }
    virtual const char* kind() const noexcept { return "Error"; }
};

#define TOPORAG_DEFINE_ERROR(Name, Code)                                      \
    class Name : public Error {                                               \
    public:                                                                   \
        explicit Name(const std::string& what) : Error(#Name ": " + what) {}  \
        ExitCode exit_code() const noexcept override { return Code; }         \
        const char* kind() const noexcept override { return #Name; }          \
    }

TOPORAG_DEFINE_ERROR(ParseError, ExitCode::kValidation);
TOPORAG_DEFINE_ERROR(ValidationError, ExitCode::kValidation);
TOPORAG_DEFINE_ERROR(MissingGraphError, ExitCode::kValidation);
TOPORAG_DEFINE_ERROR(IoError, ExitCode::kInternal);
TOPORAG_DEFINE_ERROR(DimensionMismatch, ExitCode::kValidation);
TOPORAG_DEFINE_ERROR(ZeroVector, ExitCode::kValidation);
TOPORAG_DEFINE_ERROR(CacheCorrupt, ExitCode::kInternal);
TOPORAG_DEFINE_ERROR(SelfLoopExcluded, ExitCode::kValidation);
TOPORAG_DEFINE_ERROR(EmptyCandidates, ExitCode::kValidation);
TOPORAG_DEFINE_ERROR(TooLarge, ExitCode::kValidation);
TOPORAG_DEFINE_ERROR(EmptySubcomplex, ExitCode::kValidation);
TOPORAG_DEFINE_ERROR(DanglingCell, ExitCode::kValidation);
TOPORAG_DEFINE_ERROR(ProviderUnavailable, ExitCode::kProvider);
TOPORAG_DEFINE_ERROR(ProviderRejected, ExitCode::kProvider);

#undef TOPORAG_DEFINE_ERROR

}  // namespace toporag
