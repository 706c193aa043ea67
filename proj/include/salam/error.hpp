#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace salam {

enum class ErrorKind {
    malformed_record,
    invalid_argument,
    empty_text,
    dimension_mismatch,
    polarity_mismatch,
    missing_target,
    missing_context,
    missing_pseudo_label,
    unannotated_entries,
    tiny_task,
    no_rule,
    provider_unavailable,
    rate_limited,
    io_failure,
    schema_version,
    corrupt_line,
};

std::string_view to_string(ErrorKind kind);

// Validation failures map to CLI exit code 1, backend and I/O failures to 2.
bool is_validation_error(ErrorKind kind);

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(message), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

}  // namespace salam
