#include "salam/error.hpp"

namespace salam {

std::string_view to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::malformed_record: return "malformed-record";
        case ErrorKind::invalid_argument: return "invalid-argument";
        case ErrorKind::empty_text: return "empty-text";
        case ErrorKind::dimension_mismatch: return "dimension-mismatch";
        case ErrorKind::polarity_mismatch: return "polarity-mismatch";
        case ErrorKind::missing_target: return "missing-target";
        case ErrorKind::missing_context: return "missing-context";
        case ErrorKind::missing_pseudo_label: return "missing-pseudo-label";
        case ErrorKind::unannotated_entries: return "unannotated-entries";
        case ErrorKind::tiny_task: return "tiny-task";
        case ErrorKind::no_rule: return "no-rule-and-no-default";
        case ErrorKind::provider_unavailable: return "provider-unavailable";
        case ErrorKind::rate_limited: return "rate-limited";
        case ErrorKind::io_failure: return "io-failure";
        case ErrorKind::schema_version: return "schema-version";
        case ErrorKind::corrupt_line: return "corrupt-line";
    }
    return "unknown";
}

bool is_validation_error(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::provider_unavailable:
        case ErrorKind::rate_limited:
        case ErrorKind::io_failure:
        case ErrorKind::no_rule:
            return false;
        default:
            return true;
    }
}

}  // namespace salam
