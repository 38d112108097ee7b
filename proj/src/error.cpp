#include "wdt/error.hpp"

namespace wdt {

const char* to_string(ErrorCategory c) {
    switch (c) {
        case ErrorCategory::config: return "config";
        case ErrorCategory::dimension: return "dimension";
        case ErrorCategory::shape: return "shape";
        case ErrorCategory::range: return "range";
        case ErrorCategory::validation: return "validation";
        case ErrorCategory::ingestion: return "ingestion";
        case ErrorCategory::degenerate_input: return "degenerate-input";
        case ErrorCategory::divergence: return "divergence";
        case ErrorCategory::undefined_metric: return "undefined-metric";
        case ErrorCategory::io: return "io";
    }
    return "unknown";
}

}  // namespace wdt
