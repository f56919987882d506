#pragma once
#include <stdexcept>
#include <string>

namespace magweyl {

// Failure kinds reported by library operations. CLI maps budget_exceeded to
// exit code 2 and invariant_violation to 3; everything else is a plain error.
enum class errc {
    not_skew_symmetric,
    degenerate_rank,
    complex_arithmetic_failure,
    out_of_range,
    parse_error,
    eps_too_large_for_domain,
    grid_too_coarse,
    flux_not_quantizable,
    resolution_too_coarse,
    incomplete_family,
    dimension_too_large,
    factorization_breakdown,
    moment_overflow,
    non_finite_moment,
    budget_exceeded,
    regime_mixed,
    span_too_small,
    not_separable,
    step_too_large,
    left_domain,
    trajectory_too_short,
    singular_block,
    empty_allowed_region,
    circle_exits_domain,
    psi_support_violation,
    invariant_violation,
    config_error,
    io_error,
};

const char* errc_name(errc c);

class error : public std::runtime_error {
public:
    error(errc c, const std::string& what)
        : std::runtime_error(std::string(errc_name(c)) + ": " + what), code_(c) {}
    errc code() const { return code_; }

private:
    errc code_;
};

[[noreturn]] inline void fail(errc c, const std::string& what) { throw error(c, what); }

inline void require(bool ok, errc c, const std::string& what) {
    if (!ok) fail(c, what);
}

inline const char* errc_name(errc c) {
    switch (c) {
        case errc::not_skew_symmetric: return "NotSkewSymmetric";
        case errc::degenerate_rank: return "DegenerateRank";
        case errc::complex_arithmetic_failure: return "ComplexArithmeticFailure";
        case errc::out_of_range: return "OutOfRange";
        case errc::parse_error: return "ParseError";
        case errc::eps_too_large_for_domain: return "EpsTooLargeForDomain";
        case errc::grid_too_coarse: return "GridTooCoarse";
        case errc::flux_not_quantizable: return "FluxNotQuantizable";
        case errc::resolution_too_coarse: return "ResolutionTooCoarse";
        case errc::incomplete_family: return "IncompleteFamily";
        case errc::dimension_too_large: return "DimensionTooLarge";
        case errc::factorization_breakdown: return "FactorizationBreakdown";
        case errc::moment_overflow: return "MomentOverflow";
        case errc::non_finite_moment: return "NonFiniteMoment";
        case errc::budget_exceeded: return "BudgetExceeded";
        case errc::regime_mixed: return "RegimeMixed";
        case errc::span_too_small: return "SpanTooSmall";
        case errc::not_separable: return "NotSeparable";
        case errc::step_too_large: return "StepTooLarge";
        case errc::left_domain: return "LeftDomain";
        case errc::trajectory_too_short: return "TrajectoryTooShort";
        case errc::singular_block: return "SingularBlock";
        case errc::empty_allowed_region: return "EmptyAllowedRegion";
        case errc::circle_exits_domain: return "CircleExitsDomain";
        case errc::psi_support_violation: return "PsiSupportViolation";
        case errc::invariant_violation: return "InvariantViolation";
        case errc::config_error: return "ConfigError";
        case errc::io_error: return "IoError";
    }
    return "UnknownError";
}

} // namespace magweyl
