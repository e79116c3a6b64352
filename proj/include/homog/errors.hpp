// Error taxonomy shared by all solver modules.
#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace homog {

enum class SolverErrorKind {
    divergence,        // state norms blew past the recorded bound
    contraction,       // fixed-point sweep stopped contracting
    linear_solver,     // CG exhausted its iteration budget
    operator_contract, // operator failed the symmetry probe
    cell_solver,       // cell-problem Newton stagnated
    subsequence,       // eps schedule has non-constant Dirac trajectory
};

// Runtime failure of an iterative solver. Carries the residual / quotient
// history that was observed before giving up.
class SolverError : public std::runtime_error {
public:
    SolverError(SolverErrorKind k, const std::string& msg, std::vector<double> hist = {})
        : std::runtime_error(msg), kind(k), history(std::move(hist)) {}

    SolverErrorKind kind;
    std::vector<double> history;
};

// A configuration violates one of the model assumptions (monotonicity,
// growth, density bounds, ...). `assumption` names the violated condition.
class ValidationError : public std::runtime_error {
public:
    ValidationError(std::string assumption_name, const std::string& msg)
        : std::runtime_error(msg), assumption(std::move(assumption_name)) {}

    std::string assumption;
};

// Malformed input: config file, schema, or CSV that cannot be interpreted.
class ParseError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace homog
