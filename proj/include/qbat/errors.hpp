#pragma once

#include <stdexcept>
#include <string>

namespace qbat {

// Base for everything thrown by this library.
struct error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct invalid_input_error : error {
    using error::error;
};

// Argument outside its documented domain (e.g. t outside [0, tau]).
struct domain_error : error {
    using error::error;
};

// Drive gap hit zero where a finite gap is required.
struct singular_gap_error : error {
    using error::error;
};

struct degenerate_eigensystem_error : error {
    using error::error;
};

// Iterative solver failed to converge; message carries the last residual.
struct convergence_error : error {
    using error::error;
};

// Integrator drift exceeded its budget; advises a smaller dt.
struct step_size_error : error {
    using error::error;
};

struct missing_solution_error : error {
    using error::error;
};

struct not_critical_error : error {
    using error::error;
};

struct not_charged_error : error {
    using error::error;
};

struct no_crossing_error : error {
    using error::error;
};

struct fit_error : error {
    using error::error;
};

struct construction_error : error {
    using error::error;
};

struct config_error : error {
    using error::error;
};

struct io_error : error {
    using error::error;
};

} // namespace qbat
