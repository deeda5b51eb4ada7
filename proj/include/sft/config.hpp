#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace sft {

// Resource caps and tolerances shared by every stage. All limits are
// per-operation; hitting one raises resource_error rather than truncating.
struct Caps {
    int max_window = 16;              // widest clopen window materialized
    std::int64_t max_paths = 1'000'000; // largest full-window path set
    int max_ell = 400;                // cyclic-stack averaging length
    int max_n = 50;                   // refine stage n
    int max_lag = 6;                  // shift-equivalence search lag
    std::int64_t max_entry = 64;      // shift-equivalence entry bound
    int cert_cap = 64;                // exponent cap for T^n M T^n >= 0 certificates
    int power_iter_cap = 200'000;     // Perron power iteration limit
    double float_slack = 1e-9;        // slack added to paper bounds
    double undecided_threshold = 1e-8;
    std::uint64_t seed = 1;           // randomized harness seed
};

struct error : std::runtime_error {
    explicit error(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed or contract-violating input.
struct input_error : error {
    explicit input_error(const std::string& msg) : error(msg) {}
};

// A cap was exceeded; message names the cap and the required size.
struct resource_error : error {
    explicit resource_error(const std::string& msg) : error(msg) {}
};

// A numerical guard tripped (missing spectral gap, singular polar part, ...).
struct degenerate_error : error {
    explicit degenerate_error(const std::string& msg) : error(msg) {}
};

// An exact decision could not be certified within the configured cap.
struct undecided_error : error {
    explicit undecided_error(const std::string& msg) : error(msg) {}
};

} // namespace sft
