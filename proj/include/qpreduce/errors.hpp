#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace qpr {

// Exit codes used by the CLI; library exceptions map onto these.
enum ExitCode : int {
    exit_ok = 0,
    exit_error = 1,
    exit_ambiguity = 2,
    exit_conjugation_failure = 3,
    exit_constancy_failure = 4,
    exit_group_membership_failure = 5,
};

struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
    virtual int exit_code() const { return exit_error; }
};

// Two lattice points of different resonance class both match within tolerance.
struct AmbiguityError : Error {
    using Error::Error;
    int exit_code() const override { return exit_ambiguity; }
};

// A conjugation identity or defining relation fails beyond tolerance.
struct VerificationError : Error {
    using Error::Error;
    int exit_code() const override { return exit_conjugation_failure; }
};

struct GroupMembershipError : Error {
    using Error::Error;
    int exit_code() const override { return exit_group_membership_failure; }
};

}  // namespace qpr
