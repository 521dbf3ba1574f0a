#pragma once

#include <stdexcept>
#include <string>

namespace fpchain {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Grid parameters are inconsistent (e.g. 2K/h is not an integer).
class GridError : public Error {
public:
    using Error::Error;
};

/// Finite-difference rates would become negative somewhere on the grid.
class PositivityError : public Error {
public:
    using Error::Error;
};

/// A structural assumption of the decay theory does not hold for the chain.
class AssumptionError : public Error {
public:
    using Error::Error;
};

/// Requested analysis needs hypotheses (additivity, dimension) the input lacks.
class HypothesisError : public Error {
public:
    using Error::Error;
};

/// A numerical solver failed (singular system, iteration cap, ...).
class SolverError : public Error {
public:
    using Error::Error;
};

/// A numerical verification produced a violation beyond its tolerance.
class VerificationError : public Error {
public:
    using Error::Error;
};

/// Input data is malformed (bad CSV, bad config, negative entries, ...).
class InputError : public Error {
public:
    using Error::Error;
};

}  // namespace fpchain
