#pragma once

#include "fpchain/chain.hpp"
#include "fpchain/errors.hpp"
#include "fpchain/potential.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace fpchain {

inline constexpr const char* kVersion = "0.1.0";
inline constexpr int kSchemaVersion = 1;

/// Raised for malformed or out-of-range configuration; `field` is a JSON
/// pointer-like path such as "grid.h".
class ConfigError : public InputError {
public:
    ConfigError(const std::string& field, const std::string& what)
        : InputError(field.empty() ? what : field + ": " + what), field_(field) {}
    const std::string& field() const { return field_; }

private:
    std::string field_;
};

struct PotentialSpec {
    std::string kind = "zero";  // zero | quadratic | additive | tabulated
    std::vector<std::vector<double>> hessian;
    std::vector<std::vector<double>> terms;  // polynomial coefficients per axis
    double lo = 0.0, hi = 0.0;
    int points = 0;
    std::vector<double> values;
    std::optional<double> kappa;
};

/// point (cell index or coordinates), uniform, gibbs (invariant law), box.
struct MeasureSpec {
    std::string kind = "uniform";
    std::optional<std::size_t> cell;
    std::vector<double> x;
    std::vector<double> lo, hi;
};

struct CertifyBlock {
    std::vector<double> alphas{1.5, 2.0};
};

struct DecayBlock {
    double alpha = 1.0;
    MeasureSpec initial;  // f0 is its density with respect to m_h
    std::vector<double> times;
    double tol = 1e-12;
    double fit_window = 0.5;
    std::size_t discrete_steps = 0;
};

struct ContractBlock {
    std::string mode = "W1_graph";
    MeasureSpec nu, eta;
    std::vector<double> times;
    std::vector<std::size_t> steps;
    int p = 2;
};

struct SimulateBlock {
    std::uint64_t seed = 1;
    std::size_t n_paths = 10000;
    double horizon = 1.0;
    MeasureSpec initial;
    std::optional<std::string> coupling;  // neighbor | product
    MeasureSpec nu, eta;
    std::vector<double> times;
};

struct SdeCompareBlock {
    std::uint64_t seed = 1;
    std::size_t n_paths = 100000;
    double horizon = 1.0;
    double sde_step = 1e-3;
    std::vector<double> hs{0.5, 0.25, 0.125};
    std::vector<double> lo, hi;  // initial law: uniform on this box
};

struct RunConfig {
    int schema_version = kSchemaVersion;
    int d = 1;
    double K = 1.0;
    double h = 0.5;
    PotentialSpec potential;
    double sigma = 1.0;
    Scheme scheme = Scheme::finite_volume;
    int quadrature_order = 4;
    std::optional<CertifyBlock> certify;
    std::optional<DecayBlock> decay;
    std::optional<ContractBlock> contract;
    std::optional<SimulateBlock> simulate;
    std::optional<SdeCompareBlock> sde_compare;

    /// Canonical JSON text (sorted keys) and its FNV-1a 64-bit hash.
    std::string canonical;
    std::uint64_t hash = 0;
};

/// Parses and validates a config document; unknown keys are rejected.
/// `seed_override` replaces the seed of the simulate and sde_compare blocks
/// before hashing.
RunConfig parse_config(const std::string& text, std::optional<std::uint64_t> seed_override = std::nullopt);
RunConfig load_config(const std::string& path, std::optional<std::uint64_t> seed_override = std::nullopt);

std::uint64_t fnv1a64(const std::string& s);
std::string hex64(std::uint64_t v);

Potential make_potential(const RunConfig& cfg);
GridSpec make_grid(const RunConfig& cfg);
RateTable make_rates(const RunConfig& cfg);
GridMeasure make_measure(const MeasureSpec& spec, const GridSpec& grid, const RateTable& rates);

}  // namespace fpchain
