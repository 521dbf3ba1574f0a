#include "fpchain/coupling.hpp"

#include "fpchain/errors.hpp"
#include "fpchain/evolve.hpp"
#include "fpchain/numeric.hpp"

#include <json.hpp>

#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>

namespace fpchain {

double CouplingTable::row_sum(int g) const {
    double s = 0.0;
    for (int gb = 0; gb < size(); ++gb) s += at(g, gb);
    return s;
}

double CouplingTable::col_sum(int gb) const {
    double s = 0.0;
    for (int g = 0; g < size(); ++g) s += at(g, gb);
    return s;
}

double kappa_pm(const RateTable& t, std::size_t i, int axis, int sign) {
    if (axis < 0 || axis >= t.grid.d) throw InputError("kappa_pm: axis out of range");
    const Move m{axis, sign > 0 ? +1 : -1};
    const auto k = neighbor(t.grid, i, m);
    if (!k) throw InputError("kappa_pm: cell " + std::to_string(i) + " has no neighbour along that move");
    double v = t.rate(i, m) - t.rate(*k, m);
    for (int g = 0; g < t.moves(); ++g) {
        if (g / 2 == axis) continue;
        v -= std::max(t.rate(*k, g) - t.rate(i, g), 0.0);
    }
    return v;
}

namespace {

// Table for (i, i + he_j) built verbatim from the six-case definition.
CouplingTable forward_table(const RateTable& t, std::size_t i, int axis) {
    const auto k = neighbor(t.grid, i, Move{axis, +1});
    if (!k) throw InputError("neighbor_coupling: cell " + std::to_string(i) + " has no +neighbour on that axis");
    CouplingTable c;
    c.i = i;
    c.k = *k;
    c.d = t.grid.d;
    c.entries.assign(static_cast<std::size_t>(c.size() * c.size()), 0.0);
    const int plus = Move{axis, +1}.index();
    const int minus = Move{axis, -1}.index();
    const int e = null_move_index(c.d);
    for (int g = 0; g < t.moves(); ++g) c.at(g, g) = std::min(t.rate(i, g), t.rate(*k, g));
    for (int g = 0; g < t.moves(); ++g) {
        if (g == plus || g == minus) continue;
        c.at(plus, g) = std::max(t.rate(*k, g) - t.rate(i, g), 0.0);
        c.at(g, minus) = std::max(t.rate(i, g) - t.rate(*k, g), 0.0);
    }
    c.at(plus, e) = kappa_pm(t, i, axis, +1);
    c.at(e, minus) = kappa_pm(t, *k, axis, -1);
    return c;
}

CouplingTable transposed(const CouplingTable& c) {
    CouplingTable out = c;
    std::swap(out.i, out.k);
    for (int g = 0; g < c.size(); ++g)
        for (int gb = 0; gb < c.size(); ++gb) out.at(g, gb) = c.at(gb, g);
    return out;
}

std::size_t apply_move(const GridSpec& grid, std::size_t i, int g) {
    if (g == null_move_index(grid.d)) return i;
    const auto k = neighbor(grid, i, Move::from_index(g));
    return k ? *k : std::numeric_limits<std::size_t>::max();
}

}  // namespace

CouplingTable neighbor_coupling(const RateTable& t, std::size_t i, int axis, int sign, bool allow_negative) {
    CouplingTable c;
    if (sign > 0) {
        c = forward_table(t, i, axis);
    } else {
        const auto base = neighbor(t.grid, i, Move{axis, -1});
        if (!base)
            throw InputError("neighbor_coupling: cell " + std::to_string(i) + " has no -neighbour on that axis");
        c = transposed(forward_table(t, *base, axis));
    }
    if (!allow_negative) {
        for (double v : c.entries) {
            if (v < 0.0) {
                const auto lo = sign > 0 ? c.i : c.k;
                std::ostringstream msg;
                msg << "neighbour coupling of cells " << c.i << " and " << c.k << " (axis " << axis + 1
                    << ") has a negative kappa entry: kappa_+(" << lo << ") = " << kappa_pm(t, lo, axis, +1)
                    << ", kappa_-(" << lo + t.grid.stride(axis) << ") = "
                    << kappa_pm(t, lo + t.grid.stride(axis), axis, -1);
                throw AssumptionError(msg.str());
            }
        }
    }
    return c;
}

CouplingTable product_coupling(const RateTable& t, std::size_t i, std::size_t k) {
    if (i >= t.num_states() || k >= t.num_states()) throw InputError("product_coupling: cell out of range");
    CouplingTable c;
    c.i = i;
    c.k = k;
    c.d = t.grid.d;
    c.entries.assign(static_cast<std::size_t>(c.size() * c.size()), 0.0);
    const int e = null_move_index(c.d);
    for (int g = 0; g < t.moves(); ++g) {
        const double a = t.rate(i, g), b = t.rate(k, g);
        c.at(g, g) = std::min(a, b);
        c.at(g, e) = std::max(a - b, 0.0);
        c.at(e, g) = std::max(b - a, 0.0);
    }
    return c;
}

double matched_mass(const RateTable& t, const CouplingTable& c) {
    double s = 0.0;
    for (int g = 0; g < c.size(); ++g) {
        const std::size_t a = apply_move(t.grid, c.i, g);
        for (int gb = 0; gb < c.size(); ++gb) {
            if (c.at(g, gb) == 0.0) continue;
            if (a == apply_move(t.grid, c.k, gb)) s += c.at(g, gb);
        }
    }
    return s;
}

namespace {

struct NeighbourScan {
    double kappa_phi = std::numeric_limits<double>::infinity();
    std::size_t cell = 0;
    int axis = 0;
    bool a3 = true;
};

NeighbourScan scan_kappas(const RateTable& t, std::vector<double>& plus, std::vector<double>& minus) {
    const std::size_t n = t.num_states();
    const int d = t.grid.d;
    const double nan = std::numeric_limits<double>::quiet_NaN();
    plus.assign(n * d, nan);
    minus.assign(n * d, nan);
    NeighbourScan s;
    for (std::size_t i = 0; i < n; ++i) {
        for (int j = 0; j < d; ++j) {
            if (neighbor(t.grid, i, Move{j, +1})) plus[i * d + j] = kappa_pm(t, i, j, +1);
            if (neighbor(t.grid, i, Move{j, -1})) minus[i * d + j] = kappa_pm(t, i, j, -1);
            if (!std::isnan(plus[i * d + j]) && !(plus[i * d + j] > 0.0)) s.a3 = false;
            if (!std::isnan(minus[i * d + j]) && !(minus[i * d + j] > 0.0)) s.a3 = false;
        }
    }
    for (std::size_t i = 0; i < n; ++i) {
        for (int j = 0; j < d; ++j) {
            if (std::isnan(plus[i * d + j])) continue;
            const std::size_t k = i + t.grid.stride(j);
            const double v = plus[i * d + j] + minus[k * d + j];
            if (v < s.kappa_phi) {
                s.kappa_phi = v;
                s.cell = i;
                s.axis = j;
            }
        }
    }
    if (!std::isfinite(s.kappa_phi)) s.kappa_phi = 0.0;
    return s;
}

CouplingInfima coupling_infima(const RateTable& t) {
    CouplingInfima r;
    r.kappa_dd = r.kappa_ddd = std::numeric_limits<double>::infinity();
    const int e = null_move_index(t.grid.d);
    for (std::size_t i = 0; i < t.num_states(); ++i) {
        for (int g = 0; g < t.moves(); ++g) {
            if (!(t.rate(i, g) > 0.0)) continue;
            const Move delta = Move::from_index(g);
            const CouplingTable c = neighbor_coupling(t, i, delta.axis, delta.sign, true);
            const double dd = std::min(c.at(g, e), c.at(e, delta.inverse().index()));
            if (dd < r.kappa_dd) {
                r.kappa_dd = dd;
                r.dd_cell = i;
                r.dd_partner = c.k;
            }
            const double ddd = matched_mass(t, c);
            if (ddd < r.kappa_ddd) {
                r.kappa_ddd = ddd;
                r.ddd_cell = i;
                r.ddd_partner = c.k;
            }
        }
    }
    if (!std::isfinite(r.kappa_dd)) r.kappa_dd = r.kappa_ddd = 0.0;
    return r;
}

}  // namespace

CouplingInfima verify_coupling_conditions(const RateTable& t, double rel_tol) {
    std::vector<double> plus, minus;
    const NeighbourScan s = scan_kappas(t, plus, minus);
    if (!s.a3) throw AssumptionError("verify_coupling_conditions: some kappa_+/- is not positive");
    CouplingInfima r = coupling_infima(t);
    const double scale = std::max(std::abs(s.kappa_phi), 1.0);
    r.dd_equals_half_kappa_phi = std::abs(r.kappa_dd - 0.5 * s.kappa_phi) <= rel_tol * scale;
    r.ddd_at_least_kappa_phi = r.kappa_ddd >= s.kappa_phi - rel_tol * scale;
    if (!r.ddd_at_least_kappa_phi) {
        std::ostringstream msg;
        msg << "matched-mass infimum " << r.kappa_ddd << " is below kappa_phi " << s.kappa_phi << " at cells "
            << r.ddd_cell << " and " << r.ddd_partner;
        throw VerificationError(msg.str());
    }
    return r;
}

DecayCertificate decay_certificate(const RateTable& t, const std::vector<double>& alphas) {
    DecayCertificate c;
    const NeighbourScan s = scan_kappas(t, c.kappa_plus, c.kappa_minus);
    c.kappa_phi = s.kappa_phi;
    c.kappa_1 = s.kappa_phi;
    c.a3_satisfied = s.a3;
    c.lsi_constant = 2.0 * c.kappa_phi;
    for (double a : alphas) {
        if (!(a > 1.0 && a <= 2.0)) throw InputError("Beckner exponents must lie in (1, 2]");
        c.beckner[a] = a * c.kappa_phi;
    }
    c.min_cell = s.cell;
    c.min_axis = s.axis;
    c.min_location = t.grid.center(s.cell);
    c.tau = build_kernel(t).tau;
    c.coarse_ricci = c.kappa_1 * c.tau;

    const CouplingInfima r = coupling_infima(t);
    c.kappa_dd = r.kappa_dd;
    c.kappa_ddd = r.kappa_ddd;
    const double scale = std::max(std::abs(c.kappa_phi), 1.0);
    c.dd_equals_half_kappa_phi = std::abs(r.kappa_dd - 0.5 * c.kappa_phi) <= 1e-12 * scale;

    if (!c.a3_satisfied) c.notes.push_back("some kappa_+/- is not positive; decay constants are not certified");
    c.notes.push_back(
        "matched mass is reported by enumeration of the coupling tables; it equals "
        "kappa_+(i,j) + kappa_-(i+he_j,j), not kappa_+(i,j) + kappa_-(i,j)");
    if (!c.dd_equals_half_kappa_phi) {
        std::ostringstream msg;
        msg << "kappa'' = " << r.kappa_dd << " differs from kappa_phi/2 = " << 0.5 * c.kappa_phi
            << " (infimum at cells " << r.dd_cell << ", " << r.dd_partner << ")";
        c.notes.push_back(msg.str());
    }
    if (t.scheme == Scheme::finite_difference && !t.additive && t.grid.d > 1)
        c.notes.push_back("finite-difference rates of a non-additive potential are not path independent");
    return c;
}

std::string certificate_json(const DecayCertificate& c, int indent) {
    nlohmann::ordered_json j;
    j["kappa_phi"] = c.kappa_phi;
    j["kappa_1"] = c.kappa_1;
    j["lsi"] = c.lsi_constant;
    nlohmann::ordered_json b = nlohmann::ordered_json::object();
    for (const auto& [a, v] : c.beckner) {
        std::ostringstream key;
        key << a;
        b[key.str()] = v;
    }
    j["beckner"] = b;
    j["a3"] = c.a3_satisfied;
    j["coarse_ricci"] = c.coarse_ricci;
    j["tau"] = c.tau;
    j["min_gap_location"] = {{"cell", c.min_cell}, {"axis", c.min_axis + 1}, {"center", c.min_location}};
    j["kappa_dd"] = c.kappa_dd;
    j["kappa_ddd"] = c.kappa_ddd;
    j["dd_equals_half_kappa_phi"] = c.dd_equals_half_kappa_phi;
    j["notes"] = c.notes;
    return j.dump(indent);
}

kernels::PairSupport build_pair_support(const RateTable& t) {
    kernels::PairSupport S;
    const std::size_t n = t.num_states();
    const int e = null_move_index(t.grid.d);
    S.state_offset.push_back(0);
    S.term_offset.push_back(0);
    for (std::size_t i = 0; i < n; ++i) {
        for (int g = 0; g < t.moves(); ++g) {
            const double rate = t.rate(i, g);
            if (!(rate > 0.0)) continue;
            const Move delta = Move::from_index(g);
            const CouplingTable c = neighbor_coupling(t, i, delta.axis, delta.sign);
            S.row_partner.push_back(c.k);
            S.row_rate.push_back(rate);
            for (int a = 0; a <= e; ++a) {
                for (int b = 0; b <= e; ++b) {
                    const double w = c.at(a, b);
                    if (w == 0.0) continue;
                    const std::size_t ta = apply_move(t.grid, i, a);
                    const std::size_t tb = apply_move(t.grid, c.k, b);
                    if (ta >= n || tb >= n) throw SolverError("coupling assigns mass to a move leaving the grid");
                    S.terms.push_back(kernels::PairTerm{ta, tb, rate * w});
                }
            }
            S.term_offset.push_back(S.terms.size());
        }
        S.state_offset.push_back(S.row_partner.size());
    }
    return S;
}

KeyInequalityResult verify_key_inequality(const kernels::PairSupport& S, const GridMeasure& m, const PhiFamily& phi,
                                          std::span<const double> f, double kappa_phi, double tol,
                                          bool throw_on_violation) {
    if (f.size() + 1 != S.state_offset.size() || m.size() != f.size())
        throw InputError("verify_key_inequality: size mismatch");
    for (std::size_t i = 0; i < f.size(); ++i)
        if (!(f[i] > 0.0)) throw InputError("verify_key_inequality needs strictly positive f");
    const kernels::KeySums sums = kernels::parallel::key_inequality_sums(S, phi, f, m.weights);
    KeyInequalityResult r;
    r.lhs = sums.lhs;
    r.rhs_bound = -kappa_phi * sums.base;
    r.slack = r.rhs_bound - r.lhs;
    if (throw_on_violation && r.slack < -tol) {
        std::ostringstream msg;
        msg << std::setprecision(17) << "key inequality violated: lhs " << r.lhs << " > rhs " << r.rhs_bound
            << " for f =";
        for (double x : f) msg << ' ' << x;
        throw VerificationError(msg.str());
    }
    return r;
}

}  // namespace fpchain
