#include "fpchain/config.hpp"

#include "fpchain/errors.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

namespace fpchain {

using nlohmann::json;

std::uint64_t fnv1a64(const std::string& s) {
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

namespace {

// Object view that remembers its path and which keys were consumed.
class Node {
public:
    Node(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw ConfigError(path_, "expected an object");
    }

    bool has(const std::string& key) const { return j_.contains(key); }

    const json& raw(const std::string& key) {
        used_.insert(key);
        return j_.at(key);
    }

    std::string sub(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

    double number(const std::string& key) {
        if (!has(key)) throw ConfigError(sub(key), "missing");
        const json& v = raw(key);
        if (!v.is_number()) throw ConfigError(sub(key), "expected a number");
        return v.get<double>();
    }

    double number(const std::string& key, double def) { return has(key) ? number(key) : def; }

    double positive(const std::string& key) {
        const double v = number(key);
        if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError(sub(key), "must be positive");
        return v;
    }

    double positive(const std::string& key, double def) { return has(key) ? positive(key) : def; }

    std::int64_t integer(const std::string& key) {
        if (!has(key)) throw ConfigError(sub(key), "missing");
        const json& v = raw(key);
        if (!v.is_number_integer()) throw ConfigError(sub(key), "expected an integer");
        return v.get<std::int64_t>();
    }

    std::int64_t integer(const std::string& key, std::int64_t def) { return has(key) ? integer(key) : def; }

    std::uint64_t unsigned_integer(const std::string& key, std::uint64_t def) {
        if (!has(key)) return def;
        const json& v = raw(key);
        if (!v.is_number_unsigned()) throw ConfigError(sub(key), "expected a nonnegative integer");
        return v.get<std::uint64_t>();
    }

    std::string string(const std::string& key, const std::string& def) {
        if (!has(key)) return def;
        const json& v = raw(key);
        if (!v.is_string()) throw ConfigError(sub(key), "expected a string");
        return v.get<std::string>();
    }

    std::vector<double> numbers(const std::string& key) {
        const json& v = raw(key);
        if (!v.is_array()) throw ConfigError(sub(key), "expected an array of numbers");
        std::vector<double> out;
        for (std::size_t k = 0; k < v.size(); ++k) {
            if (!v[k].is_number()) throw ConfigError(sub(key) + "[" + std::to_string(k) + "]", "expected a number");
            out.push_back(v[k].get<double>());
        }
        return out;
    }

    std::vector<std::vector<double>> matrix(const std::string& key) {
        const json& v = raw(key);
        if (!v.is_array()) throw ConfigError(sub(key), "expected an array of arrays");
        std::vector<std::vector<double>> out;
        for (std::size_t r = 0; r < v.size(); ++r) {
            const std::string rp = sub(key) + "[" + std::to_string(r) + "]";
            if (!v[r].is_array()) throw ConfigError(rp, "expected an array of numbers");
            std::vector<double> row;
            for (std::size_t c = 0; c < v[r].size(); ++c) {
                if (!v[r][c].is_number()) throw ConfigError(rp + "[" + std::to_string(c) + "]", "expected a number");
                row.push_back(v[r][c].get<double>());
            }
            out.push_back(std::move(row));
        }
        return out;
    }

    Node child(const std::string& key) {
        used_.insert(key);
        return Node(j_.at(key), sub(key));
    }

    void finish() const {
        for (const auto& [k, v] : j_.items()) {
            (void)v;
            if (!used_.count(k)) throw ConfigError(sub(k), "unknown key");
        }
    }

private:
    const json& j_;
    std::string path_;
    std::set<std::string> used_;
};

std::vector<double> time_grid(Node& parent, const std::string& key) {
    if (!parent.has(key)) return {};
    const json& v = parent.raw(key);
    std::vector<double> out;
    if (v.is_array()) {
        for (std::size_t k = 0; k < v.size(); ++k) {
            if (!v[k].is_number())
                throw ConfigError(parent.sub(key) + "[" + std::to_string(k) + "]", "expected a number");
            out.push_back(v[k].get<double>());
        }
    } else if (v.is_object()) {
        Node g(v, parent.sub(key));
        const double start = g.number("start", 0.0);
        const double stop = g.number("stop");
        const std::int64_t count = g.integer("count");
        g.finish();
        if (count < 1) throw ConfigError(parent.sub(key) + ".count", "must be >= 1");
        for (std::int64_t k = 0; k < count; ++k)
            out.push_back(count == 1 ? stop : start + (stop - start) * static_cast<double>(k) / (count - 1));
    } else {
        throw ConfigError(parent.sub(key), "expected an array or {start, stop, count}");
    }
    double prev = 0.0;
    for (std::size_t k = 0; k < out.size(); ++k) {
        if (!(out[k] >= prev)) throw ConfigError(parent.sub(key), "times must be nonnegative and nondecreasing");
        prev = out[k];
    }
    return out;
}

MeasureSpec measure(Node& parent, const std::string& key, const std::string& def_kind) {
    MeasureSpec m;
    m.kind = def_kind;
    if (!parent.has(key)) return m;
    Node n = parent.child(key);
    m.kind = n.string("kind", def_kind);
    if (m.kind == "point") {
        if (n.has("cell")) {
            const auto c = n.integer("cell");
            if (c < 0) throw ConfigError(n.sub("cell"), "must be nonnegative");
            m.cell = static_cast<std::size_t>(c);
        } else {
            m.x = n.numbers("x");
        }
    } else if (m.kind == "box") {
        m.lo = n.numbers("lo");
        m.hi = n.numbers("hi");
    } else if (m.kind != "uniform" && m.kind != "gibbs") {
        throw ConfigError(n.sub("kind"), "unknown measure kind '" + m.kind + "'");
    }
    n.finish();
    return m;
}

PotentialSpec potential(Node n, int d) {
    PotentialSpec p;
    p.kind = n.string("kind", "zero");
    if (n.has("kappa")) p.kappa = n.positive("kappa");
    if (p.kind == "quadratic") {
        p.hessian = n.matrix("hessian");
        if (static_cast<int>(p.hessian.size()) != d) throw ConfigError(n.sub("hessian"), "must be d x d");
        for (const auto& row : p.hessian)
            if (static_cast<int>(row.size()) != d) throw ConfigError(n.sub("hessian"), "must be d x d");
    } else if (p.kind == "additive") {
        p.terms = n.matrix("terms");
        if (static_cast<int>(p.terms.size()) != d) throw ConfigError(n.sub("terms"), "needs one polynomial per axis");
    } else if (p.kind == "tabulated") {
        p.lo = n.number("lo");
        p.hi = n.number("hi");
        p.points = static_cast<int>(n.integer("points"));
        p.values = n.numbers("values");
    } else if (p.kind != "zero") {
        throw ConfigError(n.sub("kind"), "unknown potential kind '" + p.kind + "'");
    }
    n.finish();
    return p;
}

}  // namespace

RunConfig parse_config(const std::string& text, std::optional<std::uint64_t> seed_override) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError("", std::string("JSON parse error: ") + e.what());
    }
    if (seed_override) {
        for (const char* block : {"simulate", "sde_compare"})
            if (doc.is_object() && doc.contains(block) && doc[block].is_object()) doc[block]["seed"] = *seed_override;
    }

    RunConfig c;
    Node root(doc, "");
    c.schema_version = static_cast<int>(root.integer("schema_version"));
    if (c.schema_version != kSchemaVersion)
        throw ConfigError("schema_version", "unsupported version " + std::to_string(c.schema_version));
    {
        Node g = root.child("grid");
        c.d = static_cast<int>(g.integer("d"));
        if (c.d < 1) throw ConfigError("grid.d", "must be >= 1");
        c.K = g.positive("K");
        c.h = g.positive("h");
        g.finish();
    }
    c.potential = root.has("potential") ? potential(root.child("potential"), c.d) : PotentialSpec{};
    c.sigma = root.positive("sigma", 1.0);
    try {
        c.scheme = scheme_from_string(root.string("scheme", "finite_volume"));
    } catch (const InputError& e) {
        throw ConfigError("scheme", e.what());
    }
    c.quadrature_order = static_cast<int>(root.integer("quadrature_order", 4));
    if (c.quadrature_order < 1 || c.quadrature_order > 32) throw ConfigError("quadrature_order", "must lie in [1, 32]");

    if (root.has("certify")) {
        Node n = root.child("certify");
        CertifyBlock b;
        if (n.has("alphas")) b.alphas = n.numbers("alphas");
        for (double a : b.alphas)
            if (!(a > 1.0 && a <= 2.0)) throw ConfigError("certify.alphas", "each alpha must lie in (1, 2]");
        n.finish();
        c.certify = b;
    }
    if (root.has("decay")) {
        Node n = root.child("decay");
        DecayBlock b;
        b.alpha = n.number("alpha", 1.0);
        if (!(b.alpha >= 1.0 && b.alpha <= 2.0)) throw ConfigError("decay.alpha", "must lie in [1, 2]");
        b.initial = measure(n, "initial", "box");
        b.times = time_grid(n, "times");
        b.tol = n.positive("tol", 1e-12);
        if (b.tol > 1e-6) throw ConfigError("decay.tol", "must be <= 1e-6");
        b.fit_window = n.positive("fit_window", 0.5);
        if (b.fit_window > 1.0) throw ConfigError("decay.fit_window", "must be <= 1");
        const auto steps = n.integer("discrete_steps", 0);
        if (steps < 0) throw ConfigError("decay.discrete_steps", "must be nonnegative");
        b.discrete_steps = static_cast<std::size_t>(steps);
        n.finish();
        c.decay = b;
    }
    if (root.has("contract")) {
        Node n = root.child("contract");
        ContractBlock b;
        b.mode = n.string("mode", "W1_graph");
        b.nu = measure(n, "nu", "uniform");
        b.eta = measure(n, "eta", "uniform");
        b.times = time_grid(n, "times");
        if (n.has("steps")) {
            for (double s : n.numbers("steps")) {
                if (!(s >= 0.0) || s != std::floor(s)) throw ConfigError("contract.steps", "must be nonnegative integers");
                b.steps.push_back(static_cast<std::size_t>(s));
            }
        }
        b.p = static_cast<int>(n.integer("p", 2));
        if (b.p < 1) throw ConfigError("contract.p", "must be >= 1");
        n.finish();
        c.contract = b;
    }
    if (root.has("simulate")) {
        Node n = root.child("simulate");
        SimulateBlock b;
        b.seed = n.unsigned_integer("seed", 1);
        const auto paths = n.integer("n_paths", 10000);
        if (paths < 1) throw ConfigError("simulate.n_paths", "must be positive");
        b.n_paths = static_cast<std::size_t>(paths);
        b.horizon = n.positive("horizon", 1.0);
        b.initial = measure(n, "initial", "uniform");
        if (n.has("coupling")) {
            b.coupling = n.string("coupling", "neighbor");
            if (*b.coupling != "neighbor" && *b.coupling != "product")
                throw ConfigError("simulate.coupling", "expected neighbor or product");
        }
        b.nu = measure(n, "nu", "uniform");
        b.eta = measure(n, "eta", "uniform");
        b.times = time_grid(n, "times");
        n.finish();
        c.simulate = b;
    }
    if (root.has("sde_compare")) {
        Node n = root.child("sde_compare");
        SdeCompareBlock b;
        b.seed = n.unsigned_integer("seed", 1);
        const auto paths = n.integer("n_paths", 100000);
        if (paths < 2) throw ConfigError("sde_compare.n_paths", "must be >= 2");
        b.n_paths = static_cast<std::size_t>(paths);
        b.horizon = n.positive("horizon", 1.0);
        b.sde_step = n.positive("sde_step", 1e-3);
        if (n.has("hs")) b.hs = n.numbers("hs");
        for (double h : b.hs)
            if (!(h > 0.0)) throw ConfigError("sde_compare.hs", "spacings must be positive");
        b.lo = n.has("lo") ? n.numbers("lo") : std::vector<double>(static_cast<std::size_t>(c.d), -c.K);
        b.hi = n.has("hi") ? n.numbers("hi") : std::vector<double>(static_cast<std::size_t>(c.d), c.K);
        if (static_cast<int>(b.lo.size()) != c.d || static_cast<int>(b.hi.size()) != c.d)
            throw ConfigError("sde_compare", "lo and hi need d entries");
        n.finish();
        c.sde_compare = b;
    }
    root.finish();

    try {
        (void)build_grid(c.d, c.K, c.h);
    } catch (const GridError& e) {
        throw ConfigError("grid", e.what());
    }

    c.canonical = doc.dump();
    c.hash = fnv1a64(c.canonical);
    return c;
}

RunConfig load_config(const std::string& path, std::optional<std::uint64_t> seed_override) {
    std::ifstream in(path);
    if (!in) throw ConfigError("", "cannot open config file '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), seed_override);
}

Potential make_potential(const RunConfig& c) {
    const PotentialSpec& p = c.potential;
    try {
        if (p.kind == "zero") return Potential::zero(c.d);
        if (p.kind == "quadratic") {
            Eigen::MatrixXd H(c.d, c.d);
            for (int r = 0; r < c.d; ++r)
                for (int s = 0; s < c.d; ++s) H(r, s) = p.hessian[r][s];
            return Potential::quadratic(H);
        }
        if (p.kind == "additive") {
            std::optional<double> kappa = p.kappa;
            if (!kappa) {
                // Quadratic-or-lower polynomials have a constant second derivative.
                double k = std::numeric_limits<double>::infinity();
                bool quadratic = true;
                for (const auto& t : p.terms) {
                    if (t.size() > 3) quadratic = false;
                    k = std::min(k, t.size() >= 3 ? 2.0 * t[2] : 0.0);
                }
                if (quadratic && k > 0.0) kappa = k;
            }
            return Potential::additive_polynomial(p.terms, kappa);
        }
        if (p.kind == "tabulated") return Potential::tabulated(c.d, p.lo, p.hi, p.points, p.values, p.kappa);
    } catch (const InputError& e) {
        throw ConfigError("potential", e.what());
    }
    throw ConfigError("potential.kind", "unknown kind");
}

GridSpec make_grid(const RunConfig& c) { return build_grid(c.d, c.K, c.h); }

RateTable make_rates(const RunConfig& c) {
    const GridSpec g = make_grid(c);
    const Potential V = make_potential(c);
    return c.scheme == Scheme::finite_volume ? fv_rates(g, V, c.sigma, c.quadrature_order) : fd_rates(g, V, c.sigma);
}

GridMeasure make_measure(const MeasureSpec& s, const GridSpec& g, const RateTable& rates) {
    if (s.kind == "uniform") return uniform_measure(g);
    if (s.kind == "gibbs") return invariant_measure(rates);
    if (s.kind == "box") {
        try {
            return box_measure(g, s.lo, s.hi);
        } catch (const InputError& e) {
            throw ConfigError("measure", e.what());
        }
    }
    if (s.kind == "point") {
        if (s.cell) {
            if (*s.cell >= g.num_states()) throw ConfigError("measure.cell", "out of range");
            return point_mass(g, *s.cell);
        }
        if (static_cast<int>(s.x.size()) != g.d) throw ConfigError("measure.x", "needs d coordinates");
        std::vector<int> idx(static_cast<std::size_t>(g.d));
        for (int j = 0; j < g.d; ++j)
            idx[j] = std::clamp(static_cast<int>(std::floor((s.x[j] + g.K) / g.h)), 0, g.n_per_axis - 1);
        return point_mass(g, g.flat_index(idx));
    }
    throw ConfigError("measure.kind", "unknown kind '" + s.kind + "'");
}

}  // namespace fpchain
