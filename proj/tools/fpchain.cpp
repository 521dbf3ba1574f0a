// Batch front-end: builds a chain from a JSON config and writes certificates,
// decay curves, contraction reports and simulation outputs.

#include "fpchain/chain.hpp"
#include "fpchain/config.hpp"
#include "fpchain/coupling.hpp"
#include "fpchain/errors.hpp"
#include "fpchain/evolve.hpp"
#include "fpchain/functional.hpp"
#include "fpchain/simulate.hpp"
#include "fpchain/transport.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace fpchain;

namespace {

enum Exit { ok = 0, config_error = 1, not_certified = 2, hypothesis = 3, numerical = 4 };

struct Options {
    std::string config;
    std::string out = ".";
    std::optional<std::uint64_t> seed;
    bool quiet = false;
};

std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

class CsvWriter {
public:
    CsvWriter(const fs::path& path, const RunConfig& cfg, const std::string& command) : os_(path) {
        if (!os_) throw InputError("cannot write '" + path.string() + "'");
        os_ << "# fpchain " << kVersion << "\n";
        os_ << "# command=" << command << "\n";
        os_ << "# config_hash=" << hex64(cfg.hash) << "\n";
    }

    void comment(const std::string& key, const std::string& value) { os_ << "# " << key << "=" << value << "\n"; }
    void columns(const std::vector<std::string>& names) { row_strings(names); }

    void row(const std::vector<double>& values) {
        for (std::size_t k = 0; k < values.size(); ++k) os_ << (k ? "," : "") << num(values[k]);
        os_ << "\n";
    }

private:
    void row_strings(const std::vector<std::string>& v) {
        for (std::size_t k = 0; k < v.size(); ++k) os_ << (k ? "," : "") << v[k];
        os_ << "\n";
    }

    std::ofstream os_;
};

void constants(CsvWriter& w, const DecayCertificate& c) {
    w.comment("kappa_phi", num(c.kappa_phi));
    w.comment("kappa_1", num(c.kappa_1));
    w.comment("tau", num(c.tau));
}

DecayCertificate require_certificate(const RateTable& rates) {
    DecayCertificate c = decay_certificate(rates);
    if (!c.a3_satisfied)
        throw AssumptionError("decay constants are not certified: kappa_+/- is not positive at cell " +
                              std::to_string(c.min_cell) + ", axis " + std::to_string(c.min_axis + 1));
    return c;
}

std::vector<double> density(const GridMeasure& mu, const GridMeasure& m) {
    std::vector<double> f(mu.weights.size());
    for (std::size_t i = 0; i < f.size(); ++i) f[i] = mu.weights[i] / m.weights[i];
    return f;
}

std::vector<double> default_times(double stop, int count) {
    std::vector<double> t(static_cast<std::size_t>(count));
    for (int k = 0; k < count; ++k) t[k] = stop * k / (count - 1);
    return t;
}

void say(const Options& o, const std::string& s) {
    if (!o.quiet) std::cout << s << "\n";
}

int cmd_certify(const Options& o, const RunConfig& cfg) {
    const RateTable rates = make_rates(cfg);
    const std::vector<double> alphas = cfg.certify ? cfg.certify->alphas : CertifyBlock{}.alphas;
    const DecayCertificate c = decay_certificate(rates, alphas);

    nlohmann::ordered_json j;
    j["version"] = kVersion;
    j["config_hash"] = hex64(cfg.hash);
    const nlohmann::ordered_json body = nlohmann::ordered_json::parse(certificate_json(c));
    for (const auto& [k, v] : body.items()) j[k] = v;
    const fs::path path = fs::path(o.out) / "certificate.json";
    std::ofstream os(path);
    if (!os) throw InputError("cannot write '" + path.string() + "'");
    os << j.dump(2) << "\n";

    if (!o.quiet) {
        std::cout << "grid: d=" << cfg.d << " K=" << num(cfg.K) << " h=" << num(cfg.h) << " scheme=" << to_string(cfg.scheme)
                  << "\n";
        std::cout << "kappa_phi = " << num(c.kappa_phi) << " (at cell " << c.min_cell << ", axis " << c.min_axis + 1
                  << ")\n";
        std::cout << "log-Sobolev constant = " << num(c.lsi_constant) << "\n";
        for (const auto& [a, v] : c.beckner) std::cout << "Beckner alpha=" << num(a) << ": " << num(v) << "\n";
        std::cout << "tau = " << num(c.tau) << ", coarse Ricci = " << num(c.coarse_ricci) << "\n";
        std::cout << (c.a3_satisfied ? "certified" : "NOT certified") << "\n";
        std::cout << "wrote " << path.string() << "\n";
    }
    return c.a3_satisfied ? ok : not_certified;
}

int cmd_decay(const Options& o, const RunConfig& cfg) {
    if (!cfg.decay) throw ConfigError("decay", "block missing");
    const DecayBlock& b = *cfg.decay;
    const RateTable rates = make_rates(cfg);
    const GridSpec grid = make_grid(cfg);
    const DecayCertificate c = require_certificate(rates);
    const GridMeasure m = invariant_measure(rates);
    const std::vector<double> f0 = density(make_measure(b.initial, grid, rates), m);
    const PhiFamily phi(b.alpha);
    const TransitionKernel K = build_kernel(rates);
    const std::vector<double> times = b.times.empty() ? default_times(5.0 / c.kappa_phi, 20) : b.times;

    const EntropyCurve curve = entropy_decay_curve(K, m, phi, f0, times, c.kappa_phi, b.tol, b.fit_window);
    {
        CsvWriter w(fs::path(o.out) / "decay.csv", cfg, "decay");
        constants(w, c);
        w.comment("alpha", num(b.alpha));
        w.comment("fitted_rate", num(curve.fitted_rate));
        w.columns({"t", "entropy", "bound", "ratio"});
        for (std::size_t k = 0; k < curve.times.size(); ++k) {
            const double ratio = curve.bound[k] > 0.0 ? curve.entropy[k] / curve.bound[k] : 0.0;
            w.row({curve.times[k], curve.entropy[k], curve.bound[k], ratio});
        }
    }
    say(o, "fitted rate " + num(curve.fitted_rate) + " vs kappa_phi " + num(c.kappa_phi));

    if (b.discrete_steps > 0) {
        std::optional<double> k1;
        if (rates.additive && b.alpha == 1.0) k1 = c.kappa_1;
        const DiscreteDecayReport r =
            discrete_decay_report(K, rates, m, phi, f0, b.discrete_steps, c.kappa_phi, k1);
        CsvWriter w(fs::path(o.out) / "decay_discrete.csv", cfg, "decay");
        constants(w, c);
        w.comment("alpha", num(b.alpha));
        w.comment("c_p", num(r.c_p));
        w.comment("c_f", r.c_f ? num(*r.c_f) : "none");
        w.comment("ok", r.ok ? "true" : "false");
        std::vector<std::string> cols{"n", "entropy", "bound", "fisher", "production"};
        if (k1) cols.push_back("kappa1_bound");
        w.columns(cols);
        for (std::size_t n = 0; n < r.curve.times.size(); ++n) {
            std::vector<double> row{r.curve.times[n], r.curve.entropy[n], r.curve.bound[n], r.fisher[n],
                                    n < r.production.size() ? r.production[n] : 0.0};
            if (k1) row.push_back(r.kappa1_bound[n]);
            w.row(row);
        }
        if (!r.ok) {
            std::cerr << "discrete decay check failed at n = " << (r.first_violation ? *r.first_violation : 0) << "\n";
            return numerical;
        }
    }
    return ok;
}

int cmd_contract(const Options& o, const RunConfig& cfg) {
    if (!cfg.contract) throw ConfigError("contract", "block missing");
    const ContractBlock& b = *cfg.contract;
    ContractionMode mode;
    try {
        mode = contraction_mode_from_string(b.mode);
    } catch (const InputError& e) {
        throw ConfigError("contract.mode", e.what());
    }
    const RateTable rates = make_rates(cfg);
    const GridSpec grid = make_grid(cfg);
    const GridMeasure nu = make_measure(b.nu, grid, rates);
    const GridMeasure eta = make_measure(b.eta, grid, rates);
    const bool w1 = mode == ContractionMode::W1_graph || mode == ContractionMode::W1_euclid;
    // W1 modes rely on the certified kappa_1; W2/Wp use the convexity modulus.
    const DecayCertificate c = w1 ? require_certificate(rates) : decay_certificate(rates);
    const std::vector<double> times = b.times.empty() ? default_times(2.0, 21) : b.times;

    const ContractionReport r = contraction_report(rates, nu, eta, times, mode, c.kappa_1, b.p);
    auto write = [&](const ContractionReport& rep, const std::string& file, const std::string& tcol) {
        CsvWriter w(fs::path(o.out) / file, cfg, "contract");
        constants(w, c);
        w.comment("mode", to_string(rep.mode));
        w.comment("p", std::to_string(rep.p));
        w.comment("rate", num(rep.rate));
        w.comment("prefactor", num(rep.prefactor));
        w.columns({tcol, "distance", "bound", "excess"});
        for (std::size_t k = 0; k < rep.times.size(); ++k)
            w.row({rep.times[k], rep.distance[k], rep.bound[k], rep.excess[k]});
    };
    write(r, "contract.csv", "t");
    if (!b.steps.empty())
        write(contraction_report_discrete(rates, nu, eta, b.steps, mode, c.kappa_1, b.p), "contract_discrete.csv",
              "n");
    double worst = -INFINITY;
    for (double e : r.excess) worst = std::max(worst, e);
    say(o, "max excess over bound: " + num(worst));
    return ok;
}

int cmd_simulate(const Options& o, const RunConfig& cfg) {
    if (!cfg.simulate) throw ConfigError("simulate", "block missing");
    const SimulateBlock& b = *cfg.simulate;
    const RateTable rates = make_rates(cfg);
    const GridSpec grid = make_grid(cfg);
    SimConfig sc;
    sc.seed = b.seed;
    sc.n_paths = b.n_paths;
    sc.horizon = b.horizon;

    const GridMeasure init = make_measure(b.initial, grid, rates);
    const TrajectoryBatch batch = sample_ctmc(rates, init, sc);
    const GridMeasure emp = empirical_law(grid, batch.terminal);
    const GridMeasure exact = semigroup_apply(build_kernel(rates), init, b.horizon);
    const double tv = total_variation(emp, exact);
    {
        CsvWriter w(fs::path(o.out) / "simulate_terminal.csv", cfg, "simulate");
        w.comment("rng", kRngId);
        w.comment("seed", std::to_string(b.seed));
        w.comment("n_paths", std::to_string(b.n_paths));
        w.comment("horizon", num(b.horizon));
        w.comment("total_variation", num(tv));
        std::vector<std::string> cols{"cell"};
        for (int j = 0; j < grid.d; ++j) cols.push_back("x" + std::to_string(j + 1));
        cols.push_back("empirical");
        cols.push_back("exact");
        w.columns(cols);
        for (std::size_t i = 0; i < grid.num_states(); ++i) {
            std::vector<double> row{static_cast<double>(i)};
            for (double x : grid.center(i)) row.push_back(x);
            row.push_back(emp.weights[i]);
            row.push_back(exact.weights[i]);
            w.row(row);
        }
    }
    say(o, "total variation to the semigroup law: " + num(tv));

    if (b.coupling) {
        const DecayCertificate c = decay_certificate(rates);
        const CouplingSource src = *b.coupling == "product" ? CouplingSource::product : CouplingSource::neighbor;
        const std::vector<double> times = b.times.empty() ? default_times(b.horizon, 11) : b.times;
        const CoupledRun run = sample_coupled_pair(src, rates, make_measure(b.nu, grid, rates),
                                                   make_measure(b.eta, grid, rates), sc, times);
        CsvWriter w(fs::path(o.out) / "simulate_coupled.csv", cfg, "simulate");
        constants(w, c);
        w.comment("rng", kRngId);
        w.comment("seed", std::to_string(b.seed));
        w.comment("coupling", *b.coupling);
        w.comment("fitted_rate", num(run.fitted_rate));
        w.comment("rate_stderr", num(run.rate_stderr));
        w.columns({"t", "mean_distance", "stderr", "bound"});
        const double d0 = run.mean_distance.empty() ? 0.0 : run.mean_distance.front();
        for (std::size_t k = 0; k < run.times.size(); ++k)
            w.row({run.times[k], run.mean_distance[k], run.stderr_distance[k],
                   std::exp(-c.kappa_1 * (run.times[k] - run.times.front())) * d0});
        say(o, "coupled contraction rate " + num(run.fitted_rate) + " +- " + num(run.rate_stderr));
    }
    return ok;
}

int cmd_sde_compare(const Options& o, const RunConfig& cfg) {
    if (!cfg.sde_compare) throw ConfigError("sde_compare", "block missing");
    const SdeCompareBlock& b = *cfg.sde_compare;
    const Potential V = make_potential(cfg);
    SimConfig sc;
    sc.seed = b.seed;
    sc.n_paths = b.n_paths;
    sc.horizon = b.horizon;
    sc.sde_step = b.sde_step;
    const SdeBatch sde = sample_reflected_sde(V, cfg.sigma, cfg.K, uniform_box_sampler(b.lo, b.hi), sc);

    // Two halves of the sample estimate the Monte Carlo error of the binned law.
    const std::size_t half = sde.terminal.size() / static_cast<std::size_t>(2 * sde.d) * sde.d;
    SdeBatch first{sde.d, {sde.terminal.begin(), sde.terminal.begin() + static_cast<std::ptrdiff_t>(half)}};
    SdeBatch second{sde.d, {sde.terminal.begin() + static_cast<std::ptrdiff_t>(half),
                            sde.terminal.begin() + static_cast<std::ptrdiff_t>(2 * half)}};

    CsvWriter w(fs::path(o.out) / "sde_compare.csv", cfg, "sde_compare");
    w.comment("rng", kRngId);
    w.comment("seed", std::to_string(b.seed));
    w.comment("n_paths", std::to_string(b.n_paths));
    w.comment("sde_step", num(b.sde_step));
    w.comment("horizon", num(b.horizon));
    w.columns({"h", "w1", "mc_error", "total_variation"});
    for (double h : b.hs) {
        const GridSpec grid = build_grid(cfg.d, cfg.K, h);
        const RateTable rates = cfg.scheme == Scheme::finite_volume ? fv_rates(grid, V, cfg.sigma, cfg.quadrature_order)
                                                                     : fd_rates(grid, V, cfg.sigma);
        const GridMeasure chain = semigroup_apply(build_kernel(rates), box_measure(grid, b.lo, b.hi), b.horizon);
        const GridMeasure binned = bin_to_grid(grid, sde);
        const double w1 = wp_euclid(grid, chain, binned, 1);
        const double mc = 0.5 * wp_euclid(grid, bin_to_grid(grid, first), bin_to_grid(grid, second), 1);
        w.row({h, w1, mc, total_variation(chain, binned)});
        say(o, "h=" + num(h) + " W1=" + num(w1) + " (mc error " + num(mc) + ")");
    }
    return ok;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Lattice Fokker-Planck chains: certificates, decay, contraction and simulation"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);

    Options o;
    std::uint64_t seed = 0;
    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", o.config, "JSON config file")->required()->check(CLI::ExistingFile);
        sub->add_option("--out", o.out, "output directory (created if missing)");
        sub->add_option("--seed", seed, "override the simulation seed");
        sub->add_flag("--quiet", o.quiet, "suppress the summary on stdout");
    };
    struct Sub {
        const char* name;
        const char* help;
        int (*run)(const Options&, const RunConfig&);
    };
    const std::vector<Sub> subs{
        {"certify", "compute decay constants and write certificate.json", cmd_certify},
        {"decay", "entropy decay curves (decay.csv, decay_discrete.csv)", cmd_decay},
        {"contract", "Wasserstein contraction report (contract.csv)", cmd_contract},
        {"simulate", "Monte Carlo paths and coupled pairs", cmd_simulate},
        {"sde-compare", "chain law against the reflected SDE across spacings", cmd_sde_compare},
    };
    std::vector<CLI::App*> handles;
    for (const Sub& s : subs) {
        handles.push_back(app.add_subcommand(s.name, s.help));
        add_common(handles.back());
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? ok : config_error;
    }

    std::size_t which = 0;
    for (; which < handles.size(); ++which)
        if (handles[which]->parsed()) break;
    if (handles[which]->count("--seed")) o.seed = seed;

    try {
        const RunConfig cfg = load_config(o.config, o.seed);
        fs::create_directories(o.out);
        return subs[which].run(o, cfg);
    } catch (const AssumptionError& e) {
        std::cerr << "not certified: " << e.what() << "\n";
        return not_certified;
    } catch (const HypothesisError& e) {
        std::cerr << "hypothesis mismatch: " << e.what() << "\n";
        return hypothesis;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return config_error;
    } catch (const GridError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return config_error;
    } catch (const PositivityError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return config_error;
    } catch (const InputError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return config_error;
    } catch (const fs::filesystem_error& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return config_error;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return numerical;
    }
}
