#include "fpchain/evolve.hpp"

#include "fpchain/errors.hpp"
#include "fpchain/functional.hpp"
#include "fpchain/kernels.hpp"

#include <boost/math/special_functions/gamma.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace fpchain {

TransitionKernel build_kernel(const RateTable& rates, std::optional<double> tau_override) {
    TransitionKernel K;
    K.grid = rates.grid;
    const std::size_t n = rates.num_states();
    double max_exit = 0.0;
    for (std::size_t i = 0; i < n; ++i) max_exit = std::max(max_exit, rates.exit_rate(i));
    if (!(max_exit > 0.0)) throw InputError("rate table has no positive rate");
    K.uniformization = 2.0 * max_exit;
    K.tau = 1.0 / K.uniformization;
    if (tau_override) {
        if (!(*tau_override > 0.0) || *tau_override * max_exit > 1.0)
            throw InputError("tau override must be positive and keep the kernel diagonal nonnegative");
        K.tau = *tau_override;
        K.uniformization = 1.0 / K.tau;
        K.tau_overridden = true;
    }
    K.p.resize(rates.rates.size());
    K.diag.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        double out = 0.0;
        for (int g = 0; g < rates.moves(); ++g) {
            const double p = rates.rate(i, g) * K.tau;
            K.p[i * rates.moves() + g] = p;
            out += p;
        }
        K.diag[i] = 1.0 - out;
    }
    return K;
}

std::size_t poisson_truncation(double lambda, double tol) {
    if (!(tol > 0.0 && tol < 1.0)) throw InputError("Poisson tolerance must lie in (0, 1)");
    if (lambda == 0.0) return 0;
    // P(X > N) = P(N + 1, lambda), the regularised lower incomplete gamma.
    std::size_t N = static_cast<std::size_t>(std::floor(lambda));
    while (boost::math::gamma_p(static_cast<double>(N) + 1.0, lambda) >= tol) ++N;
    return N;
}

namespace {

void check_time(double t, double tol) {
    if (!(t >= 0.0)) throw InputError("semigroup time must be nonnegative");
    if (!(tol > 0.0 && tol <= 1e-6)) throw InputError("semigroup tolerance must lie in (0, 1e-6]");
}

template <class Apply>
std::vector<double> poisson_series(const TransitionKernel& K, std::span<const double> x, double t, double tol,
                                   Apply apply) {
    std::vector<double> acc(x.size(), 0.0);
    if (t == 0.0) return std::vector<double>(x.begin(), x.end());
    const double lambda = K.uniformization * t;
    const std::size_t N = poisson_truncation(lambda, tol);
    std::vector<double> cur(x.begin(), x.end()), next(x.size());
    for (std::size_t k = 0; k <= N; ++k) {
        const double kk = static_cast<double>(k);
        const double w = std::exp(-lambda + kk * std::log(lambda) - std::lgamma(kk + 1.0));
        if (w > 0.0)
            for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += w * cur[i];
        if (k == N) break;
        apply(cur, next);
        cur.swap(next);
    }
    return acc;
}

}  // namespace

GridMeasure step(const TransitionKernel& K, const GridMeasure& nu) {
    GridMeasure out{std::vector<double>(nu.size())};
    kernels::parallel::kernel_apply_measure(K, nu.weights, out.weights);
    return out;
}

std::vector<double> step(const TransitionKernel& K, std::span<const double> f) {
    std::vector<double> out(f.size());
    kernels::parallel::kernel_apply_function(K, f, out);
    return out;
}

GridMeasure semigroup_apply(const TransitionKernel& K, const GridMeasure& nu, double t, double tol) {
    check_time(t, tol);
    if (nu.size() != K.num_states()) throw InputError("measure size does not match the kernel");
    return GridMeasure{poisson_series(K, nu.weights, t, tol, [&](const std::vector<double>& a, std::vector<double>& b) {
        kernels::parallel::kernel_apply_measure(K, a, b);
    })};
}

std::vector<double> semigroup_apply(const TransitionKernel& K, std::span<const double> f, double t, double tol) {
    check_time(t, tol);
    if (f.size() != K.num_states()) throw InputError("function size does not match the kernel");
    return poisson_series(K, f, t, tol, [&](const std::vector<double>& a, std::vector<double>& b) {
        kernels::parallel::kernel_apply_function(K, a, b);
    });
}

double fit_exponential_rate(std::span<const double> x, std::span<const double> y) {
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    std::size_t n = 0;
    for (std::size_t k = 0; k < x.size(); ++k) {
        if (!(y[k] > 0.0)) continue;
        const double ly = std::log(y[k]);
        sx += x[k];
        sy += ly;
        sxx += x[k] * x[k];
        sxy += x[k] * ly;
        ++n;
    }
    if (n < 2) return std::numeric_limits<double>::quiet_NaN();
    const double dn = static_cast<double>(n);
    const double denom = dn * sxx - sx * sx;
    if (denom == 0.0) return std::numeric_limits<double>::quiet_NaN();
    return -(dn * sxy - sx * sy) / denom;
}

namespace {

double tail_fit(std::span<const double> times, std::span<const double> h, double window) {
    if (!(window > 0.0 && window <= 1.0)) throw InputError("fit window must lie in (0, 1]");
    const double h0 = h.empty() ? 0.0 : h.front();
    const std::size_t n = times.size();
    const std::size_t first = n - static_cast<std::size_t>(std::ceil(window * static_cast<double>(n)));
    std::vector<double> x, y;
    for (std::size_t k = first; k < n; ++k) {
        // Values near round-off carry no rate information.
        if (h[k] > 1e-10 * h0) {
            x.push_back(times[k]);
            y.push_back(h[k]);
        }
    }
    return fit_exponential_rate(x, y);
}

}  // namespace

EntropyCurve entropy_decay_curve(const TransitionKernel& K, const GridMeasure& m, const PhiFamily& phi,
                                 std::span<const double> f0, std::span<const double> times, double kappa_phi,
                                 double tol, double fit_window) {
    EntropyCurve c;
    c.fit_window = fit_window;
    const double h0 = phi_entropy(phi, f0, m);
    std::vector<double> f(f0.begin(), f0.end());
    double t_prev = 0.0;
    for (double t : times) {
        if (t < t_prev) throw InputError("entropy curve times must be nondecreasing and nonnegative");
        f = semigroup_apply(K, f, t - t_prev, tol);
        t_prev = t;
        c.times.push_back(t);
        c.entropy.push_back(phi_entropy(phi, f, m));
        c.bound.push_back(std::exp(-kappa_phi * t) * h0);
    }
    c.fitted_rate = (h0 > 0.0) ? tail_fit(c.times, c.entropy, fit_window) : 0.0;
    return c;
}

DiscreteDecayReport discrete_decay_report(const TransitionKernel& K, const RateTable& rates, const GridMeasure& m,
                                          const PhiFamily& phi, std::span<const double> f0, std::size_t n_max,
                                          double kappa_phi, std::optional<double> kappa_1, double tol,
                                          bool throw_on_violation) {
    if (kappa_phi > 0.0 && !(K.tau < 1.0 / kappa_phi))
        throw HypothesisError("discrete decay needs tau < 1/kappa_phi");
    DiscreteDecayReport r;
    r.c_p = 2.0 / (phi.alpha * K.tau);
    const double inf = std::numeric_limits<double>::infinity();
    r.min_slack_condition_i = r.min_slack_condition_ii = r.min_slack_bound = r.min_slack_kappa1 = inf;

    std::vector<double> f(f0.begin(), f0.end());
    double H = phi_entropy(phi, f, m);
    double F = fisher_information(phi, rates, m, f);
    const double H0 = H;
    if (H0 > 0.0 && kappa_phi > 0.0) r.c_f = r.c_p * F / (kappa_phi * H0);

    auto note = [&](double slack, double& slot, std::size_t n) {
        slot = std::min(slot, slack);
        if (slack < -tol && !r.first_violation) {
            r.first_violation = n;
            r.ok = false;
        }
    };

    for (std::size_t n = 0; n <= n_max; ++n) {
        const double dn = static_cast<double>(n);
        r.curve.times.push_back(dn);
        r.curve.entropy.push_back(H);
        r.fisher.push_back(F);
        if (r.c_f) {
            const double b = *r.c_f * std::exp(-kappa_phi * dn * K.tau) * H0;
            r.curve.bound.push_back(b);
            note(b - H, r.min_slack_bound, n);
        } else {
            r.curve.bound.push_back(std::numeric_limits<double>::quiet_NaN());
        }
        if (kappa_1) {
            const double b = std::exp(-*kappa_1 * dn * K.tau) * H0;
            r.kappa1_bound.push_back(b);
            note(b - H, r.min_slack_kappa1, n);
        }
        if (n == n_max) break;
        std::vector<double> next = step(K, f);
        const double Hn = phi_entropy(phi, next, m);
        const double Fn = fisher_information(phi, rates, m, next);
        const double P = -(Hn - H) / K.tau;
        r.production.push_back(P);
        note(std::min(P, r.c_p * F - P), r.min_slack_condition_i, n);
        note(-K.tau * kappa_phi * F - (Fn - F), r.min_slack_condition_ii, n);
        f.swap(next);
        H = Hn;
        F = Fn;
    }
    r.curve.fitted_rate = H0 > 0.0 ? tail_fit(r.curve.times, r.curve.entropy, r.curve.fit_window) / K.tau : 0.0;
    if (throw_on_violation && !r.ok) {
        std::ostringstream msg;
        msg << "discrete decay verification failed at n = " << *r.first_violation << " (condition (i) slack "
            << r.min_slack_condition_i << ", condition (ii) slack " << r.min_slack_condition_ii << ", bound slack "
            << r.min_slack_bound << ")";
        throw VerificationError(msg.str());
    }
    return r;
}

}  // namespace fpchain
