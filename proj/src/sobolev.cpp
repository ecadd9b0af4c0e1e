#include "knotflow/sobolev.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <mutex>
#include <numbers>

#include <fftw3.h>

#include "knotflow/detail/reduce.hpp"

namespace knotflow {

namespace {

int wrap_index(int i, int n) { return ((i % n) + n) % n; }

// |x|^{rho-1} sign(x), continuous through 0 for rho > 1
double signed_power(double x, double rho) {
    if (x == 0.0) return 0.0;
    return std::copysign(std::pow(std::abs(x), rho - 1.0), x);
}

// Gagliardo kernel weights per index offset: w = min(off, n-off)/n is the
// periodic parameter distance, the kernel is w^{-(1+s rho)}
std::vector<double> offset_weights(int n, double s, double rho) {
    std::vector<double> w(static_cast<size_t>(n), 0.0);
    const double ex = 1.0 + s * rho;
    for (int off = 1; off < n; ++off) {
        const double dist = static_cast<double>(std::min(off, n - off)) / n;
        w[static_cast<size_t>(off)] = std::pow(dist, -ex);
    }
    return w;
}

double pair_power(double diff_sq, double rho) {
    if (rho == 2.0) return diff_sq;
    return std::pow(diff_sq, 0.5 * rho);
}

// rho-th power of the Gagliardo seminorm, uniform 1/n^2 weights
template <typename DiffSq>
double gagliardo_rho_impl(int n, double s, double rho, DiffSq diff_sq) {
    const std::vector<double> w = offset_weights(n, s, rho);
    detail::KahanSum total;
    detail::chunked_rows(
        n, detail::KahanSum{},
        [&](int i, detail::KahanSum& acc) {
            for (int j = i + 1; j < n; ++j)
                acc.add(2.0 * pair_power(diff_sq(i, j), rho) * w[static_cast<size_t>(j - i)]);
        },
        [&](const detail::KahanSum& acc) { total.add(acc.get()); });
    return total.get() / (static_cast<double>(n) * n);
}

double gagliardo_rho(const std::vector<double>& f, double s, double rho) {
    return gagliardo_rho_impl(static_cast<int>(f.size()), s, rho, [&](int i, int j) {
        const double d = f[static_cast<size_t>(j)] - f[static_cast<size_t>(i)];
        return d * d;
    });
}

double gagliardo_rho(const NodeField& f, double s, double rho) {
    return gagliardo_rho_impl(static_cast<int>(f.size()), s, rho, [&](int i, int j) {
        return (f[static_cast<size_t>(j)] - f[static_cast<size_t>(i)]).squaredNorm();
    });
}

double lp_rho(const std::vector<double>& f, double rho) {
    detail::KahanSum sum;
    for (double v : f) sum.add(pair_power(v * v, rho));
    return sum.get() / static_cast<double>(f.size());
}

double lp_rho(const NodeField& f, double rho) {
    detail::KahanSum sum;
    for (const Vec3& v : f) sum.add(pair_power(v.squaredNorm(), rho));
    return sum.get() / static_cast<double>(f.size());
}

std::vector<double> central_difference(const std::vector<double>& f) {
    const int n = static_cast<int>(f.size());
    std::vector<double> out(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i)
        out[static_cast<size_t>(i)] = (f[static_cast<size_t>(wrap_index(i + 1, n))] -
                                       f[static_cast<size_t>(wrap_index(i - 1, n))]) *
                                      (0.5 * n);
    return out;
}

NodeField central_difference(const NodeField& f) {
    const int n = static_cast<int>(f.size());
    NodeField out(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i)
        out[static_cast<size_t>(i)] = (f[static_cast<size_t>(wrap_index(i + 1, n))] -
                                       f[static_cast<size_t>(wrap_index(i - 1, n))]) *
                                      (0.5 * n);
    return out;
}

template <typename Samples>
double sobolev_norm_impl(const Samples& f, const NormSpec& spec) {
    spec.validate();
    double total = lp_rho(f, spec.rho);
    if (spec.k == 0) {
        total += gagliardo_rho(f, spec.s, spec.rho);
    } else {
        const Samples df = central_difference(f);
        total += lp_rho(df, spec.rho) + gagliardo_rho(df, spec.s, spec.rho);
    }
    return std::pow(total, 1.0 / spec.rho);
}

// |v|^{rho-2} v, the derivative of |v|^rho / rho; zero vector maps to zero
Vec3 vec_signed_power(const Vec3& v, double rho) {
    const double sq = v.squaredNorm();
    if (sq == 0.0) return Vec3::Zero();
    if (rho == 2.0) return v;
    return std::pow(sq, 0.5 * (rho - 2.0)) * v;
}

// FFTW plan creation is not thread safe; transforms here are short enough
// that serializing whole calls costs nothing
std::mutex& fft_mutex() {
    static std::mutex m;
    return m;
}

// unnormalized half spectrum H_k = sum_j x_j e^{-2 pi i jk/n}, k = 0..n/2
std::vector<std::complex<double>> dft_forward(const std::vector<double>& x) {
    const int n = static_cast<int>(x.size());
    std::vector<std::complex<double>> out(static_cast<size_t>(n / 2 + 1));
    std::lock_guard<std::mutex> lock(fft_mutex());
    fftw_plan plan = fftw_plan_dft_r2c_1d(n, const_cast<double*>(x.data()),
                                          reinterpret_cast<fftw_complex*>(out.data()),
                                          FFTW_ESTIMATE);
    fftw_execute(plan);
    fftw_destroy_plan(plan);
    return out;
}

std::vector<double> dft_inverse(std::vector<std::complex<double>> h, int n) {
    std::vector<double> out(static_cast<size_t>(n));
    std::lock_guard<std::mutex> lock(fft_mutex());
    fftw_plan plan = fftw_plan_dft_c2r_1d(n, reinterpret_cast<fftw_complex*>(h.data()),
                                          out.data(), FFTW_ESTIMATE);
    fftw_execute(plan);
    fftw_destroy_plan(plan);
    for (double& v : out) v /= n;
    return out;
}

std::vector<double> component(const NodeField& field, int c) {
    std::vector<double> out(field.size());
    for (size_t i = 0; i < field.size(); ++i) out[i] = field[i][c];
    return out;
}

void check_metric(const NodeField& field, const SpectralMetric& metric) {
    if (static_cast<int>(field.size()) != metric.n())
        throw ValidationError("spectral metric size does not match the field");
}

// apply symbol^power to each coordinate spectrum of a node field
NodeField spectral_scale(const NodeField& field, const SpectralMetric& metric, double power) {
    const int n = metric.n();
    NodeField out(field.size(), Vec3::Zero());
    for (int c = 0; c < 3; ++c) {
        std::vector<std::complex<double>> h = dft_forward(component(field, c));
        for (size_t k = 0; k < h.size(); ++k) {
            const double m = metric.symbol[k];
            h[k] *= (power == 1.0) ? m : ((power == -1.0) ? 1.0 / m : std::pow(m, power));
        }
        const std::vector<double> back = dft_inverse(std::move(h), n);
        for (int i = 0; i < n; ++i) out[static_cast<size_t>(i)][c] = back[static_cast<size_t>(i)];
    }
    return out;
}

NodeField axpy(const NodeField& x, double a, const NodeField& y) {
    NodeField out(x.size());
    for (size_t i = 0; i < x.size(); ++i) out[i] = x[i] + a * y[i];
    return out;
}

void scale_in_place(NodeField& x, double a) {
    for (Vec3& v : x) v *= a;
}

std::vector<double> log_speeds(const ClosedCurve& curve) {
    std::vector<double> sigma(curve.speeds().size());
    for (size_t i = 0; i < sigma.size(); ++i) sigma[i] = std::log(curve.speeds()[i]);
    return sigma;
}

} // namespace

void NormSpec::validate() const {
    if (k != 0 && k != 1) throw ValidationError("norm spec requires k in {0, 1}");
    if (!(s > 0.0 && s < 1.0)) throw ValidationError("norm spec requires 0 < s < 1");
    if (!(rho > 1.0)) throw ValidationError("norm spec requires rho > 1");
}

TotalEnergyConfig TotalEnergyConfig::make(const AnyEnergyParams& params, double kappa,
                                          double epsilon) {
    validate_params(params);
    if (!(kappa >= 1.0)) throw ValidationError("total energy config requires kappa >= 1");
    if (!(epsilon >= 0.0)) throw ValidationError("total energy config requires epsilon >= 0");

    double s = 0.0;
    double rho = 0.0;
    std::visit(
        [&](const auto& prm) {
            using T = std::decay_t<decltype(prm)>;
            if constexpr (std::is_same_v<T, OharaParams>) {
                s = (prm.alpha * prm.p - 1.0) / (2.0 * prm.p);
                rho = 2.0 * prm.p;
            } else if constexpr (std::is_same_v<T, MengerParams>) {
                s = (3.0 * prm.p - 2.0) / prm.q - 2.0;
                rho = prm.q;
            } else {
                s = (prm.p - 1.0) / prm.q - 1.0;
                rho = prm.q;
            }
        },
        params);
    if (!(s > 0.0 && s < 1.0))
        throw ValidationError("total energy config requires a derived strain order 0 < s < 1");
    if (!(s + epsilon < 1.0)) throw ValidationError("total energy config requires s + epsilon < 1");
    if (!((s + epsilon) * rho > 1.0))
        throw ValidationError("total energy config requires (s + epsilon) * rho > 1");

    TotalEnergyConfig cfg;
    cfg.params = params;
    cfg.kappa = kappa;
    cfg.epsilon = epsilon;
    cfg.penalty_space = NormSpec{0, s, rho};
    cfg.ambient_space = NormSpec{1, s, rho};
    return cfg;
}

SpectralMetric SpectralMetric::make(int n, double sigma) {
    if (n < 2) throw ValidationError("spectral metric requires at least 2 samples");
    if (!(sigma >= 0.0)) throw ValidationError("spectral metric requires sigma >= 0");
    SpectralMetric metric;
    metric.sigma = sigma;
    metric.symbol.resize(static_cast<size_t>(n));
    for (int k = 0; k < n; ++k) {
        const int khat = (k <= n / 2) ? k : k - n;
        const double freq = 2.0 * std::numbers::pi * khat;
        metric.symbol[static_cast<size_t>(k)] = std::pow(1.0 + freq * freq, sigma);
    }
    return metric;
}

double lp_norm(const std::vector<double>& f, double rho) {
    return std::pow(lp_rho(f, rho), 1.0 / rho);
}

double lp_norm(const NodeField& f, double rho) { return std::pow(lp_rho(f, rho), 1.0 / rho); }

double gagliardo_seminorm(const std::vector<double>& f, double s, double rho) {
    return std::pow(gagliardo_rho(f, s, rho), 1.0 / rho);
}

double gagliardo_seminorm(const NodeField& f, double s, double rho) {
    return std::pow(gagliardo_rho(f, s, rho), 1.0 / rho);
}

double sobolev_norm(const std::vector<double>& f, const NormSpec& spec) {
    return sobolev_norm_impl(f, spec);
}

double sobolev_norm(const NodeField& f, const NormSpec& spec) { return sobolev_norm_impl(f, spec); }

GradientField norm_power_gradient(const NodeField& f, const NormSpec& spec, double theta) {
    spec.validate();
    if (!(theta > 1.0)) throw ValidationError("norm power gradient requires theta > 1");
    const int n = static_cast<int>(f.size());
    if (n < 3) throw ValidationError("norm power gradient requires at least 3 samples");
    const double rho = spec.rho;

    // the Gagliardo term (and for k = 1 a second Lebesgue term) act on the
    // central difference rather than the samples themselves
    NodeField df;
    const NodeField* level = &f;
    if (spec.k == 1) {
        df = central_difference(f);
        level = &df;
    }

    double srho = lp_rho(f, rho) + gagliardo_rho(*level, spec.s, rho);
    if (spec.k == 1) srho += lp_rho(df, rho);

    GradientField out{NodeField(static_cast<size_t>(n), Vec3::Zero())};
    if (srho == 0.0) return out; // theta > 1 makes the power flat at zero

    // dS/dg_l for the terms living on the Gagliardo level g
    const std::vector<double> w = offset_weights(n, spec.s, rho);
    NodeField dlevel(static_cast<size_t>(n), Vec3::Zero());
    detail::chunked_rows(
        n, 0,
        [&](int l, int&) {
            const NodeField& g = *level;
            Vec3 acc = Vec3::Zero();
            if (spec.k == 1) acc += (rho / n) * vec_signed_power(g[static_cast<size_t>(l)], rho);
            const double c2 = 2.0 * rho / (static_cast<double>(n) * n);
            for (int j = 0; j < n; ++j) {
                if (j == l) continue;
                const int off = std::abs(j - l);
                acc += c2 * w[static_cast<size_t>(off)] *
                       vec_signed_power(g[static_cast<size_t>(l)] - g[static_cast<size_t>(j)], rho);
            }
            dlevel[static_cast<size_t>(l)] = acc;
        },
        [](const int&) {});

    // chain rule: T^theta = S^{theta/rho}, and for k = 1 each node enters the
    // two neighbouring central differences with weights +-n/2
    const double outer = (theta / rho) * std::pow(srho, theta / rho - 1.0);
    for (int m = 0; m < n; ++m) {
        Vec3 raw = (rho / n) * vec_signed_power(f[static_cast<size_t>(m)], rho);
        if (spec.k == 1) {
            raw += (0.5 * n) * (dlevel[static_cast<size_t>(wrap_index(m - 1, n))] -
                                dlevel[static_cast<size_t>(wrap_index(m + 1, n))]);
        } else {
            raw += dlevel[static_cast<size_t>(m)];
        }
        out.values[static_cast<size_t>(m)] = static_cast<double>(n) * outer * raw;
    }
    return out;
}

double metric_inner(const Perturbation& u, const Perturbation& v, const SpectralMetric& metric) {
    check_metric(u.values, metric);
    check_metric(v.values, metric);
    const int n = metric.n();
    detail::KahanSum sum;
    for (int c = 0; c < 3; ++c) {
        const std::vector<std::complex<double>> h = dft_forward(component(u.values, c));
        const std::vector<std::complex<double>> g = dft_forward(component(v.values, c));
        for (size_t k = 0; k < h.size(); ++k) {
            const double factor = (k == 0 || 2 * static_cast<int>(k) == n) ? 1.0 : 2.0;
            sum.add(factor * metric.symbol[k] * (h[k] * std::conj(g[k])).real());
        }
    }
    return sum.get() / (static_cast<double>(n) * n);
}

double metric_norm(const Perturbation& u, const SpectralMetric& metric) {
    return std::sqrt(std::max(0.0, metric_inner(u, u, metric)));
}

GradientField riesz_apply(const Perturbation& u, const SpectralMetric& metric) {
    check_metric(u.values, metric);
    GradientField out;
    out.values = spectral_scale(u.values, metric, 1.0);
    return out;
}

Perturbation riesz_solve(const GradientField& xi, const SpectralMetric& metric) {
    check_metric(xi.values, metric);
    Perturbation out;
    out.values = spectral_scale(xi.values, metric, -1.0);
    return out;
}

GradientField duality_map_hilbert(const Perturbation& x, double theta,
                                  const SpectralMetric& metric) {
    if (!(theta > 1.0)) throw ValidationError("duality map requires theta > 1");
    const double norm = metric_norm(x, metric);
    GradientField out;
    if (norm == 0.0) {
        out.values.assign(x.values.size(), Vec3::Zero());
        return out;
    }
    out = riesz_apply(x, metric);
    scale_in_place(out.values, std::pow(norm, theta - 2.0));
    return out;
}

Perturbation duality_map_hilbert_inverse(const GradientField& xi, double theta,
                                         const SpectralMetric& metric) {
    if (!(theta > 1.0)) throw ValidationError("duality map requires theta > 1");
    Perturbation solved = riesz_solve(xi, metric);
    const double dual = std::sqrt(std::max(0.0, l2_pairing(xi, solved)));
    if (dual == 0.0) {
        Perturbation out;
        out.values.assign(xi.values.size(), Vec3::Zero());
        return out;
    }
    const double beta = theta / (theta - 1.0);
    scale_in_place(solved.values, std::pow(dual, beta - 2.0));
    return solved;
}

namespace {

// shared ascent loop: maximize <xi, eta> over {norm(eta) <= 1} by stepping
// along an ascent direction and projecting back radially; the start point
// carries most of the value, the loop certifies it cannot be improved
template <typename NormFn>
DualNormEstimate ball_max_ascent(const GradientField& xi, const NodeField& direction,
                                 NormFn norm_of) {
    DualNormEstimate est;
    const double dn = norm_of(direction);
    if (dn == 0.0) return est;

    NodeField eta = direction;
    scale_in_place(eta, 1.0 / dn);
    Perturbation cur{eta};
    double best = l2_pairing(xi, cur);

    const int max_iters = 500;
    const double tol = 1e-6;
    double step = 1.0;
    est.converged = false;
    for (int it = 1; it <= max_iters; ++it) {
        est.iterations = it;
        NodeField trial = axpy(eta, step, direction);
        const double nrm = norm_of(trial);
        if (nrm > 1.0) scale_in_place(trial, 1.0 / nrm);
        Perturbation cand{trial};
        const double val = l2_pairing(xi, cand);
        if (val > best) {
            const double rel = (val - best) / std::max(std::abs(val), 1e-300);
            eta = std::move(trial);
            best = val;
            if (rel < tol) {
                est.converged = true;
                break;
            }
        } else {
            step *= 0.5;
            if (step < 1e-12) {
                est.converged = true;
                break;
            }
        }
    }
    est.value = best;
    return est;
}

} // namespace

DualNormEstimate dual_norm_estimate(const GradientField& xi, const SpectralMetric& metric,
                                    DualNormMethod method) {
    check_metric(xi.values, metric);
    if (method == DualNormMethod::riesz_exact) {
        DualNormEstimate est;
        est.value = std::sqrt(std::max(0.0, l2_pairing(xi, riesz_solve(xi, metric))));
        return est;
    }
    // the metric-preconditioned direction is the exact maximizer here, so
    // the ascent starts at the optimum and certifies it
    Perturbation solved = riesz_solve(xi, metric);
    return ball_max_ascent(xi, solved.values, [&](const NodeField& f) {
        return metric_norm(Perturbation{f}, metric);
    });
}

DualNormEstimate dual_norm_estimate(const GradientField& xi, const NormSpec& spec) {
    spec.validate();
    // no exact Riesz map for general rho; precondition with the spectral
    // solve of matching order, which is an equivalent-norm proxy
    const SpectralMetric proxy = SpectralMetric::make(static_cast<int>(xi.values.size()),
                                                      spec.order());
    Perturbation seed = riesz_solve(xi, proxy);
    return ball_max_ascent(xi, seed.values,
                           [&](const NodeField& f) { return sobolev_norm(f, spec); });
}

double strain_penalty(const ClosedCurve& curve, const TotalEnergyConfig& cfg) {
    curve.require_regular();
    const double t = sobolev_norm(log_speeds(curve), cfg.penalty_space);
    return std::pow(t, cfg.kappa);
}

double total_energy(const ClosedCurve& curve, const TotalEnergyConfig& cfg) {
    try {
        curve.require_regular();
        require_embedded(curve);
    } catch (const ZeroSpeed&) {
        return std::numeric_limits<double>::infinity();
    } catch (const NonRegular&) {
        return std::numeric_limits<double>::infinity();
    } catch (const CoincidentPoints&) {
        return std::numeric_limits<double>::infinity();
    }
    return energy(curve, cfg.params).value + strain_penalty(curve, cfg);
}

namespace {

void add_penalty_gradient(const ClosedCurve& curve, const TotalEnergyConfig& cfg,
                          GradientField& grad) {
    const int n = curve.n();
    const std::vector<double>& sp = curve.speeds();
    const std::vector<Vec3>& tau = curve.tangents();
    const std::vector<double> sigma = log_speeds(curve);
    const NormSpec& spec = cfg.penalty_space;
    const double rho = spec.rho;

    const double srho = lp_rho(sigma, rho) + gagliardo_rho(sigma, spec.s, rho);
    if (srho == 0.0) return;
    const double t = std::pow(srho, 1.0 / rho);
    const double outer =
        cfg.kappa * std::pow(t, cfg.kappa - 1.0) * (1.0 / rho) * std::pow(srho, 1.0 / rho - 1.0);

    // dS/dsigma_l, with S the rho-th power of the strain norm
    const std::vector<double> w = offset_weights(n, spec.s, rho);
    std::vector<double> ds(static_cast<size_t>(n), 0.0);
    detail::chunked_rows(
        n, 0,
        [&](int l, int&) {
            detail::KahanSum acc;
            acc.add((rho / n) * signed_power(sigma[static_cast<size_t>(l)], rho));
            const double c2 = 2.0 * rho / (static_cast<double>(n) * n);
            for (int j = 0; j < n; ++j) {
                if (j == l) continue;
                const int off = std::abs(j - l);
                acc.add(c2 * signed_power(sigma[static_cast<size_t>(l)] - sigma[static_cast<size_t>(j)], rho) *
                        w[static_cast<size_t>(off)]);
            }
            ds[static_cast<size_t>(l)] = acc.get();
        },
        [](const int&) {});

    // sigma_l = log sp_l sees nodes l-1 and l+1 through the central
    // difference; gradient entries carry the N. d/dnode convention
    for (int m = 0; m < n; ++m) {
        const int lm = wrap_index(m - 1, n);
        const int lp = wrap_index(m + 1, n);
        const Vec3 contrib =
            (0.5 * n) * outer *
            (ds[static_cast<size_t>(lm)] / sp[static_cast<size_t>(lm)] * tau[static_cast<size_t>(lm)] -
             ds[static_cast<size_t>(lp)] / sp[static_cast<size_t>(lp)] * tau[static_cast<size_t>(lp)]);
        grad.values[static_cast<size_t>(m)] += static_cast<double>(n) * contrib;
    }
}

} // namespace

GradientField total_energy_gradient(const ClosedCurve& curve, const TotalEnergyConfig& cfg) {
    GradientField grad = discrete_gradient(curve, cfg.params);
    add_penalty_gradient(curve, cfg, grad);
    return grad;
}

} // namespace knotflow
