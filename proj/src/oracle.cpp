// Brute-force evaluation of the linearized worst case over the Wasserstein ball.
// Deliberately avoids the closed form: directions and budget splits are searched numerically.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>

#include "drpets/drcore.hpp"
#include "drpets/errors.hpp"

namespace drpets {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Golden-section minimization of f on [a, b].
double golden_min(const std::function<double(double)>& f, double a, double b, double& arg) {
    const double r = 0.5 * (std::sqrt(5.0) - 1.0);
    double c = b - r * (b - a);
    double d = a + r * (b - a);
    double fc = f(c), fd = f(d);
    for (int i = 0; i < 100 && (b - a) > 1e-12; ++i) {
        if (fc < fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    arg = fc < fd ? c : d;
    return std::min(fc, fd);
}

// min over unit vectors u of <g, u>.
double min_inner_product(const Eigen::VectorXd& g, std::size_t res) {
    const auto n = g.size();
    if (n == 1) return std::min(g[0], -g[0]);
    if (n == 2) {
        auto f = [&](double phi) { return g[0] * std::cos(phi) + g[1] * std::sin(phi); };
        double best = std::numeric_limits<double>::infinity();
        double best_phi = 0.0;
        for (std::size_t i = 0; i < res; ++i) {
            const double phi = kTwoPi * static_cast<double>(i) / static_cast<double>(res);
            if (const double v = f(phi); v < best) {
                best = v;
                best_phi = phi;
            }
        }
        const double h = kTwoPi / static_cast<double>(res);
        double arg = 0.0;
        return std::min(best, golden_min(f, best_phi - h, best_phi + h, arg));
    }
    // n == 3: polar/azimuth grid, then alternating golden-section refinement.
    auto f = [&](double th, double phi) {
        return g[0] * std::sin(th) * std::cos(phi) + g[1] * std::sin(th) * std::sin(phi) +
               g[2] * std::cos(th);
    };
    double best = std::numeric_limits<double>::infinity();
    double th_best = 0.0, phi_best = 0.0;
    for (std::size_t i = 0; i <= res; ++i) {
        const double th = std::numbers::pi * static_cast<double>(i) / static_cast<double>(res);
        for (std::size_t j = 0; j < res; ++j) {
            const double phi = kTwoPi * static_cast<double>(j) / static_cast<double>(res);
            if (const double v = f(th, phi); v < best) {
                best = v;
                th_best = th;
                phi_best = phi;
            }
        }
    }
    double h_th = std::numbers::pi / static_cast<double>(res);
    double h_phi = kTwoPi / static_cast<double>(res);
    for (int round = 0; round < 30; ++round) {
        double arg = th_best;
        best = std::min(best, golden_min([&](double t) { return f(t, phi_best); },
                                         th_best - h_th, th_best + h_th, arg));
        th_best = arg;
        arg = phi_best;
        best = std::min(best, golden_min([&](double p) { return f(th_best, p); },
                                         phi_best - h_phi, phi_best + h_phi, arg));
        phi_best = arg;
        h_th *= 0.7;
        h_phi *= 0.7;
    }
    return best;
}

}  // namespace

double worstcase_oracle(std::span<const double> j0, const GradientEstimate& grads,
                        const DRConfig& config, std::size_t res) {
    config.validate();
    const std::size_t B = j0.size();
    if (B == 0 || B != grads.size()) throw InvalidInput("need one value and one gradient per member");
    if (B > 2) throw InvalidInput("worstcase_oracle refuses more than 2 members");
    for (const auto& g : grads.g)
        if (g.size() > 3 || g.size() == 0)
            throw InvalidInput("worstcase_oracle handles gradient dimension 1 to 3 only");
    if (res < 4) throw InvalidInput("grid resolution too small");

    double base = 0.0;
    for (double v : j0) base += v;
    base /= static_cast<double>(B);
    const double eps = config.epsilon;
    if (eps == 0.0) return base;

    // per-unit-radius slope of each member's linear term (<= 0)
    std::vector<double> slope;
    for (const auto& g : grads.g) slope.push_back(std::min(0.0, min_inner_product(g, res)));

    if (B == 1) return base + slope[0] * eps;  // budget |v| <= eps for every p

    auto value = [&](double d1, double d2) { return base + 0.5 * (slope[0] * d1 + slope[1] * d2); };
    double best = std::numeric_limits<double>::infinity();

    if (config.p == PNorm::Infinity) {
        for (std::size_t i = 0; i <= res; ++i)
            for (std::size_t k = 0; k <= res; ++k)
                best = std::min(best, value(eps * static_cast<double>(i) / static_cast<double>(res),
                                            eps * static_cast<double>(k) / static_cast<double>(res)));
        return best;
    }

    // finite p: saturate the budget, (d1^p + d2^p) / 2 = eps^p, and search over d1
    const double p = config.p == PNorm::One ? 1.0 : 2.0;
    const double total = 2.0 * std::pow(eps, p);
    const double d1_max = std::pow(total, 1.0 / p);
    auto along = [&](double d1) {
        d1 = std::clamp(d1, 0.0, d1_max);
        const double rest = std::max(0.0, total - std::pow(d1, p));
        return value(d1, std::pow(rest, 1.0 / p));
    };
    double best_d1 = 0.0;
    for (std::size_t i = 0; i <= res; ++i) {
        const double d1 = d1_max * static_cast<double>(i) / static_cast<double>(res);
        if (const double v = along(d1); v < best) {
            best = v;
            best_d1 = d1;
        }
    }
    const double h = d1_max / static_cast<double>(res);
    double arg = 0.0;
    best = std::min(best, golden_min(along, std::max(0.0, best_d1 - h),
                                     std::min(d1_max, best_d1 + h), arg));
    return best;
}

}  // namespace drpets
