#include "cavlev/tm1d.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <sstream>

#include "cavlev/constants.hpp"
#include "cavlev/errors.hpp"

namespace cavlev {

namespace {

using Complex = std::complex<double>;

// Transfer convention: (b+, b-)^T = T (a+, a-)^T with a on the left side.

Eigen::Matrix2cd mirror_matrix(const Mirror1D& mirror)
{
    const double t_abs = mirror.amplitude_t;
    const double r = std::sqrt(1.0 - t_abs * t_abs);
    const Complex t(0.0, t_abs); // lossless phase convention
    Eigen::Matrix2cd m;
    m(0, 0) = (t * t - r * r) / t;
    m(0, 1) = r / t;
    m(1, 0) = -r / t;
    m(1, 1) = 1.0 / t;
    return m;
}

Eigen::Matrix2cd propagation_matrix(Complex n, double k0, double distance)
{
    const Complex phase = Complex(0.0, 1.0) * n * k0 * distance;
    Eigen::Matrix2cd m = Eigen::Matrix2cd::Zero();
    m(0, 0) = std::exp(phase);
    m(1, 1) = std::exp(-phase);
    return m;
}

Eigen::Matrix2cd interface_matrix(Complex n_from, Complex n_to)
{
    Eigen::Matrix2cd m;
    const Complex sum = n_to + n_from;
    const Complex diff = n_to - n_from;
    m(0, 0) = sum / (2.0 * n_to);
    m(0, 1) = diff / (2.0 * n_to);
    m(1, 0) = diff / (2.0 * n_to);
    m(1, 1) = sum / (2.0 * n_to);
    return m;
}

} // namespace

void Mirror1D::validate() const
{
    if (!(amplitude_t > 0.0) || amplitude_t > 1.0)
        throw DomainError("Mirror1D: amplitude transmission must lie in (0, 1]");
}

void Slab1D::validate() const
{
    if (!(thickness > 0.0))
        throw DomainError("Slab1D: thickness must be > 0");
    if (!(n.real() >= 1.0))
        throw DomainError("Slab1D: Re(n) must be >= 1");
}

void SlabStack::validate() const
{
    if (!(length > 0.0))
        throw DomainError("SlabStack: length must be > 0");
    mirror_left.validate();
    mirror_right.validate();
    double previous_right = -0.5 * length;
    for (const auto& slab : slabs) {
        slab.validate();
        const double left = slab.position - 0.5 * slab.thickness;
        const double right = slab.position + 0.5 * slab.thickness;
        if (left < previous_right)
            throw DomainError("SlabStack: slabs must be ordered and non-overlapping");
        if (right > 0.5 * length)
            throw DomainError("SlabStack: slab extends past the right mirror");
        previous_right = right;
    }
}

double SlabStack::fsr() const
{
    return kPi * kSpeedOfLight / length;
}

SlabStack SlabStack::with_slab_position(std::size_t index, double position) const
{
    SlabStack copy = *this;
    copy.slabs.at(index).position = position;
    return copy;
}

Eigen::Matrix2cd transfer_total(const SlabStack& stack, double omega)
{
    stack.validate();
    const double k0 = omega / kSpeedOfLight;

    Eigen::Matrix2cd total = mirror_matrix(stack.mirror_left);
    double x = -0.5 * stack.length;
    for (const auto& slab : stack.slabs) {
        const double left = slab.position - 0.5 * slab.thickness;
        total = propagation_matrix(1.0, k0, left - x) * total;
        total = interface_matrix(1.0, slab.n) * total;
        total = propagation_matrix(slab.n, k0, slab.thickness) * total;
        total = interface_matrix(slab.n, 1.0) * total;
        x = slab.position + 0.5 * slab.thickness;
    }
    total = propagation_matrix(1.0, k0, 0.5 * stack.length - x) * total;
    total = mirror_matrix(stack.mirror_right) * total;
    return total;
}

FieldCoefficients stack_coefficients(const SlabStack& stack, double omega)
{
    const Eigen::Matrix2cd m = transfer_total(stack, omega);
    FieldCoefficients f;
    f.t = m.determinant() / m(1, 1);
    f.r = -m(1, 0) / m(1, 1);
    return f;
}

std::vector<double> transmission_spectrum(const SlabStack& stack,
                                          const std::vector<double>& omega_grid)
{
    std::vector<double> result(omega_grid.size());
    for (std::size_t i = 0; i < omega_grid.size(); ++i)
        result[i] = std::norm(stack_coefficients(stack, omega_grid[i]).t);
    return result;
}

double find_resonance_near(const SlabStack& stack, double omega_guess, double window)
{
    const auto transmission = [&](double w) {
        return std::norm(stack_coefficients(stack, w).t);
    };

    // Bracket the peak by sampling, then golden-section.
    const int n_samples = 121;
    double best_w = omega_guess;
    double best_t = -1.0;
    for (int i = 0; i < n_samples; ++i) {
        const double w = omega_guess - window + 2.0 * window * i / (n_samples - 1);
        const double t = transmission(w);
        if (t > best_t) {
            best_t = t;
            best_w = w;
        }
    }
    const double step = 2.0 * window / (n_samples - 1);
    double lo = best_w - step;
    double hi = best_w + step;
    const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double c = hi - phi * (hi - lo);
    double d = lo + phi * (hi - lo);
    double fc = -transmission(c);
    double fd = -transmission(d);
    while (hi - lo > 1e-12 * omega_guess) {
        if (fc < fd) {
            hi = d;
            d = c;
            fd = fc;
            c = hi - phi * (hi - lo);
            fc = -transmission(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + phi * (hi - lo);
            fd = -transmission(d);
        }
    }
    double w = 0.5 * (lo + hi);

    // Damped Newton polish on the stationarity of |t|^2.
    const double h = std::max(1e-13 * omega_guess, 1e-3);
    for (int iter = 0; iter < 8; ++iter) {
        const double tp = transmission(w + h);
        const double tm = transmission(w - h);
        const double t0 = transmission(w);
        const double d1 = (tp - tm) / (2.0 * h);
        const double d2 = (tp - 2.0 * t0 + tm) / (h * h);
        if (d2 >= 0.0)
            break;
        double delta = -d1 / d2;
        delta = std::clamp(delta, -step, step);
        if (std::abs(delta) < 1e-14 * omega_guess)
            break;
        w += delta;
    }
    return w;
}

std::vector<double> resonance_shift(const SlabStack& stack, std::size_t slab_index,
                                    const std::vector<double>& x0_grid, double omega_ref,
                                    int branch)
{
    if (x0_grid.empty())
        throw DomainError("resonance_shift: empty grid");
    const double fsr = stack.fsr();

    std::vector<double> result;
    result.reserve(x0_grid.size());
    double guess = omega_ref + branch * fsr;
    double window = 0.55 * fsr;
    for (std::size_t i = 0; i < x0_grid.size(); ++i) {
        const SlabStack moved = stack.with_slab_position(slab_index, x0_grid[i]);
        const double w = find_resonance_near(moved, guess, window);
        // A step larger than a quarter FSR is ambiguous against the
        // neighboring longitudinal branches.
        if (i > 0 && std::abs(w - result.back()) > 0.25 * fsr) {
            std::ostringstream msg;
            msg << "resonance_shift: branch lost at x0 = " << x0_grid[i]
                << "; last good point (x0 = " << x0_grid[i - 1] << ", omega = " << result.back()
                << " rad/s)";
            throw NumericalError(msg.str());
        }
        result.push_back(w);
        guess = w;
        window = 0.30 * fsr;
    }
    return result;
}

SpringEstimate cm_spring_oracle(const SlabStack& stack, std::size_t slab_index, double power,
                                double omega_ref, double step)
{
    if (power < 0.0)
        throw DomainError("cm_spring_oracle: power must be >= 0");
    const double x0 = stack.slabs.at(slab_index).position;
    const double lambda = 2.0 * kPi * kSpeedOfLight / omega_ref;
    const double h = step > 0.0 ? step : lambda / 400.0;

    std::vector<double> grid{x0 - 2.0 * h, x0 - h, x0, x0 + h, x0 + 2.0 * h};
    const std::vector<double> w = resonance_shift(stack, slab_index, grid, omega_ref, 0);
    const double second =
        (-w[0] + 16.0 * w[1] - 30.0 * w[2] + 16.0 * w[3] - w[4]) / (12.0 * h * h);

    SpringEstimate estimate;
    // Fixed photon number N = 2 P L / (hbar omega c); K = N hbar w''.
    estimate.k = 2.0 * power * stack.length / (kSpeedOfLight * w[2]) * second;
    estimate.stable = second > 0.0;
    return estimate;
}

void write_transmission_map_csv(std::ostream& out, const SlabStack& stack,
                                std::size_t slab_index, const std::vector<double>& x0_grid,
                                const std::vector<double>& omega_grid, double omega_ref)
{
    char buf[64];
    const auto fmt = [&](double v) {
        std::snprintf(buf, sizeof(buf), "%.12g", v);
        return std::string(buf);
    };
    out << "x0_m,detuning_Hz,transmission\n";
    for (double x0 : x0_grid) {
        const SlabStack moved = stack.with_slab_position(slab_index, x0);
        for (double omega : omega_grid) {
            const double t = std::norm(stack_coefficients(moved, omega).t);
            out << fmt(x0) << "," << fmt((omega - omega_ref) / (2.0 * kPi)) << "," << fmt(t)
                << "\n";
        }
    }
}

} // namespace cavlev
