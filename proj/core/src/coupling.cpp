#include "cavlev/coupling.hpp"

#include <array>
#include <cmath>
#include <map>
#include <mutex>
#include <sstream>

#include "cavlev/constants.hpp"
#include "cavlev/errors.hpp"
#include "cavlev/quadrature.hpp"

namespace cavlev {

namespace {

constexpr int kMaxOverlapIndex = 12;

double sinc(double x)
{
    if (std::abs(x) < 1e-4) {
        const double x2 = x * x;
        return 1.0 - x2 / 6.0 * (1.0 - x2 / 20.0);
    }
    return std::sin(x) / x;
}

// ---------------------------------------------------------------------------
// Exact overlap polynomials.
//
// The complex sum C + iS = sum_j A_j int chi^j e^{-chi^2} e^{i Theta chi} dchi
// is evaluated by completing the square, which turns each power chi^j into
// Gaussian moments of (chi' + i Theta/2)^j. Every coefficient is an integer
// divided by a power of two, so the polynomial in Theta is accumulated with
// exact dyadic rationals (__int128 numerator, power-of-two denominator) and
// only converted to double at the end.
// ---------------------------------------------------------------------------

using Int128 = __int128;

struct Dyadic {
    Int128 num = 0;
    int shift = 0; // value = num / 2^shift

    void add(Int128 n, int s)
    {
        if (num == 0) {
            num = n;
            shift = s;
            return;
        }
        if (s > shift) {
            num <<= (s - shift);
            shift = s;
        } else if (s < shift) {
            n <<= (shift - s);
        }
        num += n;
        while (shift > 0 && num != 0 && (num & 1) == 0) {
            num >>= 1;
            --shift;
        }
    }

    double value() const { return static_cast<double>(num) * std::exp2(-shift); }
};

// Integer coefficients of the physicists' Hermite polynomial H_n.
std::vector<Int128> hermite_int_coeffs(int n)
{
    std::vector<Int128> prev{1};
    if (n == 0)
        return prev;
    std::vector<Int128> cur{0, 2};
    for (int m = 1; m < n; ++m) {
        std::vector<Int128> next(static_cast<std::size_t>(m) + 2, 0);
        for (std::size_t j = 0; j < cur.size(); ++j)
            next[j + 1] += 2 * cur[j];
        for (std::size_t j = 0; j < prev.size(); ++j)
            next[j] -= 2 * static_cast<Int128>(m) * prev[j];
        prev = std::move(cur);
        cur = std::move(next);
    }
    return cur;
}

Int128 binomial(int n, int k)
{
    Int128 result = 1;
    for (int i = 1; i <= k; ++i)
        result = result * (n - k + i) / i;
    return result;
}

Int128 double_factorial(int n)
{
    Int128 result = 1;
    for (int k = n; k > 1; k -= 2)
        result *= k;
    return result;
}

OverlapPolynomial compute_overlap_polynomial(int n, int m)
{
    const auto hn = hermite_int_coeffs(n);
    const auto hm = hermite_int_coeffs(m);
    std::vector<Int128> product(hn.size() + hm.size() - 1, 0);
    for (std::size_t a = 0; a < hn.size(); ++a)
        for (std::size_t b = 0; b < hm.size(); ++b)
            product[a + b] += hn[a] * hm[b];

    const int degree = n + m;
    std::vector<Dyadic> coeff(static_cast<std::size_t>(degree) + 1);
    for (int j = 0; j <= degree; ++j) {
        if (product[static_cast<std::size_t>(j)] == 0)
            continue;
        for (int p = 0; p <= j; p += 2) {
            const int q = j - p; // power of Theta
            // i^q: even q -> (-1)^(q/2) real, odd q -> i (-1)^((q-1)/2).
            const int half = (q % 2 == 0) ? q / 2 : (q - 1) / 2;
            Int128 num = product[static_cast<std::size_t>(j)] * binomial(j, p) *
                         double_factorial(p - 1);
            if (half % 2 != 0)
                num = -num;
            coeff[static_cast<std::size_t>(q)].add(num, p / 2 + q);
        }
    }

    // Normalize by sqrt(2^{n+m} n! m!).
    double norm = std::exp2(0.5 * degree);
    for (int k = 2; k <= n; ++k)
        norm *= std::sqrt(static_cast<double>(k));
    for (int k = 2; k <= m; ++k)
        norm *= std::sqrt(static_cast<double>(k));

    OverlapPolynomial poly;
    for (int q = 0; q <= degree; ++q) {
        const double value = coeff[static_cast<std::size_t>(q)].value() / norm;
        if (q % 2 == 0)
            poly.c_even.push_back(value);
        else
            poly.s_odd.push_back(value);
    }
    // Parity selection: drop the identically-zero half.
    bool c_zero = true;
    for (double v : poly.c_even)
        c_zero = c_zero && v == 0.0;
    bool s_zero = true;
    for (double v : poly.s_odd)
        s_zero = s_zero && v == 0.0;
    if (c_zero)
        poly.c_even.clear();
    if (s_zero)
        poly.s_odd.clear();
    return poly;
}

double horner(const std::vector<double>& coeffs, double u)
{
    double acc = 0.0;
    for (auto it = coeffs.rbegin(); it != coeffs.rend(); ++it)
        acc = acc * u + *it;
    return acc;
}

} // namespace

const OverlapPolynomial& overlap_polynomials(int n, int m)
{
    if (n < 0 || m < 0)
        throw DomainError("overlap_CS: indices must be >= 0");
    if (n > kMaxOverlapIndex || m > kMaxOverlapIndex)
        throw DomainError("overlap_CS: exact polynomial table limited to n, m <= 12");
    if (n > m)
        std::swap(n, m);

    static std::map<std::pair<int, int>, OverlapPolynomial> cache;
    static std::mutex mutex;
    std::lock_guard<std::mutex> lock(mutex);
    auto it = cache.find({n, m});
    if (it == cache.end())
        it = cache.emplace(std::make_pair(n, m), compute_overlap_polynomial(n, m)).first;
    return it->second;
}

OverlapPair overlap_CS(int n, int m, double theta)
{
    const OverlapPolynomial& poly = overlap_polynomials(n, m);
    const double u = theta * theta;
    const double envelope = std::exp(-0.25 * u);
    OverlapPair result;
    if (!poly.c_even.empty())
        result.c = envelope * horner(poly.c_even, u);
    if (!poly.s_odd.empty())
        result.s = envelope * theta * horner(poly.s_odd, u);
    return result;
}

double overlap_leading(int n, int m, double theta)
{
    if (n < 0 || m < 0)
        throw DomainError("overlap_leading: indices must be >= 0");
    if (n > m)
        std::swap(n, m);
    const int d = m - n;
    double magnitude = 1.0;
    for (int k = n + 1; k <= m; ++k)
        magnitude *= std::sqrt(static_cast<double>(k));
    magnitude *= std::exp2(-0.5 * d);
    double theta_pow = 1.0;
    double dfact = 1.0;
    for (int k = 1; k <= d; ++k) {
        theta_pow *= theta;
        dfact *= k;
    }
    const double sign = (d / 2) % 2 == 0 ? 1.0 : -1.0;
    return sign * magnitude * theta_pow / dfact;
}

// ---------------------------------------------------------------------------
// Disc parameters.
// ---------------------------------------------------------------------------

void DiscParams::validate() const
{
    if (!(n_index >= 1.0))
        throw DomainError("DiscParams: refractive index must be >= 1");
    if (!(thickness > 0.0))
        throw DomainError("DiscParams: thickness must be > 0");
    if (!(radius > 0.0))
        throw DomainError("DiscParams: radius must be > 0");
    if (std::abs(theta_y) >= kPi / 2 || std::abs(theta_z) >= kPi / 2)
        throw DomainError("DiscParams: tilts must satisfy |theta| < pi/2");
}

DiscParams DiscParams::with_x0(double value) const
{
    DiscParams d = *this;
    d.x0 = value;
    return d;
}

DiscParams DiscParams::with_theta_y(double value) const
{
    DiscParams d = *this;
    d.theta_y = value;
    return d;
}

DiscParams DiscParams::with_theta_z(double value) const
{
    DiscParams d = *this;
    d.theta_z = value;
    return d;
}

DiscDerived DiscDerived::from(const CavityGeometry& geometry, const BeamParams& beam,
                              const DiscParams& disc)
{
    disc.validate();
    beam.validate();
    if (std::abs(disc.theta_y) >= kMaxTiltRad || std::abs(disc.theta_z) >= kMaxTiltRad) {
        throw DomainError("DiscDerived: grazing slab, |theta| must be < 0.3 rad");
    }
    DiscDerived d;
    d.t_theta = disc.thickness / (std::cos(disc.theta_y) * std::cos(disc.theta_z));
    d.alpha = (disc.n_index * disc.n_index - 1.0) * d.t_theta / geometry.length;
    d.tau = sinc(beam.k * d.t_theta);
    d.Theta_y = std::sqrt(2.0) * beam.k * beam.sigma * disc.theta_y;
    d.Theta_z = std::sqrt(2.0) * beam.k * beam.sigma * disc.theta_z;
    const double ks_thz = beam.k * beam.sigma * disc.theta_z;
    d.beta = 1.0 - ks_thz * ks_thz;
    return d;
}

// ---------------------------------------------------------------------------
// Matrix elements.
// ---------------------------------------------------------------------------

double vij_analytic(const CavityGeometry& geometry, const BeamParams& beam,
                    const DiscParams& disc, const ModeIndex& i, const ModeIndex& j)
{
    i.validate();
    j.validate();
    const DiscDerived d = DiscDerived::from(geometry, beam, disc);

    const double term_dc =
        (i.mu == j.mu && i.nu == j.nu) ? cos_half_pi(i.eta - j.eta) : 0.0;

    const auto [c_mu, s_mu] = overlap_CS(i.mu, j.mu, d.Theta_z);
    const auto [c_nu, s_nu] = overlap_CS(i.nu, j.nu, d.Theta_y);

    const double phase = 2.0 * beam.k * disc.x0;
    const std::int64_t eta_sum = i.eta + j.eta;
    const double cos_a =
        std::cos(phase) * cos_half_pi(eta_sum) - std::sin(phase) * sin_half_pi(eta_sum);
    const double sin_a =
        std::sin(phase) * cos_half_pi(eta_sum) + std::cos(phase) * sin_half_pi(eta_sum);

    const double oscillating =
        cos_a * (c_mu * c_nu - s_mu * s_nu) - sin_a * (s_mu * c_nu + c_mu * s_nu);
    return d.alpha * (term_dc + d.tau * oscillating);
}

OverlapPair hg_overlap_cos_sin(int n, int m, double sigma_a, double sigma_b, double q)
{
    if (n < 0 || m < 0)
        throw DomainError("hg_overlap_cos_sin: indices must be >= 0");
    if (n > kMaxOverlapIndex || m > kMaxOverlapIndex)
        throw DomainError("hg_overlap_cos_sin: indices limited to 12");
    if (!(sigma_a > 0.0) || !(sigma_b > 0.0))
        throw DomainError("hg_overlap_cos_sin: widths must be > 0");

    // Polynomial coefficients of H_n(sqrt(2) y / sa) * H_m(sqrt(2) y / sb) in y.
    const auto hn = hermite_int_coeffs(n);
    const auto hm = hermite_int_coeffs(m);
    const double a = std::sqrt(2.0) / sigma_a;
    const double b = std::sqrt(2.0) / sigma_b;
    std::vector<double> pa(hn.size()), pb(hm.size());
    double apow = 1.0;
    for (std::size_t i = 0; i < hn.size(); ++i, apow *= a)
        pa[i] = static_cast<double>(hn[i]) * apow;
    double bpow = 1.0;
    for (std::size_t i = 0; i < hm.size(); ++i, bpow *= b)
        pb[i] = static_cast<double>(hm[i]) * bpow;
    std::vector<double> prod(pa.size() + pb.size() - 1, 0.0);
    for (std::size_t i = 0; i < pa.size(); ++i)
        for (std::size_t j = 0; j < pb.size(); ++j)
            prod[i + j] += pa[i] * pb[j];

    // int y^p e^{-kappa y^2 + i q y} dy via moments of (u + i q / (2 kappa))^p.
    const double kappa = 1.0 / (sigma_a * sigma_a) + 1.0 / (sigma_b * sigma_b);
    const double envelope = std::exp(-q * q / (4.0 * kappa)) * std::sqrt(kPi / kappa);
    const double iq = q / (2.0 * kappa); // imaginary-part magnitude of the shift
    double re = 0.0, im = 0.0;
    for (std::size_t p = 0; p < prod.size(); ++p) {
        if (prod[p] == 0.0)
            continue;
        for (std::size_t s = 0; s <= p; s += 2) {
            const std::size_t w = p - s; // power of (i q / 2 kappa)
            double term = prod[p] * static_cast<double>(binomial(static_cast<int>(p), static_cast<int>(s))) *
                          static_cast<double>(double_factorial(static_cast<int>(s) - 1)) /
                          std::pow(2.0 * kappa, 0.5 * static_cast<double>(s)) * std::pow(iq, static_cast<double>(w));
            const std::size_t half = w / 2;
            if (half % 2 != 0)
                term = -term;
            if (w % 2 == 0)
                re += term;
            else
                im += term;
        }
    }

    // Normalizations of the two 1-D Hermite-Gaussian functions.
    double norm = std::sqrt(std::sqrt(2.0 / kPi) / sigma_a) * std::sqrt(std::sqrt(2.0 / kPi) / sigma_b);
    norm *= std::exp2(-0.5 * (n + m));
    for (int k = 2; k <= n; ++k)
        norm /= std::sqrt(static_cast<double>(k));
    for (int k = 2; k <= m; ++k)
        norm /= std::sqrt(static_cast<double>(k));

    OverlapPair g;
    g.c = envelope * re * norm;
    g.s = envelope * im * norm;
    return g;
}

double vij_extended(const CavityGeometry& geometry, const BeamParams& beam,
                    const DiscParams& disc, const ModeIndex& i, const ModeIndex& j,
                    DiffractionModel diffraction)
{
    i.validate();
    j.validate();
    disc.validate();
    if (std::abs(disc.theta_y) >= kMaxTiltRad || std::abs(disc.theta_z) >= kMaxTiltRad)
        throw DomainError("vij_extended: grazing slab, |theta| must be < 0.3 rad");

    double ki = beam.k, kj = beam.k;
    double si = beam.sigma, sj = beam.sigma;
    if (diffraction == DiffractionModel::per_mode) {
        ki = unperturbed_frequency(geometry, i) / kSpeedOfLight;
        kj = unperturbed_frequency(geometry, j) / kSpeedOfLight;
        si = waist_radius(geometry, i);
        sj = waist_radius(geometry, j);
    }

    const double t_theta =
        disc.thickness / (std::cos(disc.theta_y) * std::cos(disc.theta_z));
    const double alpha =
        (disc.n_index * disc.n_index - 1.0) * t_theta / geometry.length;

    double total = 0.0;
    for (int branch = 0; branch < 2; ++branch) {
        const double kb = (branch == 0) ? ki - kj : ki + kj;
        const std::int64_t eta_b = (branch == 0) ? i.eta - j.eta : i.eta + j.eta;
        const double thickness_factor = sinc(0.5 * kb * t_theta);

        const auto [gc_y, gs_y] = hg_overlap_cos_sin(i.mu, j.mu, si, sj, kb * disc.theta_z);
        const auto [gc_z, gs_z] = hg_overlap_cos_sin(i.nu, j.nu, si, sj, kb * disc.theta_y);

        const double phase = kb * disc.x0;
        const double cos_a =
            std::cos(phase) * cos_half_pi(eta_b) - std::sin(phase) * sin_half_pi(eta_b);
        const double sin_a =
            std::sin(phase) * cos_half_pi(eta_b) + std::cos(phase) * sin_half_pi(eta_b);

        total += thickness_factor *
                 (cos_a * (gc_y * gc_z - gs_y * gs_z) - sin_a * (gs_y * gc_z + gc_y * gs_z));
    }
    return alpha * total;
}

double vij_quadrature(const CavityGeometry& geometry, const BeamParams& beam,
                      const DiscParams& disc, const ModeIndex& i, const ModeIndex& j,
                      const QuadratureOptions& opts)
{
    i.validate();
    j.validate();
    const DiscDerived d = DiscDerived::from(geometry, beam, disc);
    const double v_potential = disc.n_index * disc.n_index - 1.0;
    if (v_potential == 0.0)
        return 0.0;

    const auto evaluate = [&](int n_x, int n_rho, int n_phi) {
        const QuadratureRule rx = gauss_legendre(n_x, -0.5 * d.t_theta, 0.5 * d.t_theta);
        const QuadratureRule rr = gauss_legendre(n_rho, 0.0, disc.radius);
        const QuadratureRule rp = periodic_uniform(n_phi);

        const double inv_norm = 1.0 / (beam.sigma * beam.sigma * 0.25 * geometry.length);
        const double ci = cos_half_pi(i.eta), si_ = sin_half_pi(i.eta);
        const double cj = cos_half_pi(j.eta), sj_ = sin_half_pi(j.eta);

        double sum = 0.0;
        for (std::size_t ir = 0; ir < rr.size(); ++ir) {
            const double rho = rr.nodes[ir];
            for (std::size_t ip = 0; ip < rp.size(); ++ip) {
                const double y = rho * std::cos(rp.nodes[ip]);
                const double z = rho * std::sin(rp.nodes[ip]);
                const double yn = std::sqrt(2.0) * y / beam.sigma;
                const double zn = std::sqrt(2.0) * z / beam.sigma;
                const double gauss = std::exp(-(yn * yn + zn * zn) * 0.5);
                const double ti = normalized_hermite(i.mu, yn) * normalized_hermite(i.nu, zn) * gauss;
                const double tj = normalized_hermite(j.mu, yn) * normalized_hermite(j.nu, zn) * gauss;
                const double w_t = rr.weights[ir] * rho * rp.weights[ip] * ti * tj;

                const double center = disc.x0 + disc.theta_z * y + disc.theta_y * z;
                double sum_x = 0.0;
                for (std::size_t ix = 0; ix < rx.size(); ++ix) {
                    const double x = center + rx.nodes[ix];
                    const double c = std::cos(beam.k * x);
                    const double s = std::sin(beam.k * x);
                    sum_x += rx.weights[ix] * (c * ci - s * si_) * (c * cj - s * sj_);
                }
                sum += w_t * sum_x;
            }
        }
        return v_potential * inv_norm * sum;
    };

    const int n_rho = opts.n_rho > 0
                          ? opts.n_rho
                          : std::max(40, 10 * static_cast<int>(std::ceil(disc.radius / beam.sigma)));
    const double base = evaluate(opts.n_x, n_rho, opts.n_phi);
    if (!opts.check_convergence)
        return base;

    const auto refine = [&](int n) { return static_cast<int>(std::ceil(n * opts.refine_factor)); };
    const double refined = evaluate(refine(opts.n_x), refine(n_rho), refine(opts.n_phi));
    const double scale = std::max(std::abs(refined), 1e-3 * d.alpha);
    if (std::abs(base - refined) > opts.rel_tol * scale) {
        std::ostringstream msg;
        msg << "vij_quadrature: non-convergent quadrature, base estimate " << base
            << " vs refined estimate " << refined << " (tolerance " << opts.rel_tol * scale
            << ")";
        throw NumericalError(msg.str());
    }
    return refined;
}

PerturbationMatrix build_perturbation_matrix(const CavityGeometry& geometry,
                                             const BeamParams& beam, const DiscParams& disc,
                                             const std::vector<ModeIndex>& manifold,
                                             const VijOptions& opts)
{
    PerturbationMatrix result;
    result.manifold = manifold;
    const auto n = static_cast<Eigen::Index>(manifold.size());
    result.v.resize(n, n);
    for (Eigen::Index a = 0; a < n; ++a) {
        for (Eigen::Index b = a; b < n; ++b) {
            const auto& mi = manifold[static_cast<std::size_t>(a)];
            const auto& mj = manifold[static_cast<std::size_t>(b)];
            const double value = opts.path == VijPath::analytic
                                     ? vij_analytic(geometry, beam, disc, mi, mj)
                                     : vij_extended(geometry, beam, disc, mi, mj, opts.diffraction);
            result.v(a, b) = value;
            result.v(b, a) = value;
        }
    }
    return result;
}

} // namespace cavlev
