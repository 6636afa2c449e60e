#pragma once

#include <complex>
#include <iosfwd>
#include <vector>

#include <Eigen/Dense>

namespace cavlev {

/// Lossless symmetric mirror parameterized by its amplitude transmission
/// (r = sqrt(1 - t^2) real, transmission phase +i).
struct Mirror1D {
    double amplitude_t = 0.3;

    void validate() const;
};

/// Dielectric slab at a given axial position inside the 1-D cavity.
struct Slab1D {
    std::complex<double> n = 1.0;
    double thickness = 0.0;
    double position = 0.0; // slab center, measured from the cavity midpoint

    void validate() const;
};

/// Mirror - gaps - slabs - mirror stack of total length `length`, mirrors at
/// x = -length/2 and +length/2.
struct SlabStack {
    double length = 0.0;
    Mirror1D mirror_left;
    Mirror1D mirror_right;
    std::vector<Slab1D> slabs;

    void validate() const;
    double fsr() const; // pi c / L in rad/s

    SlabStack with_slab_position(std::size_t index, double position) const;
};

struct FieldCoefficients {
    std::complex<double> t; // amplitude transmission left -> right
    std::complex<double> r; // amplitude reflection for left incidence
};

/// Total 2x2 transfer matrix of the stack at angular frequency omega.
Eigen::Matrix2cd transfer_total(const SlabStack& stack, double omega);

FieldCoefficients stack_coefficients(const SlabStack& stack, double omega);

/// Transmitted intensity |t|^2 on a frequency grid.
std::vector<double> transmission_spectrum(const SlabStack& stack,
                                          const std::vector<double>& omega_grid);

/// Locates the transmission resonance nearest omega_guess within +-window by
/// bracketed maximization of |t|^2 followed by a damped Newton polish on the
/// stationarity condition.
double find_resonance_near(const SlabStack& stack, double omega_guess, double window);

/// Tracks one resonance across slab positions; throws NumericalError (with
/// the last good point in the message) if the branch leaves the search window.
/// `branch` selects the longitudinal resonance: 0 = nearest omega_ref,
/// +-1, +-2 ... = neighbors in units of the FSR.
std::vector<double> resonance_shift(const SlabStack& stack, std::size_t slab_index,
                                    const std::vector<double>& x0_grid, double omega_ref,
                                    int branch = 0);

struct SpringEstimate {
    double k = 0.0; // N/m
    bool stable = true;
};

/// Optical spring from the transfer-matrix solution: K = N hbar w''(x0) with
/// the photon number held at N = 2 P L / (hbar omega c); second derivative by
/// five-point central differences of the tracked resonance.
SpringEstimate cm_spring_oracle(const SlabStack& stack, std::size_t slab_index, double power,
                                double omega_ref, double step = 0.0);

/// CSV emission of (x0_m, detuning_Hz, transmission) triples over a 2-D grid,
/// for heat-map rendering.
void write_transmission_map_csv(std::ostream& out, const SlabStack& stack,
                                std::size_t slab_index, const std::vector<double>& x0_grid,
                                const std::vector<double>& omega_grid, double omega_ref);

} // namespace cavlev
