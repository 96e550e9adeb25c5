#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <string>
#include <vector>

#include "hybridkvh/error.hpp"

namespace hkvh {

using cplx = std::complex<double>;

enum class Mode { Continuum, FiniteDim };
enum class Axis { Q, P, X };

std::string to_string(Mode mode);
Mode mode_from_string(const std::string& name);

// Discretized hybrid space: periodic (q, p) phase-space grid times either a
// periodic quantum coordinate x (continuum) or n quantum levels (finite_dim).
// Storage order is (q, p, c) with the quantum index c fastest.
struct PhaseGrid {
    std::size_t nq = 0;
    std::size_t np = 0;
    std::size_t nx = 0;  // quantum grid points, or number of levels
    double Lq = 0.0;
    double Lp = 0.0;
    double Lx = 0.0;  // unused in finite_dim mode
    Mode mode = Mode::Continuum;

    static PhaseGrid continuum(std::size_t nq, std::size_t np, std::size_t nx, double Lq, double Lp,
                               double Lx);
    static PhaseGrid finite_dim(std::size_t nq, std::size_t np, std::size_t levels, double Lq,
                                double Lp);

    void validate() const;

    double hq() const { return Lq / static_cast<double>(nq); }
    double hp() const { return Lp / static_cast<double>(np); }
    double hx() const { return Lx / static_cast<double>(nx); }

    // Cell-centred coordinates on [-L/2, L/2).
    double q(std::size_t i) const { return -0.5 * Lq + static_cast<double>(i) * hq(); }
    double p(std::size_t j) const { return -0.5 * Lp + static_cast<double>(j) * hp(); }
    double x(std::size_t k) const { return -0.5 * Lx + static_cast<double>(k) * hx(); }

    std::size_t phase_points() const { return nq * np; }
    std::size_t size() const { return nq * np * nx; }
    std::size_t levels() const { return nx; }

    double phase_weight() const { return hq() * hp(); }
    // Quadrature weight of one hybrid cell (the x-sum is a plain sum in finite_dim mode).
    double cell_weight() const { return mode == Mode::Continuum ? hq() * hp() * hx() : hq() * hp(); }
    double quantum_weight() const { return mode == Mode::Continuum ? hx() : 1.0; }

    bool operator==(const PhaseGrid&) const = default;
};

struct Shape {
    std::size_t n0 = 0, n1 = 0, n2 = 0;

    std::size_t size() const { return n0 * n1 * n2; }
    bool operator==(const Shape&) const = default;
};

std::string to_string(const Shape& s);

// Dense array over (q, p, c). The meaning of the fast index c depends on use:
// x-points, quantum levels, n*n matrix entries, or 1 for phase-space scalars.
template <class T>
class GridArray {
public:
    GridArray() = default;
    explicit GridArray(Shape shape, T fill = T{}) : shape_(shape), data_(shape.size(), fill) {}

    const Shape& shape() const { return shape_; }
    std::size_t size() const { return data_.size(); }

    T& operator()(std::size_t i, std::size_t j, std::size_t c) { return data_[index(i, j, c)]; }
    const T& operator()(std::size_t i, std::size_t j, std::size_t c) const { return data_[index(i, j, c)]; }
    T& operator[](std::size_t n) { return data_[n]; }
    const T& operator[](std::size_t n) const { return data_[n]; }

    std::size_t index(std::size_t i, std::size_t j, std::size_t c) const {
        return (i * shape_.n1 + j) * shape_.n2 + c;
    }

    T* data() { return data_.data(); }
    const T* data() const { return data_.data(); }
    std::vector<T>& values() { return data_; }
    const std::vector<T>& values() const { return data_; }

    auto begin() { return data_.begin(); }
    auto end() { return data_.end(); }
    auto begin() const { return data_.begin(); }
    auto end() const { return data_.end(); }

    bool operator==(const GridArray&) const = default;

private:
    Shape shape_{};
    std::vector<T> data_;
};

using CField = GridArray<cplx>;
using RField = GridArray<double>;

inline Shape hybrid_shape(const PhaseGrid& g) { return {g.nq, g.np, g.nx}; }
inline Shape phase_shape(const PhaseGrid& g, std::size_t components = 1) { return {g.nq, g.np, components}; }
inline Shape matrix_shape(const PhaseGrid& g) { return {g.nq, g.np, g.nx * g.nx}; }

// Canonical structures of T*Q for one classical degree of freedom.
struct Geometry {
    // Symplectic matrix J = [[0, 1], [-1, 0]] in (q, p) components.
    static constexpr std::array<std::array<double, 2>, 2> J{{{0.0, 1.0}, {-1.0, 0.0}}};

    // Canonical one-form A = p dq as (A_q, A_p).
    static std::array<double, 2> canonical_one_form(double /*q*/, double p) { return {p, 0.0}; }

    // Omega(u, v) = dq^dp(u, v), so Omega(e_q, e_p) = 1.
    static double symplectic_form(const std::array<double, 2>& u, const std::array<double, 2>& v) {
        return u[0] * v[1] - u[1] * v[0];
    }
};

// --- spectral calculus -----------------------------------------------------

// Fourier-collocation derivative along array axis 0, 1 or 2 of a periodic
// field whose axis spans `length`. The Nyquist mode is dropped so the
// derivative matrix is real antisymmetric.
CField derivative(const CField& f, int axis, double length);
RField derivative(const RField& f, int axis, double length);
// Second derivative with multiplier -k^2 (Nyquist retained).
CField second_derivative(const CField& f, int axis, double length);
RField second_derivative(const RField& f, int axis, double length);

// Grid-aware forms: fields must have n0 = nq and n1 = np; the x axis is only
// valid in continuum mode on hybrid-shaped fields.
CField spectral_derivative(const PhaseGrid& g, const CField& f, Axis axis);
RField spectral_derivative(const PhaseGrid& g, const RField& f, Axis axis);

// {A, B} = dA/dq dB/dp - dA/dp dB/dq. A may carry several components per
// point while B is scalar (entrywise bracket); otherwise shapes must agree.
CField poisson_bracket(const PhaseGrid& g, const CField& A, const CField& B);
RField poisson_bracket(const PhaseGrid& g, const RField& A, const RField& B);

// Rectangle rule over the whole array. Hybrid-shaped fields in continuum mode
// carry the x weight; everything else integrates over (q, p) and sums c.
double integrate(const PhaseGrid& g, const RField& f);
cplx integrate(const PhaseGrid& g, const CField& f);
// Integrates over (q, p) only, returning one value per component.
std::vector<cplx> integrate_phase(const PhaseGrid& g, const CField& f);
std::vector<double> integrate_phase(const PhaseGrid& g, const RField& f);

// Fraction of the total of f >= 0 carried by the first and last p rows.
double boundary_mass(const PhaseGrid& g, const RField& f);

// Number of FFTW threads used by new plans (0 = hardware concurrency).
void set_fft_threads(int threads);

// --- small field helpers ---------------------------------------------------

RField real_part(const CField& f);
RField imag_part(const CField& f);
RField abs2(const CField& f);
CField to_complex(const RField& f);
double max_abs(const CField& f);
double max_abs(const RField& f);
double max_abs_diff(const CField& a, const CField& b);
double max_abs_diff(const RField& a, const RField& b);
bool all_finite(const CField& f);

// Deterministic compensated sum.
class KahanSum {
public:
    void add(double v) {
        const double t = sum_ + v;
        if (std::abs(sum_) >= std::abs(v))
            comp_ += (sum_ - t) + v;
        else
            comp_ += (v - t) + sum_;
        sum_ = t;
    }
    double value() const { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

}  // namespace hkvh
