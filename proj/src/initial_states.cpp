#include "hybridkvh/initial_states.hpp"

#include <algorithm>
#include <cmath>

namespace hkvh {

namespace {

// Periodic amplitude exp((cos k(s - s0) - 1) / (2 sigma^2 k^2)), k = 2 pi / L.
// Its square tends to a Gaussian density of width sigma when sigma << L.
double von_mises(double s, double s0, double sigma, double L) {
    const double k = 2.0 * M_PI / L;
    return std::exp((std::cos(k * (s - s0)) - 1.0) / (2.0 * sigma * sigma * k * k));
}

}  // namespace

void InitialStateSpec::validate(const PhaseGrid& grid) const {
    const auto& names = initial_state_names();
    require(std::find(names.begin(), names.end(), name) != names.end(), ErrorKind::Validation,
            "unknown initial state '" + name + "'");
    require(sigma_q > 0.0 && sigma_p > 0.0, ErrorKind::Validation, "initial widths sigma_q, sigma_p must be positive");
    if (grid.mode == Mode::Continuum) {
        require(sigma_x > 0.0, ErrorKind::Validation, "initial width sigma_x must be positive");
    } else {
        require(level >= 0 && static_cast<std::size_t>(level) < grid.nx, ErrorKind::Validation,
                "initial level out of range");
    }
}

const std::vector<std::string>& initial_state_names() {
    static const std::vector<std::string> names{"gaussian_product", "plane_wave_product"};
    return names;
}

CField phase_space_factor(const PhaseGrid& g, const InitialStateSpec& s) {
    CField out(phase_shape(g));
    for (std::size_t i = 0; i < g.nq; ++i)
        for (std::size_t j = 0; j < g.np; ++j) {
            const double q = g.q(i), p = g.p(j);
            const double amp = von_mises(q, s.q0, s.sigma_q, g.Lq) *
                               std::exp(-(p - s.p0) * (p - s.p0) / (4.0 * s.sigma_p * s.sigma_p));
            out(i, j, 0) = std::polar(amp, 2.0 * M_PI * s.kq * q / g.Lq);
        }
    return out;
}

CVector quantum_factor(const PhaseGrid& g, const InitialStateSpec& s) {
    const long n = static_cast<long>(g.nx);
    CVector v = CVector::Zero(n);
    if (g.mode == Mode::Continuum) {
        const bool plane = s.name == "plane_wave_product";
        for (long k = 0; k < n; ++k) {
            const double x = g.x(static_cast<std::size_t>(k));
            const double amp = plane ? 1.0 : von_mises(x, s.x0, s.sigma_x, g.Lx);
            v(k) = std::polar(amp, 2.0 * M_PI * s.kx * x / g.Lx);
        }
        return v;
    }
    v(s.level) = std::cos(0.5 * s.theta);
    if (n > 1) v((s.level + 1) % n) += std::polar(std::sin(0.5 * s.theta), s.phi);
    return v;
}

HybridWavefunction product_state(const PhaseGrid& g, const CField& psi_z, const CVector& phi) {
    require(psi_z.shape() == phase_shape(g) && static_cast<std::size_t>(phi.size()) == g.nx, ErrorKind::Shape,
            "product state factors have the wrong shape");
    auto out = HybridWavefunction::zeros(g);
    for (std::size_t i = 0; i < g.nq; ++i)
        for (std::size_t j = 0; j < g.np; ++j)
            for (std::size_t c = 0; c < g.nx; ++c) out.psi(i, j, c) = psi_z(i, j, 0) * phi(static_cast<long>(c));
    out.normalize();
    return out;
}

HybridWavefunction make_initial_state(const PhaseGrid& grid, const InitialStateSpec& spec) {
    grid.validate();
    spec.validate(grid);
    return product_state(grid, phase_space_factor(grid, spec), quantum_factor(grid, spec));
}

}  // namespace hkvh
