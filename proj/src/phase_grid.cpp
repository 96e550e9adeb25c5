#include "hybridkvh/phase_grid.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <sstream>
#include <thread>
#include <tuple>

namespace hkvh {

std::string to_string(Mode mode) { return mode == Mode::Continuum ? "continuum" : "finite_dim"; }

Mode mode_from_string(const std::string& name) {
    if (name == "continuum") return Mode::Continuum;
    if (name == "finite_dim") return Mode::FiniteDim;
    fail(ErrorKind::Validation, "unknown grid mode '" + name + "'");
}

std::string to_string(const Shape& s) {
    std::ostringstream os;
    os << "(" << s.n0 << ", " << s.n1 << ", " << s.n2 << ")";
    return os.str();
}

PhaseGrid PhaseGrid::continuum(std::size_t nq, std::size_t np, std::size_t nx, double Lq, double Lp,
                               double Lx) {
    PhaseGrid g{nq, np, nx, Lq, Lp, Lx, Mode::Continuum};
    g.validate();
    return g;
}

PhaseGrid PhaseGrid::finite_dim(std::size_t nq, std::size_t np, std::size_t levels, double Lq,
                                double Lp) {
    PhaseGrid g{nq, np, levels, Lq, Lp, 0.0, Mode::FiniteDim};
    g.validate();
    return g;
}

void PhaseGrid::validate() const {
    auto check_axis = [](std::size_t n, const char* name) {
        require(n >= 4 && n % 2 == 0, ErrorKind::Validation,
                std::string("grid size ") + name + " must be even and >= 4, got " + std::to_string(n));
    };
    check_axis(nq, "nq");
    check_axis(np, "np");
    require(Lq > 0.0 && Lp > 0.0, ErrorKind::Validation, "grid lengths must be positive");
    if (mode == Mode::Continuum) {
        check_axis(nx, "nx");
        require(Lx > 0.0, ErrorKind::Validation, "grid length Lx must be positive");
    } else {
        require(nx >= 1, ErrorKind::Validation, "finite_dim mode needs at least one level");
    }
}

// --- FFT plumbing -----------------------------------------------------------

namespace {

struct PlanKey {
    std::size_t n0, n1, n2;
    int axis;
    int threads;
    auto tie() const { return std::tie(n0, n1, n2, axis, threads); }
    bool operator<(const PlanKey& o) const { return tie() < o.tie(); }
};

struct PlanPair {
    fftw_plan forward = nullptr;
    fftw_plan backward = nullptr;
};

class PlanCache {
public:
    ~PlanCache() {
        for (auto& [key, plans] : plans_) {
            fftw_destroy_plan(plans.forward);
            fftw_destroy_plan(plans.backward);
        }
    }

    PlanPair get(const Shape& s, int axis) {
        std::lock_guard<std::mutex> lock(mutex_);
        const PlanKey key{s.n0, s.n1, s.n2, axis, threads_};
        if (auto it = plans_.find(key); it != plans_.end()) return it->second;

        const int n[3] = {static_cast<int>(s.n0), static_cast<int>(s.n1), static_cast<int>(s.n2)};
        const int stride[3] = {n[1] * n[2], n[2], 1};
        fftw_iodim dim{n[axis], stride[axis], stride[axis]};
        fftw_iodim loops[2];
        int nloops = 0;
        for (int a = 0; a < 3; ++a) {
            if (a == axis) continue;
            loops[nloops++] = fftw_iodim{n[a], stride[a], stride[a]};
        }
        std::vector<fftw_complex> scratch(s.size());
        if (threads_ > 1) fftw_plan_with_nthreads(threads_);
        PlanPair pair;
        pair.forward = fftw_plan_guru_dft(1, &dim, nloops, loops, scratch.data(), scratch.data(),
                                          FFTW_FORWARD, FFTW_ESTIMATE | FFTW_UNALIGNED);
        pair.backward = fftw_plan_guru_dft(1, &dim, nloops, loops, scratch.data(), scratch.data(),
                                           FFTW_BACKWARD, FFTW_ESTIMATE | FFTW_UNALIGNED);
        require(pair.forward && pair.backward, ErrorKind::Runtime, "FFTW planning failed");
        plans_.emplace(key, pair);
        return pair;
    }

    void set_threads(int threads) {
        std::lock_guard<std::mutex> lock(mutex_);
        if (threads <= 0) threads = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
        if (threads > 1 && !threads_initialised_) {
            fftw_init_threads();
            threads_initialised_ = true;
        }
        threads_ = threads;
    }

private:
    std::mutex mutex_;
    std::map<PlanKey, PlanPair> plans_;
    int threads_ = 1;
    bool threads_initialised_ = false;
};

PlanCache& plan_cache() {
    static PlanCache cache;
    return cache;
}

// Signed wavenumber index for FFT bin j of an n-point transform.
inline double wave_index(std::size_t j, std::size_t n) {
    return j <= n / 2 ? static_cast<double>(j) : static_cast<double>(j) - static_cast<double>(n);
}

// Applies a Fourier multiplier m(k) along one axis, in place.
template <class Multiplier>
void apply_multiplier(CField& f, int axis, Multiplier&& mult) {
    require(axis >= 0 && axis <= 2, ErrorKind::Shape, "array axis must be 0, 1 or 2");
    const Shape s = f.shape();
    const std::size_t n[3] = {s.n0, s.n1, s.n2};
    const std::size_t len = n[axis];
    PlanPair plans = plan_cache().get(s, axis);
    auto* raw = reinterpret_cast<fftw_complex*>(f.data());
    fftw_execute_dft(plans.forward, raw, raw);

    std::vector<cplx> factor(len);
    for (std::size_t j = 0; j < len; ++j) factor[j] = mult(j, len) / static_cast<double>(len);

    for (std::size_t i = 0; i < s.n0; ++i)
        for (std::size_t j = 0; j < s.n1; ++j)
            for (std::size_t c = 0; c < s.n2; ++c) {
                const std::size_t idx[3] = {i, j, c};
                f(i, j, c) *= factor[idx[axis]];
            }
    fftw_execute_dft(plans.backward, raw, raw);
}

RField real_of(const CField& f) {
    RField out(f.shape());
    for (std::size_t n = 0; n < f.size(); ++n) out[n] = f[n].real();
    return out;
}

int grid_axis(const PhaseGrid& g, const Shape& s, Axis axis, double& length) {
    require(s.n0 == g.nq && s.n1 == g.np, ErrorKind::Shape,
            "field shape " + to_string(s) + " does not match the phase grid");
    switch (axis) {
        case Axis::Q: length = g.Lq; return 0;
        case Axis::P: length = g.Lp; return 1;
        case Axis::X:
            require(g.mode == Mode::Continuum, ErrorKind::Validation,
                    "x derivative is undefined in finite_dim mode");
            require(s.n2 == g.nx, ErrorKind::Shape, "x derivative needs a hybrid-shaped field");
            length = g.Lx;
            return 2;
    }
    fail(ErrorKind::Validation, "invalid axis");
}

}  // namespace

void set_fft_threads(int threads) { plan_cache().set_threads(threads); }

CField derivative(const CField& f, int axis, double length) {
    CField out = f;
    const double scale = 2.0 * std::numbers::pi / length;
    apply_multiplier(out, axis, [scale](std::size_t j, std::size_t n) {
        if (n % 2 == 0 && j == n / 2) return cplx{0.0, 0.0};
        return cplx{0.0, scale * wave_index(j, n)};
    });
    return out;
}

RField derivative(const RField& f, int axis, double length) {
    return real_of(derivative(to_complex(f), axis, length));
}

CField second_derivative(const CField& f, int axis, double length) {
    CField out = f;
    const double scale = 2.0 * std::numbers::pi / length;
    apply_multiplier(out, axis, [scale](std::size_t j, std::size_t n) {
        const double k = scale * wave_index(j, n);
        return cplx{-k * k, 0.0};
    });
    return out;
}

RField second_derivative(const RField& f, int axis, double length) {
    return real_of(second_derivative(to_complex(f), axis, length));
}

CField spectral_derivative(const PhaseGrid& g, const CField& f, Axis axis) {
    double length = 0.0;
    const int a = grid_axis(g, f.shape(), axis, length);
    return derivative(f, a, length);
}

RField spectral_derivative(const PhaseGrid& g, const RField& f, Axis axis) {
    double length = 0.0;
    const int a = grid_axis(g, f.shape(), axis, length);
    return derivative(f, a, length);
}

namespace {

template <class F>
F bracket_impl(const PhaseGrid& g, const F& A, const F& B) {
    const Shape sa = A.shape();
    const Shape sb = B.shape();
    require(sa.n0 == g.nq && sa.n1 == g.np && sb.n0 == g.nq && sb.n1 == g.np, ErrorKind::Shape,
            "poisson_bracket: fields do not match the phase grid");
    const bool broadcast_b = sb.n2 == 1 && sa.n2 != 1;
    const bool broadcast_a = sa.n2 == 1 && sb.n2 != 1;
    require(sa == sb || broadcast_a || broadcast_b, ErrorKind::Shape,
            "poisson_bracket: incompatible shapes " + to_string(sa) + " and " + to_string(sb));

    const F Aq = derivative(A, 0, g.Lq);
    const F Ap = derivative(A, 1, g.Lp);
    const F Bq = derivative(B, 0, g.Lq);
    const F Bp = derivative(B, 1, g.Lp);
    const Shape out_shape = broadcast_b ? sa : sb;
    F out(out_shape);
    for (std::size_t i = 0; i < out_shape.n0; ++i)
        for (std::size_t j = 0; j < out_shape.n1; ++j)
            for (std::size_t c = 0; c < out_shape.n2; ++c) {
                const std::size_t ca = broadcast_a ? 0 : c;
                const std::size_t cb = broadcast_b ? 0 : c;
                out(i, j, c) = Aq(i, j, ca) * Bp(i, j, cb) - Ap(i, j, ca) * Bq(i, j, cb);
            }
    return out;
}

template <class F>
auto sum_field(const PhaseGrid& g, const F& f) {
    const Shape s = f.shape();
    require(s.n0 == g.nq && s.n1 == g.np, ErrorKind::Shape, "integrate: field does not match grid");
    const bool hybrid = g.mode == Mode::Continuum && s.n2 == g.nx && s.n2 > 1;
    const double w = hybrid ? g.cell_weight() : g.phase_weight();
    KahanSum re, im;
    for (std::size_t n = 0; n < f.size(); ++n) {
        re.add(std::real(f[n]));
        im.add(std::imag(f[n]));
    }
    return std::pair{re.value() * w, im.value() * w};
}

}  // namespace

CField poisson_bracket(const PhaseGrid& g, const CField& A, const CField& B) { return bracket_impl(g, A, B); }
RField poisson_bracket(const PhaseGrid& g, const RField& A, const RField& B) { return bracket_impl(g, A, B); }

double integrate(const PhaseGrid& g, const RField& f) { return sum_field(g, f).first; }

cplx integrate(const PhaseGrid& g, const CField& f) {
    auto [re, im] = sum_field(g, f);
    return {re, im};
}

std::vector<cplx> integrate_phase(const PhaseGrid& g, const CField& f) {
    const Shape s = f.shape();
    require(s.n0 == g.nq && s.n1 == g.np, ErrorKind::Shape, "integrate_phase: field does not match grid");
    std::vector<KahanSum> re(s.n2), im(s.n2);
    for (std::size_t i = 0; i < s.n0; ++i)
        for (std::size_t j = 0; j < s.n1; ++j)
            for (std::size_t c = 0; c < s.n2; ++c) {
                re[c].add(f(i, j, c).real());
                im[c].add(f(i, j, c).imag());
            }
    std::vector<cplx> out(s.n2);
    for (std::size_t c = 0; c < s.n2; ++c) out[c] = {re[c].value() * g.phase_weight(), im[c].value() * g.phase_weight()};
    return out;
}

std::vector<double> integrate_phase(const PhaseGrid& g, const RField& f) {
    const auto c = integrate_phase(g, to_complex(f));
    std::vector<double> out(c.size());
    for (std::size_t n = 0; n < c.size(); ++n) out[n] = c[n].real();
    return out;
}

double boundary_mass(const PhaseGrid& g, const RField& f) {
    const Shape s = f.shape();
    require(s.n0 == g.nq && s.n1 == g.np, ErrorKind::Shape, "boundary_mass: field does not match grid");
    KahanSum total, edge;
    for (std::size_t i = 0; i < s.n0; ++i)
        for (std::size_t j = 0; j < s.n1; ++j)
            for (std::size_t c = 0; c < s.n2; ++c) {
                const double v = f(i, j, c);
                total.add(v);
                if (j == 0 || j + 1 == s.n1) edge.add(v);
            }
    return total.value() > 0.0 ? edge.value() / total.value() : 0.0;
}

RField real_part(const CField& f) { return real_of(f); }

RField imag_part(const CField& f) {
    RField out(f.shape());
    for (std::size_t n = 0; n < f.size(); ++n) out[n] = f[n].imag();
    return out;
}

RField abs2(const CField& f) {
    RField out(f.shape());
    for (std::size_t n = 0; n < f.size(); ++n) out[n] = std::norm(f[n]);
    return out;
}

CField to_complex(const RField& f) {
    CField out(f.shape());
    for (std::size_t n = 0; n < f.size(); ++n) out[n] = f[n];
    return out;
}

double max_abs(const CField& f) {
    double m = 0.0;
    for (const auto& v : f) m = std::max(m, std::abs(v));
    return m;
}

double max_abs(const RField& f) {
    double m = 0.0;
    for (double v : f) m = std::max(m, std::abs(v));
    return m;
}

double max_abs_diff(const CField& a, const CField& b) {
    require(a.shape() == b.shape(), ErrorKind::Shape, "max_abs_diff: shape mismatch");
    double m = 0.0;
    for (std::size_t n = 0; n < a.size(); ++n) m = std::max(m, std::abs(a[n] - b[n]));
    return m;
}

double max_abs_diff(const RField& a, const RField& b) {
    require(a.shape() == b.shape(), ErrorKind::Shape, "max_abs_diff: shape mismatch");
    double m = 0.0;
    for (std::size_t n = 0; n < a.size(); ++n) m = std::max(m, std::abs(a[n] - b[n]));
    return m;
}

bool all_finite(const CField& f) {
    return std::all_of(f.begin(), f.end(), [](const cplx& v) { return std::isfinite(v.real()) && std::isfinite(v.imag()); });
}

}  // namespace hkvh
