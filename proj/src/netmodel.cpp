#include "cfreq/netmodel.hpp"

#include "cfreq/errors.hpp"
#include "cfreq/kernels.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace cfreq {

Grid::Grid(std::vector<Bus> buses, std::vector<Branch> branches, double mva_base,
           double f_nominal)
    : buses_(std::move(buses)), branches_(std::move(branches)), mva_base_(mva_base),
      f_nominal_(f_nominal)
{
    validate();
}

double Grid::omega_o() const { return 2.0 * std::numbers::pi * f_nominal_; }

std::optional<std::size_t> Grid::find_branch(int bus_a, int bus_b) const
{
    for (std::size_t i = 0; i < branches_.size(); ++i) {
        const auto& br = branches_[i];
        if ((br.from == bus_a && br.to == bus_b) || (br.from == bus_b && br.to == bus_a)) {
            return i;
        }
    }
    return std::nullopt;
}

void Grid::set_in_service(std::size_t branch, bool in_service)
{
    branches_.at(branch).in_service = in_service;
}

void Grid::validate() const
{
    const auto n = static_cast<int>(buses_.size());
    if (n < 1) {
        throw ModelError("grid has no buses");
    }
    if (!(f_nominal_ > 0.0) || !std::isfinite(f_nominal_)) {
        throw ModelError("nominal frequency must be positive");
    }
    if (!(mva_base_ > 0.0)) {
        throw ModelError("system MVA base must be positive");
    }
    std::vector<bool> seen(buses_.size(), false);
    for (const auto& bus : buses_) {
        if (bus.index < 1 || bus.index > n) {
            throw ModelError("bus index " + std::to_string(bus.index) + " outside [1, " +
                             std::to_string(n) + "]");
        }
        if (seen[bus.index - 1]) {
            throw ModelError("duplicate bus index " + std::to_string(bus.index));
        }
        seen[bus.index - 1] = true;
    }
    for (std::size_t i = 0; i < branches_.size(); ++i) {
        const auto& br = branches_[i];
        if (br.from < 1 || br.from > n || br.to < 1 || br.to > n) {
            throw ModelError("branch " + std::to_string(i) + " references a missing bus");
        }
        if (br.from == br.to) {
            throw ModelError("branch " + std::to_string(i) + " is a self loop");
        }
        if (br.x == 0.0) {
            throw ModelError("branch " + std::to_string(i) + " has zero series reactance");
        }
        if (!(br.tap > 0.0)) {
            throw ModelError("branch " + std::to_string(i) + " has a non-positive tap");
        }
    }
}

Eigen::MatrixXcd Admittance::dense() const
{
    Eigen::MatrixXcd out(G.rows(), G.cols());
    for (Eigen::Index h = 0; h < G.rows(); ++h) {
        for (Eigen::Index k = 0; k < G.cols(); ++k) {
            out(h, k) = cplx(G(h, k), B(h, k));
        }
    }
    return out;
}

std::vector<cplx> BusVoltages::phasors() const
{
    std::vector<cplx> out(v.size());
    for (std::size_t h = 0; h < v.size(); ++h) {
        out[h] = phasor(h);
    }
    return out;
}

BusVoltages BusVoltages::from_phasors(const std::vector<cplx>& vbar)
{
    BusVoltages out(vbar.size());
    for (std::size_t h = 0; h < vbar.size(); ++h) {
        out.v[h] = std::abs(vbar[h]);
        out.theta[h] = std::arg(vbar[h]);
    }
    return out;
}

cplx InjectionMatrix::row_sum(std::size_t h) const { return {H.row(h).sum(), K.row(h).sum()}; }

std::vector<cplx> InjectionMatrix::injections() const
{
    std::vector<cplx> out(size());
    for (std::size_t h = 0; h < size(); ++h) {
        out[h] = row_sum(h);
    }
    return out;
}

Admittance build_admittance(const Grid& grid)
{
    grid.validate();
    const auto n = static_cast<Eigen::Index>(grid.n_bus());
    Eigen::MatrixXcd y = Eigen::MatrixXcd::Zero(n, n);
    for (const auto& bus : grid.buses()) {
        y(bus.index - 1, bus.index - 1) += cplx(bus.shunt_g, bus.shunt_b);
    }
    for (const auto& br : grid.branches()) {
        if (!br.in_service) {
            continue;
        }
        const cplx ys = 1.0 / cplx(br.r, br.x);
        const cplx ysh(0.0, 0.5 * br.b);
        const auto f = br.from - 1;
        const auto t = br.to - 1;
        y(f, f) += (ys + ysh) / (br.tap * br.tap);
        y(t, t) += ys + ysh;
        y(f, t) -= ys / br.tap;
        y(t, f) -= ys / br.tap;
    }
    for (Eigen::Index h = 0; h < n; ++h) {
        if (y.row(h).cwiseAbs().maxCoeff() == 0.0) {
            throw ModelError("bus " + std::to_string(h + 1) + " is isolated");
        }
    }
    Admittance out;
    out.G = y.real();
    out.B = y.imag();
    return out;
}

namespace {

void check_voltages(const BusVoltages& voltages, std::size_t n)
{
    if (voltages.v.size() != n || voltages.theta.size() != n) {
        throw NumericError("voltage profile size does not match the network");
    }
    for (std::size_t h = 0; h < n; ++h) {
        if (!std::isfinite(voltages.v[h]) || !std::isfinite(voltages.theta[h])) {
            throw NumericError("non-finite voltage at bus " + std::to_string(h + 1));
        }
        if (!(voltages.v[h] > 0.0)) {
            throw NumericError("non-positive voltage magnitude at bus " + std::to_string(h + 1));
        }
    }
}

}  // namespace

InjectionMatrix build_injection_matrix(const Admittance& y, const BusVoltages& voltages)
{
    const std::size_t n = y.size();
    check_voltages(voltages, n);
    std::vector<double> e(n);
    std::vector<double> f(n);
    for (std::size_t h = 0; h < n; ++h) {
        e[h] = voltages.v[h] * std::cos(voltages.theta[h]);
        f[h] = voltages.v[h] * std::sin(voltages.theta[h]);
    }
    InjectionMatrix s;
    s.H.resize(n, n);
    s.K.resize(n, n);
    const auto& kern = simd::active_kernels();
    for (std::size_t h = 0; h < n; ++h) {
        kern.injection_row(e[h], f[h], y.G.data() + h * n, y.B.data() + h * n, e.data(), f.data(),
                           s.H.data() + h * n, s.K.data() + h * n, n);
    }
    return s;
}

ApproxMatrices build_approx_matrices(const Admittance& y)
{
    const auto n = static_cast<Eigen::Index>(y.size());
    ApproxMatrices m;
    m.Bp = -y.B;
    m.Bpp = -y.B;
    m.Gp = -y.G;
    m.Gpp = -y.G;
    for (Eigen::Index h = 0; h < n; ++h) {
        double b_off = 0.0;
        double g_off = 0.0;
        for (Eigen::Index k = 0; k < n; ++k) {
            if (k != h) {
                b_off += y.B(h, k);
                g_off += y.G(h, k);
            }
        }
        m.Bp(h, h) = b_off;
        m.Bpp(h, h) = -2.0 * y.B(h, h);
        m.Gp(h, h) = g_off;
        m.Gpp(h, h) = -2.0 * y.G(h, h);
    }
    return m;
}

std::vector<cplx> network_currents(const Admittance& y, const std::vector<cplx>& vbar)
{
    const std::size_t n = y.size();
    std::vector<double> vr(n), vi(n), ir(n), ii(n);
    for (std::size_t h = 0; h < n; ++h) {
        vr[h] = vbar[h].real();
        vi[h] = vbar[h].imag();
    }
    simd::active_kernels().complex_matvec(y.G.data(), y.B.data(), vr.data(), vi.data(), ir.data(),
                                          ii.data(), n, n);
    std::vector<cplx> out(n);
    for (std::size_t h = 0; h < n; ++h) {
        out[h] = cplx(ir[h], ii[h]);
    }
    return out;
}

std::vector<cplx> network_injections(const Admittance& y, const std::vector<cplx>& vbar)
{
    auto out = network_currents(y, vbar);
    for (std::size_t h = 0; h < out.size(); ++h) {
        out[h] = vbar[h] * std::conj(out[h]);
    }
    return out;
}

Eigen::MatrixXcd current_matrix(const Admittance& y, const std::vector<cplx>& vbar)
{
    const auto n = static_cast<Eigen::Index>(y.size());
    Eigen::MatrixXcd out(n, n);
    for (Eigen::Index h = 0; h < n; ++h) {
        for (Eigen::Index k = 0; k < n; ++k) {
            out(h, k) = y(h, k) * vbar[k];
        }
    }
    return out;
}

}  // namespace cfreq
