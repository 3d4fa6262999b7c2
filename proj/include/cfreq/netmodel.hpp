#pragma once

// Static network model: topology, per-unit admittance matrix, and the
// matrices derived from it for a given voltage profile.

#include <Eigen/Dense>

#include <complex>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace cfreq {

using cplx = std::complex<double>;
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct Bus {
    int index = 0;  // 1-based, dense in [1, n]
    std::string name;
    double base_kv = 1.0;
    double v0 = 1.0;      // initial-condition hint (pu)
    double theta0 = 0.0;  // initial-condition hint (rad)
    double shunt_g = 0.0;  // fixed bus shunt (pu)
    double shunt_b = 0.0;
};

/// Standard pi branch. `tap` is an off-nominal ratio on the from side.
struct Branch {
    int from = 0;  // 1-based bus indices
    int to = 0;
    double r = 0.0;
    double x = 0.0;
    double b = 0.0;  // total charging
    double tap = 1.0;
    bool in_service = true;
};

class Grid {
public:
    Grid() = default;
    Grid(std::vector<Bus> buses, std::vector<Branch> branches, double mva_base = 100.0,
         double f_nominal = 60.0);

    std::size_t n_bus() const { return buses_.size(); }
    const std::vector<Bus>& buses() const { return buses_; }
    const std::vector<Branch>& branches() const { return branches_; }
    double mva_base() const { return mva_base_; }
    double f_nominal() const { return f_nominal_; }
    double omega_o() const;

    /// Index into branches() of the first branch joining the two buses (either orientation).
    std::optional<std::size_t> find_branch(int bus_a, int bus_b) const;
    void set_in_service(std::size_t branch, bool in_service);
    Branch& branch(std::size_t i) { return branches_.at(i); }

    /// Throws ModelError when an invariant is broken.
    void validate() const;

private:
    std::vector<Bus> buses_;
    std::vector<Branch> branches_;
    double mva_base_ = 100.0;
    double f_nominal_ = 60.0;
};

/// Complex admittance matrix Y = G + jB kept as two row-major real planes.
struct Admittance {
    RowMatrix G;
    RowMatrix B;

    std::size_t size() const { return static_cast<std::size_t>(G.rows()); }
    cplx operator()(std::size_t h, std::size_t k) const { return {G(h, k), B(h, k)}; }
    Eigen::MatrixXcd dense() const;
};

/// Per-bus voltage Park vectors in polar form.
struct BusVoltages {
    std::vector<double> v;
    std::vector<double> theta;

    BusVoltages() = default;
    explicit BusVoltages(std::size_t n) : v(n, 1.0), theta(n, 0.0) {}
    BusVoltages(std::vector<double> mag, std::vector<double> ang)
        : v(std::move(mag)), theta(std::move(ang)) {}

    std::size_t size() const { return v.size(); }
    cplx phasor(std::size_t h) const { return std::polar(v[h], theta[h]); }
    std::vector<cplx> phasors() const;
    static BusVoltages from_phasors(const std::vector<cplx>& vbar);
};

/// Pairwise power terms s_hk = p_hk + j q_hk. Row sums are the bus injections.
struct InjectionMatrix {
    RowMatrix H;  // Re S
    RowMatrix K;  // Im S

    std::size_t size() const { return static_cast<std::size_t>(H.rows()); }
    cplx operator()(std::size_t h, std::size_t k) const { return {H(h, k), K(h, k)}; }
    cplx row_sum(std::size_t h) const;
    std::vector<cplx> injections() const;
};

struct ApproxMatrices {
    RowMatrix Bp;   // B'
    RowMatrix Bpp;  // B''
    RowMatrix Gp;   // G'
    RowMatrix Gpp;  // G''
};

/// Pi-model assembly over in-service branches plus bus shunts.
Admittance build_admittance(const Grid& grid);

/// Requires finite voltages with v_h > 0.
InjectionMatrix build_injection_matrix(const Admittance& y, const BusVoltages& voltages);

ApproxMatrices build_approx_matrices(const Admittance& y);

/// Network-side injections v_h (Y v)_h^*, without forming the full injection matrix.
std::vector<cplx> network_injections(const Admittance& y, const std::vector<cplx>& vbar);

/// Network current injections Y v.
std::vector<cplx> network_currents(const Admittance& y, const std::vector<cplx>& vbar);

/// I = Y diag(v), the current-form network matrix.
Eigen::MatrixXcd current_matrix(const Admittance& y, const std::vector<cplx>& vbar);

}  // namespace cfreq
