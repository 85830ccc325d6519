// core.hpp — shared domain types for the Weyl photonic lattice simulator

#pragma once

#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace weylqed {

using cplx = std::complex<double>;
using Vec3 = Eigen::Vector3d;
using Vec3i = Eigen::Vector3i;

inline constexpr double pi = 3.14159265358979323846;
inline constexpr cplx I{0.0, 1.0};
inline constexpr const char* version = "1.0.0";

/// Malformed input: invalid parameters, unknown keys, out-of-range requests.
class InvalidInput : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

/// A numerical routine could not produce a trustworthy result.
class NumericalFailure : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

enum class Sublattice : std::uint8_t { A = 0, B = 1 };

inline Sublattice other(Sublattice s) { return s == Sublattice::A ? Sublattice::B : Sublattice::A; }
inline char to_char(Sublattice s) { return s == Sublattice::A ? 'A' : 'B'; }
inline double stagger(Sublattice s) { return s == Sublattice::A ? 1.0 : -1.0; }

/// Sublattice reached from `from` after a displacement with in-plane parity (dx + dy).
inline Sublattice shifted(Sublattice from, int dx, int dy) {
    return ((dx + dy) % 2 == 0) ? from : other(from);
}

/// Bath of the staggered-hopping cubic lattice. Energies in units of the hopping,
/// lengths in units of the lattice constant unless set otherwise.
struct LatticeParams {
    double hopping{1.0};          // J
    double offset{0.0};           // M, +M on A sites and -M on B sites
    double lattice_constant{1.0}; // a
    int size{22};                 // L sites per axis, periodic

    void validate() const {
        if (!(hopping > 0.0)) throw InvalidInput("hopping J must be positive");
        if (!(lattice_constant > 0.0)) throw InvalidInput("lattice constant a must be positive");
        if (size < 2 || size % 2 != 0)
            throw InvalidInput("lattice size L must be even and >= 2 (staggering is periodic only for even L), got " +
                               std::to_string(size));
    }

    /// |M| < 2J: Weyl nodes present, spectrum gapless.
    [[nodiscard]] bool gapless() const { return std::abs(offset) < 2.0 * hopping; }
    [[nodiscard]] std::size_t site_count() const {
        return static_cast<std::size_t>(size) * static_cast<std::size_t>(size) * static_cast<std::size_t>(size);
    }
};

inline int wrap(int v, int n) {
    const int r = v % n;
    return r < 0 ? r + n : r;
}

struct SiteIndex {
    int x{0}, y{0}, z{0};

    [[nodiscard]] Sublattice sublattice() const { return ((x + y) % 2 == 0) ? Sublattice::A : Sublattice::B; }
    [[nodiscard]] std::size_t linear(int L) const {
        return (static_cast<std::size_t>(wrap(x, L)) * L + wrap(y, L)) * L + wrap(z, L);
    }
    static SiteIndex from_linear(std::size_t i, int L) {
        const auto l = static_cast<std::size_t>(L);
        return {static_cast<int>(i / (l * l)), static_cast<int>((i / l) % l), static_cast<int>(i % l)};
    }
    bool operator==(const SiteIndex&) const = default;
};

/// Pauli-vector decomposition of a traceless 2x2 Hermitian matrix,
/// h = [[dz, dx - i dy], [dx + i dy, -dz]].
inline Vec3 pauli_vector(const Eigen::Matrix2cd& h) {
    return {h(1, 0).real(), h(1, 0).imag(), 0.5 * (h(0, 0).real() - h(1, 1).real())};
}

inline Eigen::Matrix2cd from_pauli(const Vec3& d, double identity = 0.0) {
    Eigen::Matrix2cd h;
    h << cplx(identity + d.z(), 0.0), cplx(d.x(), -d.y()), cplx(d.x(), d.y()), cplx(identity - d.z(), 0.0);
    return h;
}

} // namespace weylqed
