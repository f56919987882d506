#pragma once

#include "magweyl/counting.hpp"
#include "magweyl/field.hpp"
#include "magweyl/potential.hpp"

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <complex>
#include <cstdint>
#include <string>
#include <vector>

namespace magweyl {

enum class Boundary { torus, dirichlet };

// Uniform grid on [-L, L]^d. Torus grids place n sites per axis with spacing
// 2L/n (periodic); Dirichlet grids place n interior sites with spacing
// 2L/(n+1) and implicit zeros at the walls.
struct GridSpec {
    int d = 2;
    int n = 16;
    double L = 1.0;
    Boundary boundary = Boundary::torus;
    int stencil_order = 2; // 2 or 4
    std::string warning;   // set when the magnetic length is under-resolved

    double spacing() const { return boundary == Boundary::torus ? 2 * L / n : 2 * L / (n + 1); }
    std::size_t total_sites() const;
    // coordinate of grid index i along one axis
    double coord(int i) const {
        return boundary == Boundary::torus ? -L + i * spacing() : -L + (i + 1) * spacing();
    }
};

// Flux quantization bookkeeping for torus grids: N_m = mu f_m (2L)^2/(2 pi h)
// per 2-plane, with the minimal box snap applied to make every N_m integral.
struct FluxRecord {
    std::vector<std::int64_t> quanta;
    double requested_L = 0;
    double snapped_L = 0;
    bool snapped = false;
};

// Hermitian discretization of sum_j (h D_j - mu A_j(x))^2 + V(x) in canonical
// field coordinates, with Peierls link phases on the torus.
struct DiscreteOperator {
    Eigen::SparseMatrix<std::complex<double>> matrix;
    GridSpec grid;
    FieldConfig cfg;
    SemiclassicalScale scale;
    std::string potential_id;
    FluxRecord flux;
    double hermiticity_residual = 0;

    std::size_t dim() const { return static_cast<std::size_t>(matrix.rows()); }
    Eigen::MatrixXcd dense() const { return Eigen::MatrixXcd(matrix); }
    Eigen::VectorXd site_position(std::size_t flat) const;
    // diagonal weight vector psi(x_site) for localized traces
    Eigen::VectorXd sample_diagonal(const Potential& psi) const;
    void export_coordinate_text(const std::string& path) const;
};

// Minimal box snap making all torus fluxes integral; returns the snapped L and
// fills the per-plane flux integers. Fails when no admissible box exists near
// the request (incommensurable frequencies).
double snap_box_for_flux(const FieldConfig& cfg, const SemiclassicalScale& scale, double L,
                         std::vector<std::int64_t>& quanta, double rel_tol = 1e-9);

DiscreteOperator assemble(const Potential& V, const FieldConfig& cfg,
                          const SemiclassicalScale& scale, GridSpec grid);

// One Landau band: the q-dimensional kernel-direction operator shifted by the
// Landau level, or a bare scalar when q = 0.
struct Band {
    std::vector<int> alpha;
    double level = 0;     // sum_j (2 alpha_j + 1) f_j mu h
    double scalar = 0;    // q = 0: level + constant V
    Eigen::MatrixXd op;   // q >= 1: dense symmetric kernel-direction operator
};

struct BandFamily {
    std::vector<Band> bands; // ascending by level
    double e_cut = 0;
    int q = 0;
    GridSpec kernel_grid;
    double v_min = 0;
};

// Builds the family of kernel-direction operators for V depending only on the
// kernel coordinates. kernel_grid describes the discretization of each kernel
// axis and must match the stencil of any operator being compared against.
BandFamily band_reduce(const Potential& V, const FieldConfig& cfg,
                       const SemiclassicalScale& scale, double e_cut, GridSpec kernel_grid);

// Counting curve of the band family: per-band eigenvalue counts (indicator for
// q = 0) weighted by the Landau degeneracy of one level.
CountingCurve band_counting(const BandFamily& family, const std::vector<double>& taus,
                            double degeneracy);

} // namespace magweyl
