#include "magweyl/discrete_op.hpp"
#include "magweyl/errors.hpp"
#include "magweyl/weyl.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

namespace magweyl {

std::size_t GridSpec::total_sites() const {
    std::size_t t = 1;
    for (int a = 0; a < d; ++a) t *= static_cast<std::size_t>(n);
    return t;
}

double snap_box_for_flux(const FieldConfig& cfg, const SemiclassicalScale& scale, double L,
                         std::vector<std::int64_t>& quanta, double rel_tol) {
    require(L > 0, errc::out_of_range, "box half width must be positive");
    const double s = scale.mu * (2 * L) * (2 * L) / (2 * M_PI * scale.h);
    auto admissible = [&](double cand, std::vector<std::int64_t>& out) {
        out.clear();
        for (double fm : cfg.f) {
            double nf = fm * cand;
            double rounded = std::round(nf);
            if (rounded < 1 || std::fabs(nf - rounded) > rel_tol * std::max(1.0, nf))
                return false;
            out.push_back(static_cast<std::int64_t>(rounded));
        }
        return true;
    };

    // already integral: keep the requested box bit-exact
    if (admissible(s, quanta)) return L;

    // candidates indexed by the flux integer of the largest frequency
    const double f0 = cfg.f_max();
    const std::int64_t k0 = std::llround(f0 * s);
    double best_s = -1;
    std::vector<std::int64_t> best_q, probe;
    for (std::int64_t off = -256; off <= 256; ++off) {
        std::int64_t k = k0 + off;
        if (k < 1) continue;
        double cand = static_cast<double>(k) / f0;
        if (!admissible(cand, probe)) continue;
        if (best_s < 0 || std::fabs(cand - s) < std::fabs(best_s - s)) {
            best_s = cand;
            best_q = probe;
        }
    }
    require(best_s > 0, errc::flux_not_quantizable,
            "no box near L makes every plane flux integral (frequencies incommensurable?)");
    quanta = best_q;
    return 0.5 * std::sqrt(2 * M_PI * scale.h * best_s / scale.mu);
}

namespace {

struct Assembler {
    const GridSpec& g;
    const FieldConfig& cfg;
    const SemiclassicalScale& scale;
    const std::vector<std::int64_t>& quanta;

    // phase of the +1 hop link leaving site `iv` along `axis`
    double link_phase(int axis, const int* iv) const {
        const int r = cfg.r;
        const int n = g.n;
        if (axis >= r && axis < 2 * r) {
            int m = axis - r;
            if (g.boundary == Boundary::torus) {
                // built from the flux integer so the phase is exact
                return 2 * M_PI * static_cast<double>(quanta[m]) * (iv[m] - 0.5 * n) /
                       (static_cast<double>(n) * n);
            }
            double xm = g.coord(iv[m]);
            return scale.mu * cfg.f[m] * xm * g.spacing() / scale.h;
        }
        if (axis < r && g.boundary == Boundary::torus && iv[axis] == n - 1) {
            // seam hop closing the pair plane; keeps every plaquette flux equal
            int b = r + axis;
            return -2 * M_PI * static_cast<double>(quanta[axis]) * iv[b] / n;
        }
        return 0;
    }
};

} // namespace

DiscreteOperator assemble(const Potential& V, const FieldConfig& cfg,
                          const SemiclassicalScale& scale, GridSpec grid) {
    require(grid.d == cfg.d, errc::out_of_range, "grid dimension must match the field dimension");
    require(grid.n >= 16, errc::grid_too_coarse, "grid needs at least 16 points per axis");
    require(grid.stencil_order == 2 || grid.stencil_order == 4, errc::config_error,
            "stencil order must be 2 or 4");
    require(grid.d <= 4, errc::dimension_too_large, "assembly supports d <= 4");

    DiscreteOperator op;
    op.cfg = cfg;
    op.scale = scale;
    op.potential_id = V.describe();

    GridSpec g = grid;
    op.flux.requested_L = grid.L;
    if (g.boundary == Boundary::torus) {
        g.L = snap_box_for_flux(cfg, scale, grid.L, op.flux.quanta);
        op.flux.snapped_L = g.L;
        op.flux.snapped = g.L != grid.L;
    } else {
        op.flux.snapped_L = g.L;
    }

    const double lB = std::sqrt(scale.h / (scale.mu * cfg.f_max()));
    const double ratio = lB / g.spacing();
    require(ratio >= 1.5, errc::resolution_too_coarse,
            "fewer than 1.5 grid points per magnetic length");
    if (ratio < 4) {
        char buf[96];
        std::snprintf(buf, sizeof buf, "magnetic length resolved by only %.2f points", ratio);
        g.warning = buf;
    }

    const int d = g.d, n = g.n;
    const double dx = g.spacing();
    const double t = scale.h * scale.h / (dx * dx);
    const bool fourth = g.stencil_order == 4;
    const double diag_per_axis = fourth ? 2.5 * t : 2.0 * t;
    const double c1 = fourth ? (16.0 / 12.0) * t : t;
    const double c2 = (1.0 / 12.0) * t;

    Assembler A{g, cfg, scale, op.flux.quanta};

    const std::size_t total = g.total_sites();
    using T = Eigen::Triplet<std::complex<double>>;
    std::vector<T> trips;
    trips.reserve(total * (1 + 2 * d * (fourth ? 2 : 1)));

    std::vector<int> iv(d, 0);
    Eigen::VectorXd x(d);
    for (std::size_t s = 0; s < total; ++s) {
        std::size_t rem = s;
        for (int a = d - 1; a >= 0; --a) {
            iv[a] = static_cast<int>(rem % n);
            rem /= n;
        }
        for (int a = 0; a < d; ++a) x[a] = g.coord(iv[a]);

        double diag = V.value(x.data(), d) + d * diag_per_axis;
        trips.emplace_back(static_cast<int>(s), static_cast<int>(s),
                           std::complex<double>(diag, 0));

        for (int a = 0; a < d; ++a) {
            std::size_t stride = 1;
            for (int b = a + 1; b < d; ++b) stride *= static_cast<std::size_t>(n);
            auto neighbor = [&](int to) {
                return s - static_cast<std::size_t>(iv[a]) * stride +
                       static_cast<std::size_t>(to) * stride;
            };

            // single hop: M(s, s+e_a) = -c1 * exp(i phase)
            if (g.boundary == Boundary::torus || iv[a] + 1 < n) {
                std::size_t s1 = neighbor((iv[a] + 1) % n);
                double ph = A.link_phase(a, iv.data());
                std::complex<double> w = -c1 * std::exp(std::complex<double>(0, ph));
                trips.emplace_back(static_cast<int>(s), static_cast<int>(s1), w);
                trips.emplace_back(static_cast<int>(s1), static_cast<int>(s), std::conj(w));
            }
            // double hop for the fourth-order stencil; phase is the product of
            // the two consecutive links
            if (fourth && (g.boundary == Boundary::torus || iv[a] + 2 < n)) {
                std::vector<int> iv1 = iv;
                iv1[a] = (iv[a] + 1) % n;
                double ph = A.link_phase(a, iv.data()) + A.link_phase(a, iv1.data());
                std::size_t s2 = neighbor((iv[a] + 2) % n);
                std::complex<double> w = c2 * std::exp(std::complex<double>(0, ph));
                trips.emplace_back(static_cast<int>(s), static_cast<int>(s2), w);
                trips.emplace_back(static_cast<int>(s2), static_cast<int>(s), std::conj(w));
            }
        }
    }

    op.grid = g;
    op.matrix.resize(static_cast<Eigen::Index>(total), static_cast<Eigen::Index>(total));
    op.matrix.setFromTriplets(trips.begin(), trips.end());
    op.matrix.makeCompressed();

    // Hermiticity audit
    Eigen::SparseMatrix<std::complex<double>> diff =
        Eigen::SparseMatrix<std::complex<double>>(op.matrix.adjoint()) - op.matrix;
    double resid = 0, scale_max = 0;
    for (int k = 0; k < diff.outerSize(); ++k)
        for (Eigen::SparseMatrix<std::complex<double>>::InnerIterator it(diff, k); it; ++it)
            resid = std::max(resid, std::abs(it.value()));
    for (int k = 0; k < op.matrix.outerSize(); ++k)
        for (Eigen::SparseMatrix<std::complex<double>>::InnerIterator it(op.matrix, k); it; ++it)
            scale_max = std::max(scale_max, std::abs(it.value()));
    op.hermiticity_residual = resid;
    require(resid <= 1e-12 * std::max(1.0, scale_max), errc::invariant_violation,
            "assembled operator is not Hermitian");
    return op;
}

Eigen::VectorXd DiscreteOperator::site_position(std::size_t flat) const {
    Eigen::VectorXd x(grid.d);
    std::size_t rem = flat;
    for (int a = grid.d - 1; a >= 0; --a) {
        x[a] = grid.coord(static_cast<int>(rem % grid.n));
        rem /= grid.n;
    }
    return x;
}

Eigen::VectorXd DiscreteOperator::sample_diagonal(const Potential& psi) const {
    Eigen::VectorXd w(static_cast<Eigen::Index>(dim()));
    for (std::size_t s = 0; s < dim(); ++s) {
        Eigen::VectorXd x = site_position(s);
        w[static_cast<Eigen::Index>(s)] = psi.value(x.data(), grid.d);
    }
    return w;
}

void DiscreteOperator::export_coordinate_text(const std::string& path) const {
    std::ofstream out(path);
    require(out.good(), errc::io_error, "cannot open " + path);
    for (int k = 0; k < matrix.outerSize(); ++k)
        for (Eigen::SparseMatrix<std::complex<double>>::InnerIterator it(matrix, k); it; ++it) {
            char line[96];
            std::snprintf(line, sizeof line, "%ld %ld %.17g %.17g\n",
                          static_cast<long>(it.row()), static_cast<long>(it.col()),
                          it.value().real(), it.value().imag());
            out << line;
        }
    require(out.good(), errc::io_error, "write failed for " + path);
}

namespace {

// symmetric kernel-direction Laplacian-plus-potential on the given grid
Eigen::MatrixXd kernel_operator(const Potential& V, const FieldConfig& cfg,
                                const SemiclassicalScale& scale, const GridSpec& kg,
                                double level) {
    const int q = kg.d;
    require(q >= 1 && q <= 2, errc::dimension_too_large,
            "band reduction supports kernel dimension 1 or 2");
    const int n = kg.n;
    const double dx = kg.spacing();
    const double t = scale.h * scale.h / (dx * dx);
    const bool fourth = kg.stencil_order == 4;
    const double diag_per_axis = fourth ? 2.5 * t : 2.0 * t;
    const double c1 = fourth ? (16.0 / 12.0) * t : t;
    const double c2 = (1.0 / 12.0) * t;

    int size = q == 1 ? n : n * n;
    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(size, size);
    Eigen::VectorXd x = Eigen::VectorXd::Zero(cfg.d);
    std::vector<int> iv(q, 0);
    for (int s = 0; s < size; ++s) {
        int rem = s;
        for (int a = q - 1; a >= 0; --a) {
            iv[a] = rem % n;
            rem /= n;
        }
        for (int a = 0; a < q; ++a) x[2 * cfg.r + a] = kg.coord(iv[a]);
        M(s, s) = V.value(x.data(), cfg.d) + level + q * diag_per_axis;
        for (int a = 0; a < q; ++a) {
            int stride = 1;
            for (int b = a + 1; b < q; ++b) stride *= n;
            if (kg.boundary == Boundary::torus || iv[a] + 1 < n) {
                int s1 = s + (((iv[a] + 1) % n) - iv[a]) * stride;
                M(s, s1) += -c1;
                M(s1, s) += -c1;
            }
            if (fourth && (kg.boundary == Boundary::torus || iv[a] + 2 < n)) {
                int s2 = s + (((iv[a] + 2) % n) - iv[a]) * stride;
                M(s, s2) += c2;
                M(s2, s) += c2;
            }
        }
    }
    return M;
}

} // namespace

BandFamily band_reduce(const Potential& V, const FieldConfig& cfg,
                       const SemiclassicalScale& scale, double e_cut, GridSpec kernel_grid) {
    const int q = cfg.q;
    require(kernel_grid.d == q || q == 0, errc::out_of_range,
            "kernel grid dimension must equal q");
    require(q == 0 || kernel_grid.n >= 16, errc::grid_too_coarse,
            "kernel grid needs at least 16 points per axis");

    std::vector<int> pair_axes;
    for (int a = 0; a < 2 * cfg.r; ++a) pair_axes.push_back(a);
    require(V.independent_of(pair_axes, 1e-10), errc::not_separable,
            "potential varies along non-kernel coordinates");

    BandFamily fam;
    fam.q = q;
    fam.e_cut = e_cut;
    fam.kernel_grid = kernel_grid;

    double v0 = 0;
    if (q == 0) {
        require(V.is_constant(&v0), errc::not_separable,
                "q = 0 band reduction needs a constant potential");
        fam.v_min = v0;
    } else {
        // minimum of V over the kernel grid sites
        double vmin = std::numeric_limits<double>::infinity();
        Eigen::VectorXd x = Eigen::VectorXd::Zero(cfg.d);
        std::vector<int> iv(q, 0);
        int sites = 1;
        for (int a = 0; a < q; ++a) sites *= kernel_grid.n;
        for (int s = 0; s < sites; ++s) {
            int rem = s;
            for (int a = q - 1; a >= 0; --a) {
                iv[a] = rem % kernel_grid.n;
                rem /= kernel_grid.n;
            }
            for (int a = 0; a < q; ++a) x[2 * cfg.r + a] = kernel_grid.coord(iv[a]);
            vmin = std::min(vmin, V.value(x.data(), cfg.d));
        }
        fam.v_min = vmin;
    }

    double cap = e_cut - fam.v_min;
    if (cap <= 0) return fam; // empty family: cutoff below the ground level

    LandauLattice lat = landau_lattice(cfg.f, scale.mu * scale.h, cap);
    for (const auto& [level, alpha] : lat.levels) {
        Band b;
        b.alpha = alpha;
        b.level = level;
        if (q == 0)
            b.scalar = level + v0;
        else
            b.op = kernel_operator(V, cfg, scale, kernel_grid, level);
        fam.bands.push_back(std::move(b));
    }
    return fam;
}

CountingCurve band_counting(const BandFamily& family, const std::vector<double>& taus,
                            double degeneracy) {
    require(!taus.empty(), errc::out_of_range, "need at least one tau");
    require(degeneracy > 0, errc::out_of_range, "degeneracy weight must be positive");
    for (size_t i = 1; i < taus.size(); ++i)
        require(taus[i] > taus[i - 1], errc::out_of_range, "taus must be ascending");
    require(taus.back() <= family.e_cut, errc::incomplete_family,
            "family cutoff below the largest requested tau");

    // collect all band spectra once
    std::vector<double> spectrum;
    for (const auto& b : family.bands) {
        if (family.q == 0) {
            spectrum.push_back(b.scalar);
        } else {
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(b.op,
                                                              Eigen::EigenvaluesOnly);
            require(es.info() == Eigen::Success, errc::complex_arithmetic_failure,
                    "band eigensolve failed");
            const auto& ev = es.eigenvalues();
            spectrum.insert(spectrum.end(), ev.data(), ev.data() + ev.size());
        }
    }
    std::sort(spectrum.begin(), spectrum.end());

    CountingCurve curve;
    curve.provenance = Provenance::band;
    curve.taus = taus;
    for (double tau : taus) {
        auto it = std::upper_bound(spectrum.begin(), spectrum.end(), tau);
        curve.values.push_back(degeneracy * static_cast<double>(it - spectrum.begin()));
    }
    curve.validate();
    return curve;
}

} // namespace magweyl
