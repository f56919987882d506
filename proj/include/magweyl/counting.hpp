#pragma once

#include <string>
#include <vector>

namespace magweyl {

enum class Provenance { exact_oracle, dense, inertia, kpm, weyl, magnetic_weyl, band };

const char* provenance_name(Provenance p);

// Monotone counting function tau -> N(tau), possibly psi-localized, sampled on
// an ascending tau grid. Curves compared across engines share the grid.
struct CountingCurve {
    std::vector<double> taus;
    std::vector<double> values;
    std::vector<double> stderrs; // per-tau statistical error, stochastic engines only
    Provenance provenance = Provenance::exact_oracle;
    std::string localization; // description of psi, empty when global

    // checks ascending taus and non-decreasing values (tolerance for smoothed
    // stochastic curves)
    void validate(double monotone_tol = 0) const;
    // step evaluation: value at the largest grid tau <= tau, 0 below the grid
    double at(double tau) const;
};

} // namespace magweyl
