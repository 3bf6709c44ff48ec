/// @file blowup_data.hpp
/// @brief The constructed initial data U_{d0,d1} and the map
///        (d0, d1) -> (q0, q1)(s0).
#pragma once

#include <vector>

#include "shadowblow/model.hpp"
#include "shadowblow/radial_grid.hpp"
#include "shadowblow/similarity.hpp"

namespace shadowblow {

/// Perturbation parameters. The target time is `params.T`.
///
/// d1 has length N (empty means zero). A radial field samples the data along
/// the first axis, so only d1[0] enters `build_initial`; `gamma_map` uses the
/// whole vector.
struct InitialDataSpec {
    double d0 = 0.0;
    std::vector<double> d1;
    ModelParams params;
};

void validate(const InitialDataSpec& spec);

/// U0 at the point x (length N).
double initial_value(const InitialDataSpec& spec, std::span<const double> x);

/// U0 on the mesh (radial slice along the first axis).
RadialField build_initial(const InitialDataSpec& spec, const GridPtr& grid);

/// W at the similarity point y0 (length N), s0 = -ln T.
double initial_W(const InitialDataSpec& spec, std::span<const double> y0);

struct InitialForms {
    double s0 = 0.0;
    SimilarityFrame frame;          ///< direct closed forms on the frame abscissa
    double consistency_error = 0.0; ///< max |W_direct - W_transform| / max |W_direct|
};

/// Closed-form W, w, q at s0 on the standard frame abscissa, cross-checked
/// against the transform of `build_initial`. Throws ConsistencyError when
/// they differ by more than `tolerance`.
InitialForms initial_similarity_forms(const InitialDataSpec& spec, const GridPtr& grid,
                                      double tolerance = 1e-6);

struct GammaValue {
    double q0 = 0.0;
    std::vector<double> q1;
};

GammaValue gamma_map(double d0, const std::vector<double>& d1, const ModelParams& params);

/// d0 interval whose image under the first component of Gamma is
/// [-A/s0^2, A/s0^2] (at d1 = 0), and the d1 half-width doing the same for q1.
struct GammaBox {
    double d0_lo = 0.0;
    double d0_hi = 0.0;
    double d1_half_width = 0.0;
    bool encloses_zero = false;
    bool inside_admissible = false;  ///< box within [-2, 2]^{1+N}
};

GammaBox gamma_box(const ModelParams& params);

}  // namespace shadowblow
