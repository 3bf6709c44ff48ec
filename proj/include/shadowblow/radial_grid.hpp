/// @file radial_grid.hpp
/// @brief Graded radial mesh on a ball, fields on it, and the conservative
///        radial Laplacian with Neumann conditions.
#pragma once

#include <cstddef>
#include <filesystem>
#include <memory>
#include <span>
#include <vector>

namespace shadowblow {

class RadialGrid {
public:
    /// Takes ownership of strictly increasing nodes starting at 0.
    RadialGrid(std::vector<double> nodes, double ratio);

    std::span<const double> nodes() const noexcept { return nodes_; }
    std::size_t size() const noexcept { return nodes_.size(); }
    double operator[](std::size_t i) const noexcept { return nodes_[i]; }
    double radius() const noexcept { return nodes_.back(); }
    /// Geometric growth factor of consecutive intervals.
    double ratio() const noexcept { return ratio_; }

private:
    std::vector<double> nodes_;
    double ratio_;
};

using GridPtr = std::shared_ptr<const RadialGrid>;

/// Geometric mesh with first interval `min_spacing` and exact endpoints.
GridPtr build_grid(double radius, std::size_t node_count, double min_spacing);

/// Values of a radial function, one per grid node.
class RadialField {
public:
    RadialField() = default;
    RadialField(GridPtr grid, std::vector<double> values);
    /// Samples `f(rho)` on every node.
    template <class F>
    static RadialField sample(GridPtr grid, F&& f) {
        std::vector<double> v(grid->size());
        for (std::size_t i = 0; i < v.size(); ++i) v[i] = f((*grid)[i]);
        return RadialField(std::move(grid), std::move(v));
    }

    const GridPtr& grid() const noexcept { return grid_; }
    std::span<const double> values() const noexcept { return values_; }
    std::vector<double>& mutable_values() noexcept { return values_; }
    std::size_t size() const noexcept { return values_.size(); }
    double operator[](std::size_t i) const noexcept { return values_[i]; }

private:
    GridPtr grid_;
    std::vector<double> values_;
};

/// Dual-cell volumes and face couplings of the finite-volume Laplacian.
///
/// Cell i spans [rho_{i-1/2}, rho_{i+1/2}] (half cells at both ends) and has
/// radial volume int rho^{N-1} drho. The coupling between i and i+1 is
/// rho_{i+1/2}^{N-1} / (rho_{i+1} - rho_i). No flux leaves through rho = R.
class RadialOperator {
public:
    RadialOperator(GridPtr grid, int dim);

    const GridPtr& grid() const noexcept { return grid_; }
    int dim() const noexcept { return dim_; }
    std::span<const double> volumes() const noexcept { return volumes_; }
    std::span<const double> couplings() const noexcept { return couplings_; }
    double total_volume() const noexcept { return total_volume_; }

    void apply_laplacian(std::span<const double> f, std::span<double> out) const;
    /// Weighted mean sum V_i g_i / sum V_i.
    double mean(std::span<const double> g) const;
    /// Solves (alpha - beta*Laplacian) x = rhs in place (Thomas algorithm).
    void solve_shifted(double alpha, double beta, std::span<double> rhs) const;

private:
    GridPtr grid_;
    int dim_;
    std::vector<double> volumes_;
    std::vector<double> couplings_;
    double total_volume_;
    mutable std::vector<double> scratch_;
};

RadialField laplacian(const RadialField& f, int dim);

/// (1/|B_R|) int f^exponent dx.
double mean_power_integral(const RadialField& f, double exponent, int dim);

/// int_{B_R} |f|^exponent dx including the sphere area factor.
double ball_power_integral(const RadialField& f, double exponent, int dim);

double sphere_area(int dim);
double ball_volume(double radius, int dim);

/// Neumann heat flow up to time t by backward-Euler steps no longer than
/// `max_step`.
RadialField heat_semigroup(const RadialField& f, double t, int dim, double max_step = 1e-5);

double sup_norm(const RadialField& f);

/// Second-order radial derivative; centered inside, one-sided at the ends.
RadialField gradient(const RadialField& f);

/// mean(f^{r-1} Lap f) + (r-1) mean(f^{r-2} |grad f|^2); tends to 0 with h.
double green_identity_residual(const RadialField& f, double r, int dim);

void write_field_csv(const std::filesystem::path& path, const RadialField& f);
RadialField read_field_csv(const std::filesystem::path& path);
/// Reads values and reuses `grid` when nodes match it exactly.
RadialField read_field_csv(const std::filesystem::path& path, const GridPtr& grid);

}  // namespace shadowblow
