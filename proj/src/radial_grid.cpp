#include "shadowblow/radial_grid.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>
#include <string>

#include <boost/math/tools/roots.hpp>
#include <fmt/format.h>
#include <fmt/os.h>

#include "shadowblow/error.hpp"

namespace shadowblow {

RadialGrid::RadialGrid(std::vector<double> nodes, double ratio)
    : nodes_(std::move(nodes)), ratio_(ratio) {
    if (nodes_.size() < 64) throw ValidationError("node_count", "at least 64 nodes required");
    if (nodes_.front() != 0.0) throw ValidationError("nodes", "first node must be 0");
    for (std::size_t i = 1; i < nodes_.size(); ++i) {
        if (!(nodes_[i] > nodes_[i - 1]) || !std::isfinite(nodes_[i])) {
            throw ValidationError("nodes", "must be finite and strictly increasing");
        }
    }
}

GridPtr build_grid(double radius, std::size_t node_count, double min_spacing) {
    if (!(radius > 0.0) || !std::isfinite(radius)) throw ValidationError("radius", "must be positive");
    if (node_count < 64) throw ValidationError("node_count", "at least 64 nodes required");
    const double uniform = radius / static_cast<double>(node_count);
    if (!(min_spacing > 0.0) || min_spacing > uniform * (1.0 + 1e-12)) {
        throw ValidationError("min_spacing", "must lie in (0, radius/node_count]");
    }
    const auto intervals = static_cast<int>(node_count - 1);
    // Sum of the geometric intervals as a function of L = ln(ratio).
    auto excess = [&](double L) {
        if (L < 1e-14) return min_spacing * intervals - radius;
        return min_spacing * std::expm1(intervals * L) / std::expm1(L) - radius;
    };
    double ratio = 1.0;
    if (excess(0.0) < 0.0) {
        double hi = 1e-3;
        while (excess(hi) < 0.0) hi *= 2.0;
        boost::math::tools::eps_tolerance<double> tol(50);
        boost::uintmax_t iters = 200;
        auto [lo_L, hi_L] = boost::math::tools::toms748_solve(excess, 0.0, hi, tol, iters);
        ratio = std::exp(0.5 * (lo_L + hi_L));
    }
    std::vector<double> nodes(node_count);
    double h = min_spacing;
    nodes[0] = 0.0;
    for (std::size_t i = 1; i < node_count; ++i) {
        nodes[i] = nodes[i - 1] + h;
        h *= ratio;
    }
    // Rescale away round-off so the last node is exactly the radius.
    const double scale = radius / nodes.back();
    for (auto& x : nodes) x *= scale;
    nodes.back() = radius;
    return std::make_shared<const RadialGrid>(std::move(nodes), ratio);
}

RadialField::RadialField(GridPtr grid, std::vector<double> values)
    : grid_(std::move(grid)), values_(std::move(values)) {
    if (!grid_) throw ValidationError("grid", "missing grid");
    if (values_.size() != grid_->size()) throw ValidationError("values", "length differs from grid");
    for (double v : values_) {
        if (!std::isfinite(v)) throw ValidationError("values", "non-finite field value");
    }
}

RadialOperator::RadialOperator(GridPtr grid, int dim) : grid_(std::move(grid)), dim_(dim) {
    if (dim < 1) throw ValidationError("dim", "must be at least 1");
    const auto x = grid_->nodes();
    const std::size_t n = x.size();
    volumes_.assign(n, 0.0);
    couplings_.assign(n - 1, 0.0);
    auto moment = [dim](double rho) { return std::pow(rho, dim) / dim; };
    double left = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double right = (i + 1 < n) ? 0.5 * (x[i] + x[i + 1]) : x[n - 1];
        volumes_[i] = moment(right) - moment(left);
        if (i + 1 < n) couplings_[i] = std::pow(right, dim - 1) / (x[i + 1] - x[i]);
        left = right;
    }
    total_volume_ = moment(x[n - 1]);
    scratch_.resize(n);
}

void RadialOperator::apply_laplacian(std::span<const double> f, std::span<double> out) const {
    const std::size_t n = volumes_.size();
    for (std::size_t i = 0; i < n; ++i) {
        double flux = 0.0;
        if (i + 1 < n) flux += couplings_[i] * (f[i + 1] - f[i]);
        if (i > 0) flux -= couplings_[i - 1] * (f[i] - f[i - 1]);
        out[i] = flux / volumes_[i];
    }
}

double RadialOperator::mean(std::span<const double> g) const {
    double acc = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) acc += volumes_[i] * g[i];
    return acc / total_volume_;
}

void RadialOperator::solve_shifted(double alpha, double beta, std::span<double> rhs) const {
    const std::size_t n = volumes_.size();
    auto& c_prime = scratch_;
    // Row i: lower = -beta*c_{i-1}/V_i, upper = -beta*c_i/V_i.
    double lower = 0.0;
    double diag = alpha + beta * couplings_[0] / volumes_[0];
    double upper = -beta * couplings_[0] / volumes_[0];
    c_prime[0] = upper / diag;
    rhs[0] /= diag;
    for (std::size_t i = 1; i < n; ++i) {
        const double cl = couplings_[i - 1];
        const double cr = (i + 1 < n) ? couplings_[i] : 0.0;
        lower = -beta * cl / volumes_[i];
        diag = alpha + beta * (cl + cr) / volumes_[i];
        upper = -beta * cr / volumes_[i];
        const double m = diag - lower * c_prime[i - 1];
        c_prime[i] = upper / m;
        rhs[i] = (rhs[i] - lower * rhs[i - 1]) / m;
    }
    for (std::size_t i = n - 1; i-- > 0;) rhs[i] -= c_prime[i] * rhs[i + 1];
}

RadialField laplacian(const RadialField& f, int dim) {
    RadialOperator op(f.grid(), dim);
    std::vector<double> out(f.size());
    op.apply_laplacian(f.values(), out);
    return RadialField(f.grid(), std::move(out));
}

namespace {

std::vector<double> powered(const RadialField& f, double exponent) {
    const bool integer = exponent == std::floor(exponent);
    std::vector<double> g(f.size());
    for (std::size_t i = 0; i < g.size(); ++i) {
        if (f[i] < 0.0 && !integer) throw DomainError("negative value with fractional exponent");
        g[i] = std::pow(f[i], exponent);
    }
    return g;
}

}  // namespace

double mean_power_integral(const RadialField& f, double exponent, int dim) {
    RadialOperator op(f.grid(), dim);
    return op.mean(powered(f, exponent));
}

double sphere_area(int dim) {
    return 2.0 * std::pow(std::numbers::pi, 0.5 * dim) / std::tgamma(0.5 * dim);
}

double ball_volume(double radius, int dim) { return sphere_area(dim) * std::pow(radius, dim) / dim; }

double ball_power_integral(const RadialField& f, double exponent, int dim) {
    RadialOperator op(f.grid(), dim);
    std::vector<double> g(f.size());
    for (std::size_t i = 0; i < g.size(); ++i) g[i] = std::pow(std::abs(f[i]), exponent);
    return op.mean(g) * ball_volume(f.grid()->radius(), dim);
}

RadialField heat_semigroup(const RadialField& f, double t, int dim, double max_step) {
    if (!(t >= 0.0)) throw DomainError("heat_semigroup requires t >= 0");
    std::vector<double> v(f.values().begin(), f.values().end());
    if (t == 0.0) return RadialField(f.grid(), std::move(v));
    RadialOperator op(f.grid(), dim);
    const auto steps = static_cast<long>(std::ceil(t / max_step));
    const double dt = t / static_cast<double>(steps);
    for (long k = 0; k < steps; ++k) op.solve_shifted(1.0, dt, v);
    return RadialField(f.grid(), std::move(v));
}

double sup_norm(const RadialField& f) {
    double m = 0.0;
    for (double v : f.values()) m = std::max(m, std::abs(v));
    return m;
}

RadialField gradient(const RadialField& f) {
    const auto x = f.grid()->nodes();
    const auto v = f.values();
    const std::size_t n = x.size();
    std::vector<double> g(n);
    auto three_point = [&](std::size_t a, std::size_t b, std::size_t c, std::size_t at) {
        // Derivative at x[at] of the quadratic through (a, b, c).
        const double xa = x[a], xb = x[b], xc = x[c], z = x[at];
        const double la = ((z - xb) + (z - xc)) / ((xa - xb) * (xa - xc));
        const double lb = ((z - xa) + (z - xc)) / ((xb - xa) * (xb - xc));
        const double lc = ((z - xa) + (z - xb)) / ((xc - xa) * (xc - xb));
        return la * v[a] + lb * v[b] + lc * v[c];
    };
    g[0] = three_point(0, 1, 2, 0);
    for (std::size_t i = 1; i + 1 < n; ++i) g[i] = three_point(i - 1, i, i + 1, i);
    g[n - 1] = three_point(n - 3, n - 2, n - 1, n - 1);
    return RadialField(f.grid(), std::move(g));
}

double green_identity_residual(const RadialField& f, double r, int dim) {
    RadialOperator op(f.grid(), dim);
    const std::size_t n = f.size();
    std::vector<double> lap(n);
    op.apply_laplacian(f.values(), lap);
    const RadialField g = gradient(f);
    std::vector<double> a(n), b(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (!(f[i] > 0.0)) throw DomainError("green identity requires a positive field");
        a[i] = std::pow(f[i], r - 1.0) * lap[i];
        b[i] = std::pow(f[i], r - 2.0) * g[i] * g[i];
    }
    return op.mean(a) + (r - 1.0) * op.mean(b);
}

void write_field_csv(const std::filesystem::path& path, const RadialField& f) {
    auto out = fmt::output_file(path.string());
    out.print("radius,value\n");
    const auto x = f.grid()->nodes();
    for (std::size_t i = 0; i < f.size(); ++i) out.print("{:.17g},{:.17g}\n", x[i], f[i]);
}

namespace {

void read_columns(const std::filesystem::path& path, std::vector<double>& x, std::vector<double>& v) {
    std::ifstream in(path);
    if (!in) throw NotFoundError("cannot open field file " + path.string());
    std::string line;
    std::getline(in, line);
    if (line.rfind("radius,value", 0) != 0) throw ValidationError("csv", "expected header radius,value in " + path.string());
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos) throw ValidationError("csv", "malformed row in " + path.string());
        x.push_back(std::stod(line.substr(0, comma)));
        v.push_back(std::stod(line.substr(comma + 1)));
    }
}

}  // namespace

RadialField read_field_csv(const std::filesystem::path& path) {
    std::vector<double> x, v;
    read_columns(path, x, v);
    const double ratio = x.size() > 2 ? (x[2] - x[1]) / (x[1] - x[0]) : 1.0;
    return RadialField(std::make_shared<const RadialGrid>(std::move(x), ratio), std::move(v));
}

RadialField read_field_csv(const std::filesystem::path& path, const GridPtr& grid) {
    std::vector<double> x, v;
    read_columns(path, x, v);
    if (x.size() != grid->size()) throw ValidationError("csv", "grid size mismatch in " + path.string());
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (x[i] != (*grid)[i]) throw ValidationError("csv", "grid node mismatch in " + path.string());
    }
    return RadialField(grid, std::move(v));
}

}  // namespace shadowblow
