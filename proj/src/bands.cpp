#include "berkson/bands.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "berkson/errors.hpp"
#include "berkson/parallel.hpp"

namespace berkson {

double grid_spacing_bound(int n, double a_n, double h) {
    return std::sqrt(h) / (n * std::sqrt(a_n));
}

eval_grid make_eval_grid(double a, double b, int n, double a_n, double h, double refine) {
    if (!(a <= b)) throw config_error("interval", "requires a <= b");
    if (n < 1) throw config_error("n", "must be at least 1");
    if (!(a_n > 0.0 && a_n < 1.0)) throw config_error("a_n", "must lie in (0, 1)");
    if (!(h > 0.0)) throw config_error("h", "bandwidth must be positive");
    if (!(refine >= 1.0)) throw config_error("grid_refine", "must be at least 1");
    const double edge = 1.0 / a_n - h;
    if (a < -edge || b > edge)
        throw config_error("interval", "must lie inside the identifiable range [" + std::to_string(-edge) + ", " +
                                           std::to_string(edge) + "]");
    eval_grid g;
    if (a == b) {
        g.x = {a};
        return g;
    }
    const double bound = grid_spacing_bound(n, a_n, h) / refine;
    const auto cells = static_cast<std::size_t>(std::ceil((b - a) / bound));
    g.spacing = (b - a) / static_cast<double>(cells);
    g.x.resize(cells + 1);
    for (std::size_t i = 0; i <= cells; ++i) g.x[i] = a + static_cast<double>(i) * g.spacing;
    g.x.back() = b;
    return g;
}

void band_request::validate() const {
    if (!(a <= b)) throw config_error("interval", "requires a <= b");
    if (!(alpha > 0.0 && alpha < 1.0)) throw config_error("alpha", "must lie in (0, 1)");
    if (draws < 1) throw config_error("M", "must be positive");
    if (!(h > 0.0)) throw config_error("h", "bandwidth must be positive");
    if (h_v < 0.0) throw config_error("h_v", "must be nonnegative");
}

double band_result::mean_width() const {
    if (half_width.empty()) return 0.0;
    return 2.0 * std::accumulate(half_width.begin(), half_width.end(), 0.0) /
           static_cast<double>(half_width.size());
}

bool band_result::covers(std::span<const double> truth) const {
    if (truth.size() != grid.size()) throw config_error("truth", "length does not match the grid");
    for (std::size_t i = 0; i < grid.size(); ++i)
        if (truth[i] < lower[i] || truth[i] > upper[i]) return false;
    return true;
}

double quantile(std::vector<double> sups, double level) {
    if (sups.empty()) throw config_error("M", "quantile of an empty sample");
    if (!(level > 0.0 && level <= 1.0)) throw config_error("level", "must lie in (0, 1]");
    const auto m = sups.size();
    auto k = static_cast<std::size_t>(std::ceil(static_cast<double>(m) * level - 1e-12));
    k = std::clamp<std::size_t>(k, 1, m);
    std::nth_element(sups.begin(), sups.begin() + static_cast<std::ptrdiff_t>(k - 1), sups.end());
    return sups[k - 1];
}

namespace {

Eigen::MatrixXd scaled_transpose(const Eigen::MatrixXd& smoother, std::span<const double> row_scale,
                                 double factor) {
    Eigen::MatrixXd w = smoother.transpose() * factor;
    for (Eigen::Index i = 0; i < w.cols(); ++i) w.col(i) *= row_scale[static_cast<std::size_t>(i)];
    return w;
}

double process_factor(const fixed_design& design, double h, double beta) {
    return std::sqrt(design.n * design.a_n * std::pow(h, 1.0 + 2.0 * beta));
}

}  // namespace

multiplier_process::multiplier_process(const fixed_design& design, std::span<const double> grid,
                                       const kernel_table& kernel, std::vector<std::size_t> columns,
                                       std::span<const double> col_weights, std::span<const double> row_scale)
    : multiplier_process(design, smoother_matrix(design, grid, kernel, columns, col_weights), columns,
                         row_scale, kernel.h(), kernel.beta()) {}

multiplier_process::multiplier_process(const fixed_design& design, const Eigen::MatrixXd& smoother,
                                       std::vector<std::size_t> columns, std::span<const double> row_scale,
                                       double h, double beta)
    : design_size_(design.size()), columns_(std::move(columns)) {
    if (static_cast<std::size_t>(smoother.cols()) != columns_.size() ||
        static_cast<std::size_t>(smoother.rows()) != row_scale.size())
        throw config_error("process", "smoother block does not match columns and grid");
    weights_ = scaled_transpose(smoother, row_scale, process_factor(design, h, beta));
}

std::vector<double> multiplier_process::draw_multipliers(std::uint64_t seed) const {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<double> z(design_size_);
    for (auto& v : z) v = normal(rng);
    return z;
}

Eigen::VectorXd multiplier_process::path(std::span<const double> z) const {
    if (z.size() != design_size_) throw config_error("multipliers", "length does not match the design");
    Eigen::VectorXd zc(static_cast<Eigen::Index>(columns_.size()));
    for (std::size_t c = 0; c < columns_.size(); ++c) zc(static_cast<Eigen::Index>(c)) = z[columns_[c]];
    return weights_.transpose() * zc;
}

double multiplier_process::sup(std::span<const double> z) const { return path(z).cwiseAbs().maxCoeff(); }

double multiplier_process::sup_draw(std::uint64_t seed) const { return sup(draw_multipliers(seed)); }

std::vector<double> multiplier_process::sups(std::size_t count, std::uint64_t root, unsigned threads) const {
    constexpr std::size_t block = 64;
    const std::size_t blocks = (count + block - 1) / block;
    const auto ncols = static_cast<Eigen::Index>(columns_.size());
    std::vector<double> out(count);
    parallel_for(blocks, threads, [&](std::size_t bi) {
        const std::size_t start = bi * block;
        const std::size_t len = std::min(block, count - start);
        Eigen::MatrixXd z(static_cast<Eigen::Index>(len), ncols);
        for (std::size_t r = 0; r < len; ++r) {
            const auto full = draw_multipliers(root + start + r);
            for (Eigen::Index c = 0; c < ncols; ++c)
                z(static_cast<Eigen::Index>(r), c) = full[columns_[static_cast<std::size_t>(c)]];
        }
        const Eigen::MatrixXd paths = z * weights_;
        for (std::size_t r = 0; r < len; ++r)
            out[start + r] = paths.row(static_cast<Eigen::Index>(r)).cwiseAbs().maxCoeff();
    });
    return out;
}

double multiplier_process::variance(std::size_t i) const {
    return weights_.col(static_cast<Eigen::Index>(i)).squaredNorm();
}

double multiplier_sup_draw(const fixed_design& design, const kernel_table& kernel,
                           std::span<const double> grid, std::uint64_t seed) {
    std::vector<std::size_t> cols(design.size());
    std::iota(cols.begin(), cols.end(), std::size_t{0});
    const std::vector<double> ones(grid.size(), 1.0);
    return multiplier_process(design, grid, kernel, cols, design.weights, ones).sup_draw(seed);
}

band_engine::band_engine(const fixed_design& design, const band_request& request, const error_density& density,
                         const taper_spec& taper, std::shared_ptr<const kernel_table> kernel)
    : design_(design), request_(request) {
    prepare(density, taper, std::move(kernel));
}

band_engine::band_engine(const fixed_design& design, const band_request& request, const error_density& density,
                         const taper_spec& taper, const split_mask& mask,
                         std::shared_ptr<const kernel_table> kernel)
    : design_(design), request_(request), mask_(mask) {
    if (density.smoothness() == smoothness_class::S)
        throw config_error("density", "the sample-split band is for class W densities; use the baseline band");
    if (!design.regular) throw config_error("design", "the sample-split band requires the regular design");
    prepare(density, taper, std::move(kernel));
}

void band_engine::prepare(const error_density& density, const taper_spec& taper,
                          std::shared_ptr<const kernel_table> kernel) {
    request_.validate();
    taper.validate();
    const double h = request_.h;
    grid_ = make_eval_grid(request_.a, request_.b, design_.n, design_.a_n, h, request_.grid_refine);
    if (!kernel) {
        const double span = default_span(design_.a_n, h);
        kernel = std::make_shared<const kernel_table>(
            make_kernel_table(taper, density, h, default_grid_len(taper, span), span));
    }
    if (std::abs(kernel->h() - h) > 1e-12 * h) throw config_error("h", "kernel table built for a different bandwidth");
    kernel_ = std::move(kernel);
    h_v_ = request_.h_v > 0.0 ? request_.h_v : default_variance_bandwidth(request_.a, request_.b, design_.n);

    const int n = design_.n;
    std::vector<double> weights;
    if (mask_) {
        for (int j = -n; j <= n; ++j) {
            const auto idx = static_cast<std::size_t>(j + n);
            if (mask_->is_kept(j, n)) {
                columns_.push_back(idx);
                weights.push_back(mask_->gaps[idx]);
                if (std::abs(j) <= n * mask_->b_n) process_cols_.push_back(columns_.size() - 1);
            } else {
                held_out_.push_back(idx);
            }
        }
    } else {
        columns_.resize(design_.size());
        std::iota(columns_.begin(), columns_.end(), std::size_t{0});
        weights = design_.weights;
    }
    smoother_ = smoother_matrix(design_, grid_.x, *kernel_, columns_, weights);
    if (!mask_) {
        const std::vector<double> ones(grid_.x.size(), 1.0);
        baseline_.emplace(design_, smoother_, columns_, ones, h, kernel_->beta());
    }

    if (request_.draws < 100) warnings_.push_back("fewer than 100 bootstrap draws");
    const double ratio = 1.0 / (design_.n * design_.a_n * std::pow(h, 1.0 + 2.0 * kernel_->beta()));
    if (ratio >= 1.0)
        warnings_.push_back("1/(n a_n h^(1+2 beta)) = " + std::to_string(ratio) +
                            " >= 1: bandwidth is small for this sample size");
}

multiplier_process band_engine::process(const variance_curve* nu) const {
    if (!mask_) return *baseline_;
    if (!nu) throw config_error("nu", "the sample-split process needs a variance curve");
    Eigen::MatrixXd block(smoother_.rows(), static_cast<Eigen::Index>(process_cols_.size()));
    std::vector<std::size_t> cols(process_cols_.size());
    for (std::size_t c = 0; c < process_cols_.size(); ++c) {
        const std::size_t col = process_cols_[c];
        cols[c] = columns_[col];
        block.col(static_cast<Eigen::Index>(c)) =
            smoother_.col(static_cast<Eigen::Index>(col)) * nu->clamped(design_.points[cols[c]]);
    }
    std::vector<double> row_scale(grid_.x.size());
    for (std::size_t i = 0; i < grid_.x.size(); ++i) row_scale[i] = 1.0 / (*nu)(grid_.x[i]);
    return multiplier_process(design_, block, std::move(cols), row_scale, request_.h, kernel_->beta());
}

band_result band_engine::build(const regression_sample& sample, const variance_curve* nu,
                               std::optional<std::uint64_t> seed) const {
    sample.validate();
    if (sample.design.size() != design_.size()) throw config_error("responses", "sample does not match the design");

    band_result r;
    r.grid = grid_.x;
    r.spacing = grid_.spacing;
    r.h = request_.h;
    r.beta = kernel_->beta();
    r.alpha = request_.alpha;
    r.draws = request_.draws;
    r.seed = seed.value_or(request_.seed);
    r.extension = mask_.has_value();
    r.warnings = warnings_;

    Eigen::VectorXd yc(static_cast<Eigen::Index>(columns_.size()));
    for (std::size_t c = 0; c < columns_.size(); ++c) yc(static_cast<Eigen::Index>(c)) = sample.y[columns_[c]];
    const Eigen::VectorXd g = smoother_ * yc;
    r.ghat.assign(g.data(), g.data() + g.size());

    std::optional<variance_curve> estimated;
    if (!nu) {
        estimated = estimate_nu(sample, h_v_, request_.a, request_.b, held_out_);
        nu = &*estimated;
    }
    r.nu_floor = nu->floor();
    r.nuhat = nu->evaluate(r.grid);
    for (double x : r.grid) r.floor_active = r.floor_active || nu->floored_at(x);

    const multiplier_process proc = process(nu);
    r.sups = proc.sups(static_cast<std::size_t>(request_.draws), r.seed, request_.threads);
    r.quantile = quantile(r.sups, 1.0 - request_.alpha);

    const double denom = std::sqrt(design_.n * design_.a_n) * std::pow(request_.h, 0.5 + r.beta);
    const std::size_t m = r.grid.size();
    r.half_width.resize(m);
    r.lower.resize(m);
    r.upper.resize(m);
    for (std::size_t i = 0; i < m; ++i) {
        r.half_width[i] = r.quantile * r.nuhat[i] / denom;
        r.lower[i] = r.ghat[i] - r.half_width[i];
        r.upper[i] = r.ghat[i] + r.half_width[i];
    }
    return r;
}

band_result build_band(const regression_sample& sample, const band_request& request, const error_density& density,
                       const taper_spec& taper, const variance_curve* nu) {
    return band_engine(sample.design, request, density, taper).build(sample, nu);
}

band_result build_band_extension(const regression_sample& sample, const band_request& request,
                                 const error_density& density, const taper_spec& taper, int d_n, double b_n,
                                 const variance_curve* nu) {
    const split_mask mask = build_split(sample.design, d_n, b_n);
    return band_engine(sample.design, request, density, taper, mask).build(sample, nu);
}

}  // namespace berkson
