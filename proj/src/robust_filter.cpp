#include "rfilter/robust_filter.hpp"
#include "rfilter/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace rfilter {

SampleDraw draw_sample(const InitialLaw& law, const std::vector<double>& times, std::size_t db,
                       std::size_t refinement, std::uint64_t seed, std::uint64_t index, StreamPurpose purpose) {
    if (refinement == 0) throw InvalidArgument("noise refinement must be at least 1");
    auto rng = sample_stream(seed, index, purpose);
    SampleDraw out;
    out.x0 = law.sample(rng);
    const std::size_t n = times.empty() ? 0 : times.size() - 1;
    out.brownian = RowMatrix::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(db));
    if (db == 0) return out;
    std::normal_distribution<double> normal;
    for (std::size_t i = 0; i < n; ++i) {
        const double sc = std::sqrt((times[i + 1] - times[i]) / static_cast<double>(refinement));
        for (std::size_t r = 0; r < refinement; ++r)
            for (std::size_t j = 0; j < db; ++j)
                out.brownian(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) += sc * normal(rng);
    }
    return out;
}

WeightedSamples theta_samples(const FilterModel& model, const EnhancedPath& driver, const TestFunction& f,
                              const ThetaOptions& options) {
    if (options.n_samples < 2) throw InvalidArgument("n_samples must be at least 2");
    if (driver.dim() != model.dy) throw DimensionMismatch("driver dimension differs from the model's d_Y");
    if (!f.f) throw InvalidArgument("test function is empty");
    const FilterSystem fs = build_filter_system(model);
    const RoughSdeSolver solver(fs.system, driver, options.flow);
    const std::size_t nxy = fs.layout.dx + fs.layout.dy;
    const auto ii = static_cast<Eigen::Index>(fs.layout.i_index());
    const std::size_t workers = std::max<std::size_t>(1, options.workers);

    // Without auxiliary noise every sample with the same atom follows the same path.
    std::vector<Vector> memo;
    if (model.db == 0 && fs.system.initial.is_atomic() && options.memoize_atoms) {
        FlowWorkspace ws;
        const RowMatrix none(static_cast<Eigen::Index>(driver.segments()), 0);
        for (const auto& p : fs.system.initial.points()) memo.push_back(solver.solve_terminal(none, p, ws));
    }

    WeightedSamples out;
    out.log_weight.resize(options.n_samples);
    out.value.resize(options.n_samples);
    std::vector<FlowWorkspace> spaces(workers);
    parallel_for(options.n_samples, workers, [&](std::size_t i, std::size_t w) {
        const SampleDraw draw = draw_sample(fs.system.initial, driver.times(), model.db, options.noise_refinement,
                                            options.seed, i, StreamPurpose::theta);
        const Vector s = memo.empty() ? solver.solve_terminal(draw.brownian, draw.x0.x, spaces[w]) : memo[draw.x0.atom];
        const double v = f({s.data(), nxy});
        if (!(std::abs(v) <= f.bound * (1.0 + 1e-12)))
            throw InvalidArgument("test function '" + f.name + "' exceeds its declared bound");
        out.log_weight[i] = s[ii];
        out.value[i] = v;
    });
    return out;
}

ThetaEstimate ratio_estimate(const WeightedSamples& samples, double offset) {
    const std::size_t n = samples.log_weight.size();
    if (n < 2 || samples.value.size() != n) throw InvalidArgument("ratio estimate needs at least two samples");
    std::vector<double> fw(n), w(n);
    for (std::size_t i = 0; i < n; ++i) {
        w[i] = std::exp(samples.log_weight[i] + offset);
        if (!std::isfinite(w[i]))
            throw NumericError("exp(I) overflows the double range at sample " + std::to_string(i));
        fw[i] = samples.value[i] * w[i];
    }
    const double dn = static_cast<double>(n);
    double sf = 0.0, sg = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sf += fw[i];
        sg += w[i];
    }
    const double mf = sf / dn, mg = sg / dn;
    if (!(mg > 0.0) || !std::isfinite(mg)) throw NumericError("g1 estimate is not positive");
    double vf = 0.0, vg = 0.0, cfg = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double a = fw[i] - mf, b = w[i] - mg;
        vf += a * a;
        vg += b * b;
        cfg += a * b;
    }
    vf /= dn - 1.0;
    vg /= dn - 1.0;
    cfg /= dn - 1.0;

    ThetaEstimate est;
    est.gf_mean = mf;
    est.g1_mean = mg;
    est.gf_stderr = std::sqrt(vf / dn);
    est.g1_stderr = std::sqrt(vg / dn);
    est.theta = mf / mg;
    const double var = (vf - 2.0 * est.theta * cfg + est.theta * est.theta * vg) / dn;
    est.theta_stderr = std::sqrt(std::max(0.0, var)) / mg;
    est.n_samples = n;
    return est;
}

ThetaEstimate evaluate_theta(const FilterModel& model, const EnhancedPath& driver, const TestFunction& f,
                             const ThetaOptions& options) {
    ThetaEstimate est = ratio_estimate(theta_samples(model, driver, f, options), options.log_weight_offset);
    est.seed = options.seed;
    est.grid_steps = driver.segments();
    est.horizon = driver.horizon();
    return est;
}

ContinuityTable continuity_probe(const FilterModel& model, const EnhancedPath& driver, const TestFunction& f,
                                 const std::vector<EnhancedPath>& perturbations, const ThetaOptions& options) {
    ContinuityTable table;
    table.base = evaluate_theta(model, driver, f, options);
    for (std::size_t i = 0; i < perturbations.size(); ++i) {
        ContinuityRow row;
        row.index = i;
        row.distance = holder_distance(driver, perturbations[i]);
        const ThetaEstimate e = evaluate_theta(model, perturbations[i], f, options);
        row.theta = e.theta;
        row.theta_stderr = e.theta_stderr;
        row.delta_theta = std::abs(e.theta - table.base.theta);
        if (row.distance > 0.0)
            row.ratio = row.delta_theta / row.distance;
        else
            row.ratio = row.delta_theta == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
        table.rows.push_back(row);
    }
    std::stable_sort(table.rows.begin(), table.rows.end(),
                     [](const ContinuityRow& a, const ContinuityRow& b) { return a.distance < b.distance; });
    return table;
}

}  // namespace rfilter
