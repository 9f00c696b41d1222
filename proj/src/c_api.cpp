#include "rfilter/rfilter.h"

#include "rfilter/catalog.hpp"
#include "rfilter/oracles.hpp"
#include "rfilter/robust_filter.hpp"
#include "rfilter/rough_path.hpp"

#include <cstdlib>
#include <cstring>
#include <new>
#include <sstream>
#include <string>

struct rf_path {
    rfilter::EnhancedPath path;
};

struct rf_model {
    rfilter::FilterModel model;
};

namespace {

thread_local std::string last_error;

rf_status to_status(rfilter::ErrorCode code) {
    switch (code) {
    case rfilter::ErrorCode::invalid_argument: return RF_INVALID_ARGUMENT;
    case rfilter::ErrorCode::dimension_mismatch: return RF_DIMENSION_MISMATCH;
    case rfilter::ErrorCode::parse: return RF_PARSE;
    case rfilter::ErrorCode::io: return RF_IO;
    case rfilter::ErrorCode::flow: return RF_FLOW;
    case rfilter::ErrorCode::numeric: return RF_NUMERIC;
    }
    return RF_INTERNAL;
}

template <class Fn>
rf_status guard(Fn&& fn) {
    try {
        fn();
        return RF_OK;
    } catch (const rfilter::Error& e) {
        last_error = e.what();
        return to_status(e.code());
    } catch (const std::bad_alloc&) {
        last_error = "out of memory";
        return RF_INTERNAL;
    } catch (const std::exception& e) {
        last_error = e.what();
        return RF_INTERNAL;
    } catch (...) {
        last_error = "unknown error";
        return RF_INTERNAL;
    }
}

void require(bool ok, const char* what) {
    if (!ok) throw rfilter::InvalidArgument(what);
}

rf_path* wrap(rfilter::EnhancedPath p) { return new rf_path{std::move(p)}; }

rfilter::RowMatrix matrix_from(const double* data, std::size_t rows, std::size_t cols) {
    rfilter::RowMatrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    if (rows * cols > 0) std::memcpy(m.data(), data, rows * cols * sizeof(double));
    return m;
}

rfilter::ThetaOptions theta_options(const rf_theta_options* o) {
    rfilter::ThetaOptions out;
    if (!o) return out;
    out.n_samples = o->n_samples;
    out.seed = o->seed;
    out.workers = o->workers == 0 ? 1 : o->workers;
    out.noise_refinement = o->noise_refinement == 0 ? 1 : o->noise_refinement;
    out.log_weight_offset = o->log_weight_offset;
    return out;
}

void fill(const rfilter::ThetaEstimate& e, rf_theta_result* out) {
    out->gf_mean = e.gf_mean;
    out->gf_stderr = e.gf_stderr;
    out->g1_mean = e.g1_mean;
    out->g1_stderr = e.g1_stderr;
    out->theta = e.theta;
    out->theta_stderr = e.theta_stderr;
    out->n_samples = e.n_samples;
    out->seed = e.seed;
    out->grid_steps = e.grid_steps;
    out->horizon = e.horizon;
}

rfilter::TestFunction test_function(const rfilter::FilterModel& m, const char* f_id) {
    require(f_id != nullptr, "test function id is null");
    return rfilter::builtin_test_function(f_id, m.dx, m.dy);
}

}  // namespace

extern "C" {

const char* rf_last_error(void) { return last_error.c_str(); }

const char* rf_status_name(rf_status status) {
    switch (status) {
    case RF_OK: return "ok";
    case RF_INVALID_ARGUMENT: return "invalid_argument";
    case RF_DIMENSION_MISMATCH: return "dimension_mismatch";
    case RF_PARSE: return "parse_error";
    case RF_IO: return "io_error";
    case RF_FLOW: return "flow_error";
    case RF_NUMERIC: return "numeric_error";
    case RF_INTERNAL: return "internal_error";
    }
    return "unknown";
}

rf_status rf_path_create(const double* times, size_t n, const double* values, size_t d, const double* areas,
                         double alpha, rf_path** out) {
    return guard([&] {
        require(times && values && out, "null argument");
        require(d >= 1, "path dimension must be positive");
        const std::size_t na = rfilter::area_count(d);
        rfilter::RowMatrix a = areas ? matrix_from(areas, n, na)
                                     : rfilter::RowMatrix::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(na));
        *out = wrap(rfilter::EnhancedPath(std::vector<double>(times, times + n), matrix_from(values, n, d), a, alpha));
    });
}

rf_status rf_path_lift(const double* times, size_t n, const double* values, size_t d, double alpha, rf_path** out) {
    return guard([&] {
        require(times && values && out, "null argument");
        require(d >= 1, "path dimension must be positive");
        *out = wrap(rfilter::lift_piecewise_linear(std::vector<double>(times, times + n), matrix_from(values, n, d), alpha));
    });
}

rf_status rf_path_read_csv(const char* file, double alpha, rf_path** out) {
    return guard([&] {
        require(file && out, "null argument");
        *out = wrap(rfilter::read_path_csv(std::string(file), alpha));
    });
}

rf_status rf_path_write_csv(const rf_path* path, const char* file) {
    return guard([&] {
        require(path && file, "null argument");
        rfilter::write_path_csv(std::string(file), path->path);
    });
}

rf_status rf_path_to_csv(const rf_path* path, char** out) {
    return guard([&] {
        require(path && out, "null argument");
        std::ostringstream ss;
        rfilter::write_path_csv(ss, path->path);
        const std::string s = ss.str();
        char* buf = static_cast<char*>(std::malloc(s.size() + 1));
        if (!buf) throw std::bad_alloc();
        std::memcpy(buf, s.c_str(), s.size() + 1);
        *out = buf;
    });
}

void rf_string_free(char* s) { std::free(s); }

rf_status rf_path_clone(const rf_path* path, rf_path** out) {
    return guard([&] {
        require(path && out, "null argument");
        *out = wrap(path->path);
    });
}

void rf_path_free(rf_path* path) { delete path; }

size_t rf_path_size(const rf_path* path) { return path ? path->path.size() : 0; }
size_t rf_path_dim(const rf_path* path) { return path ? path->path.dim() : 0; }
double rf_path_alpha(const rf_path* path) { return path ? path->path.alpha() : 0.0; }

rf_status rf_path_times(const rf_path* path, double* out) {
    return guard([&] {
        require(path && out, "null argument");
        std::copy(path->path.times().begin(), path->path.times().end(), out);
    });
}

rf_status rf_path_values(const rf_path* path, double* out) {
    return guard([&] {
        require(path && out, "null argument");
        const auto& v = path->path.values();
        std::copy(v.data(), v.data() + v.size(), out);
    });
}

rf_status rf_path_areas(const rf_path* path, double* out) {
    return guard([&] {
        require(path && out, "null argument");
        const auto& a = path->path.areas();
        std::copy(a.data(), a.data() + a.size(), out);
    });
}

int rf_path_equal(const rf_path* a, const rf_path* b) {
    if (!a || !b) return 0;
    return a->path == b->path ? 1 : 0;
}

rf_status rf_path_geodesic_interpolate(const rf_path* path, const double* times, size_t n, rf_path** out) {
    return guard([&] {
        require(path && times && out, "null argument");
        *out = wrap(rfilter::geodesic_interpolate(path->path, std::vector<double>(times, times + n)));
    });
}

rf_status rf_path_subsample(const rf_path* path, size_t stride, rf_path** out) {
    return guard([&] {
        require(path && out, "null argument");
        *out = wrap(rfilter::subsample(path->path, stride));
    });
}

rf_status rf_path_dilate(const rf_path* path, double lambda, rf_path** out) {
    return guard([&] {
        require(path && out, "null argument");
        *out = wrap(rfilter::dilate(path->path, lambda));
    });
}

rf_status rf_path_shift_area(const rf_path* path, size_t segment, size_t i, size_t j, double delta, rf_path** out) {
    return guard([&] {
        require(path && out, "null argument");
        *out = wrap(rfilter::shift_segment_area(path->path, segment, i, j, delta));
    });
}

rf_status rf_path_with_alpha(const rf_path* path, double alpha, rf_path** out) {
    return guard([&] {
        require(path && out, "null argument");
        *out = wrap(rfilter::with_alpha(path->path, alpha));
    });
}

rf_status rf_path_seminorms(const rf_path* path, int dyadic, rf_seminorms* out) {
    return guard([&] {
        require(path && out, "null argument");
        const auto s =
            rfilter::holder_seminorms(path->path, dyadic ? rfilter::PairMode::dyadic : rfilter::PairMode::all);
        *out = rf_seminorms{s.level1, s.level2, s.alpha, s.homogeneous()};
    });
}

rf_status rf_path_distance(const rf_path* a, const rf_path* b, double* out) {
    return guard([&] {
        require(a && b && out, "null argument");
        *out = rfilter::holder_distance(a->path, b->path);
    });
}

rf_status rf_spiral_driver(double horizon, size_t steps, double alpha, rf_path** out) {
    return guard([&] {
        require(out != nullptr, "null argument");
        *out = wrap(rfilter::spiral_driver(horizon, steps, alpha));
    });
}

size_t rf_builtin_model_count(void) { return rfilter::builtin_model_names().size(); }

const char* rf_builtin_model_name(size_t index) {
    static const std::vector<std::string> names = rfilter::builtin_model_names();
    return index < names.size() ? names[index].c_str() : nullptr;
}

rf_status rf_model_resolve(const char* id, rf_model** out) {
    return guard([&] {
        require(id && out, "null argument");
        *out = new rf_model{rfilter::resolve_model(id)};
    });
}

void rf_model_free(rf_model* model) { delete model; }

const char* rf_model_name(const rf_model* model) { return model ? model->model.name.c_str() : ""; }

void rf_model_dims(const rf_model* model, size_t* dx, size_t* dy, size_t* db) {
    if (dx) *dx = model ? model->model.dx : 0;
    if (dy) *dy = model ? model->model.dy : 0;
    if (db) *db = model ? model->model.db : 0;
}

int rf_model_correlated(const rf_model* model) { return model && model->model.correlated() ? 1 : 0; }

rf_theta_options rf_theta_options_default(void) {
    const rfilter::ThetaOptions d;
    return rf_theta_options{d.n_samples, d.seed, d.workers, d.noise_refinement, d.log_weight_offset};
}

rf_status rf_evaluate_theta(const rf_model* model, const rf_path* driver, const char* f_id,
                            const rf_theta_options* options, rf_theta_result* out) {
    return guard([&] {
        require(model && driver && out, "null argument");
        const auto f = test_function(model->model, f_id);
        fill(rfilter::evaluate_theta(model->model, driver->path, f, theta_options(options)), out);
    });
}

rf_status rf_continuity_probe(const rf_model* model, const rf_path* driver, const char* f_id,
                              const rf_path* const* perturbations, size_t count, const rf_theta_options* options,
                              rf_theta_result* base, rf_continuity_row* rows) {
    return guard([&] {
        require(model && driver && base && (count == 0 || (perturbations && rows)), "null argument");
        const auto f = test_function(model->model, f_id);
        std::vector<rfilter::EnhancedPath> list;
        for (std::size_t i = 0; i < count; ++i) {
            require(perturbations[i] != nullptr, "null perturbation");
            list.push_back(perturbations[i]->path);
        }
        const auto table = rfilter::continuity_probe(model->model, driver->path, f, list, theta_options(options));
        fill(table.base, base);
        for (std::size_t i = 0; i < table.rows.size(); ++i) {
            const auto& r = table.rows[i];
            rows[i] = rf_continuity_row{r.index, r.distance, r.theta, r.theta_stderr, r.delta_theta, r.ratio};
        }
    });
}

rf_status rf_particle_filter(const rf_model* model, const rf_path* observed, const char* f_id, size_t n_particles,
                             uint64_t seed, size_t workers, rf_particle_result* out) {
    return guard([&] {
        require(model && observed && out, "null argument");
        const auto f = test_function(model->model, f_id);
        rfilter::ParticleOptions o;
        o.n_particles = n_particles;
        o.seed = seed;
        o.workers = workers == 0 ? 1 : workers;
        const auto e = rfilter::particle_filter_estimate(model->model, observed->path, f, o);
        *out = rf_particle_result{e.estimate, e.stderr_, e.ess, e.ess_warning ? 1 : 0, e.n_particles, e.seed};
    });
}

rf_status rf_example_closed_form(const rf_model* model, const char* f_id, const rf_path* path, double* out) {
    return guard([&] {
        require(model && path && out, "null argument");
        const auto& m = model->model;
        if (m.dx != 1 || m.dy != 2) throw rfilter::DimensionMismatch("closed form needs d_X = 1 and d_Y = 2");
        const auto f = test_function(m, f_id);
        const rfilter::Vector y_end = path->path.value(path->path.size() - 1);
        auto fx = [&f, y_end](double x) {
            const double z[3] = {x, y_end[0], y_end[1]};
            return f({z, 3});
        };
        const rfilter::Field hm = m.h;
        const rfilter::Field hx(
            1, 2,
            [hm](std::span<const double> x, std::span<double> o) {
                const double z[3] = {x[0], 0.0, 0.0};
                hm.eval({z, 3}, o);
            },
            [hm](std::span<const double> x, std::span<double> o) {
                const double z[3] = {x[0], 0.0, 0.0};
                double j[6];
                hm.jacobian({z, 3}, j);
                o[0] = j[0];
                o[1] = j[3];
            });
        *out = rfilter::example_closed_form(fx, hx, path->path);
    });
}

rf_status rf_simulate(const rf_model* model, double horizon, size_t fine_steps, uint64_t seed, double alpha,
                      rf_path** observation, double* x_final) {
    return guard([&] {
        require(model && observation, "null argument");
        auto rec = rfilter::simulate_observation(model->model, horizon, fine_steps, seed, alpha);
        if (x_final) std::copy(rec.x_final.data(), rec.x_final.data() + rec.x_final.size(), x_final);
        *observation = wrap(std::move(rec.path));
    });
}

}  // extern "C"
