// rfilter command-line harness. Talks to the library through the C API only.

#include "rfilter/rfilter.h"

#include "CLI11.hpp"
#include "json.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace {

using json = nlohmann::ordered_json;

struct CliError : std::runtime_error {
    CliError(std::string code_, const std::string& msg, int exit_ = 2)
        : std::runtime_error(msg), code(std::move(code_)), exit_code(exit_) {}
    std::string code;
    int exit_code;
};

void check(rf_status st) {
    if (st != RF_OK) throw CliError(rf_status_name(st), rf_last_error(), static_cast<int>(st));
}

struct PathDeleter {
    void operator()(rf_path* p) const { rf_path_free(p); }
};
struct ModelDeleter {
    void operator()(rf_model* m) const { rf_model_free(m); }
};
using PathPtr = std::unique_ptr<rf_path, PathDeleter>;
using ModelPtr = std::unique_ptr<rf_model, ModelDeleter>;

PathPtr take(rf_path* p) { return PathPtr(p); }

std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string read_file(const std::string& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw CliError("io_error", "cannot open '" + file + "'", RF_IO);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

struct Config {
    std::string model = "example_s1";
    std::string path;
    std::string driver = "simulate";
    double alpha = 0.4;
    std::size_t grid = 256;
    std::size_t samples = 1000;
    std::uint64_t seed = 0;
    bool seed_given = false;
    std::uint64_t driver_seed = 0;
    bool driver_seed_given = false;
    std::string f = "tanh";
    std::string out;
    std::size_t workers = 1;
    double horizon = 1.0;
    std::size_t fine_steps = 16384;
    std::size_t particles = 2000;
    std::vector<double> deltas{1e-1, 1e-2, 1e-3};
    std::string perturbation = "scale";
    std::vector<std::size_t> levels{6, 7, 8, 9, 10};
};

std::string model_text(const Config& c) {
    if (!c.model.empty() && c.model[0] == '@') return read_file(c.model.substr(1));
    return c.model;
}

json model_echo(const std::string& text) {
    const auto p = text.find_first_not_of(" \t\r\n");
    if (p != std::string::npos && text[p] == '{') {
        try {
            return json::parse(text);
        } catch (const json::exception& e) {
            throw CliError("parse_error", std::string("model spec is not valid JSON: ") + e.what(), RF_PARSE);
        }
    }
    return text;
}

void resolve_seeds(Config& c) {
    if (!c.seed_given) {
        if (const char* env = std::getenv("RFILTER_SEED"); env && *env) {
            char* end = nullptr;
            c.seed = std::strtoull(env, &end, 10);
            if (*end != '\0') throw CliError("invalid_argument", "RFILTER_SEED must be an unsigned integer", RF_INVALID_ARGUMENT);
        }
    }
    if (!c.driver_seed_given) c.driver_seed = c.seed;
}

/// Fine driver before grid selection: CSV, simulated record, or smooth spiral.
PathPtr fine_driver(const Config& c, const rf_model* model) {
    rf_path* p = nullptr;
    if (!c.path.empty()) {
        check(rf_path_read_csv(c.path.c_str(), c.alpha, &p));
    } else if (c.driver == "simulate") {
        check(rf_simulate(model, c.horizon, c.fine_steps, c.driver_seed, c.alpha, &p, nullptr));
    } else if (c.driver == "spiral") {
        check(rf_spiral_driver(c.horizon, c.fine_steps, c.alpha, &p));
    } else {
        throw CliError("invalid_argument", "unknown driver '" + c.driver + "'", RF_INVALID_ARGUMENT);
    }
    return take(p);
}

/// Driver on `grid` steps: exact subsampling or geodesic refinement of the fine path.
PathPtr on_grid(const rf_path* fine, std::size_t grid) {
    rf_path* p = nullptr;
    const std::size_t segs = rf_path_size(fine) - 1;
    if (grid == 0 || grid == segs) {
        check(rf_path_clone(fine, &p));
    } else if (segs % grid == 0) {
        check(rf_path_subsample(fine, segs / grid, &p));
    } else if (grid % segs == 0) {
        std::vector<double> t(segs + 1);
        check(rf_path_times(fine, t.data()));
        std::vector<double> q(grid + 1);
        const std::size_t r = grid / segs;
        for (std::size_t k = 0; k < segs; ++k)
            for (std::size_t s = 0; s < r; ++s)
                q[k * r + s] = t[k] + (t[k + 1] - t[k]) * static_cast<double>(s) / static_cast<double>(r);
        q[grid] = t[segs];
        check(rf_path_geodesic_interpolate(fine, q.data(), q.size(), &p));
    } else {
        throw CliError("invalid_argument",
                       "grid " + std::to_string(grid) + " is not a divisor or multiple of the driver's " +
                           std::to_string(segs) + " segments",
                       RF_INVALID_ARGUMENT);
    }
    return take(p);
}

json base_config(const Config& c, const std::string& command, const std::string& mtext) {
    json j;
    j["command"] = command;
    j["model"] = model_echo(mtext);
    if (!c.path.empty())
        j["path"] = c.path;
    else {
        j["driver"] = c.driver;
        if (c.driver == "simulate") j["driver_seed"] = c.driver_seed;
        j["horizon"] = c.horizon;
        j["fine_steps"] = c.fine_steps;
    }
    j["alpha"] = c.alpha;
    j["grid"] = c.grid;
    j["samples"] = c.samples;
    j["seed"] = c.seed;
    j["f"] = c.f;
    return j;
}

rf_theta_options theta_opts(const Config& c) {
    rf_theta_options o = rf_theta_options_default();
    o.n_samples = c.samples;
    o.seed = c.seed;
    o.workers = c.workers;
    return o;
}

json theta_json(const rf_theta_result& r) {
    json j;
    j["gf_mean"] = r.gf_mean;
    j["gf_stderr"] = r.gf_stderr;
    j["g1_mean"] = r.g1_mean;
    j["g1_stderr"] = r.g1_stderr;
    j["theta"] = r.theta;
    j["theta_stderr"] = r.theta_stderr;
    j["n_samples"] = r.n_samples;
    j["seed"] = r.seed;
    j["grid_steps"] = r.grid_steps;
    j["horizon"] = r.horizon;
    return j;
}

void emit(const Config& c, const std::string& payload) {
    if (c.out.empty()) {
        std::cout << payload;
        std::cout.flush();
        return;
    }
    std::ofstream f(c.out, std::ios::binary);
    if (!f) throw CliError("io_error", "cannot write '" + c.out + "'", RF_IO);
    f << payload;
    if (!f) throw CliError("io_error", "failed writing '" + c.out + "'", RF_IO);
}

ModelPtr load_model(const std::string& text) {
    rf_model* m = nullptr;
    check(rf_model_resolve(text.c_str(), &m));
    return ModelPtr(m);
}

void cmd_lift(const Config& c) {
    if (c.path.empty()) throw CliError("invalid_argument", "lift needs --path", RF_INVALID_ARGUMENT);
    rf_path* raw = nullptr;
    check(rf_path_read_csv(c.path.c_str(), c.alpha, &raw));
    PathPtr in = take(raw);
    const std::size_t n = rf_path_size(in.get()), d = rf_path_dim(in.get());
    std::vector<double> t(n), v(n * d);
    check(rf_path_times(in.get(), t.data()));
    check(rf_path_values(in.get(), v.data()));
    check(rf_path_lift(t.data(), n, v.data(), d, c.alpha, &raw));
    PathPtr lifted = take(raw);
    char* csv = nullptr;
    check(rf_path_to_csv(lifted.get(), &csv));
    const std::string s(csv);
    rf_string_free(csv);
    emit(c, s);
}

void cmd_theta(const Config& c) {
    const std::string mtext = model_text(c);
    ModelPtr model = load_model(mtext);
    PathPtr fine = fine_driver(c, model.get());
    PathPtr driver = on_grid(fine.get(), c.grid);
    const rf_theta_options o = theta_opts(c);
    rf_theta_result r{};
    check(rf_evaluate_theta(model.get(), driver.get(), c.f.c_str(), &o, &r));
    json j;
    j["config"] = base_config(c, "theta", mtext);
    j["result"] = theta_json(r);
    emit(c, j.dump(2) + "\n");
}

void cmd_compare(const Config& c) {
    const std::string mtext = model_text(c);
    ModelPtr model = load_model(mtext);
    PathPtr fine = fine_driver(c, model.get());
    PathPtr driver = on_grid(fine.get(), c.grid);
    const rf_theta_options o = theta_opts(c);
    rf_theta_result r{};
    check(rf_evaluate_theta(model.get(), driver.get(), c.f.c_str(), &o, &r));
    rf_particle_result pf{};
    check(rf_particle_filter(model.get(), fine.get(), c.f.c_str(), c.particles, c.seed, c.workers, &pf));

    json cfg = base_config(c, "compare", mtext);
    cfg["particles"] = c.particles;
    json j;
    j["config"] = cfg;
    j["theta"] = theta_json(r);
    json p;
    p["estimate"] = pf.estimate;
    p["stderr"] = pf.stderr_;
    p["ess"] = pf.ess;
    p["ess_warning"] = pf.ess_warning != 0;
    p["n_particles"] = pf.n_particles;
    p["seed"] = pf.seed;
    j["pf"] = p;
    json z;
    z["theta_vs_pf"] = (r.theta - pf.estimate) / std::hypot(r.theta_stderr, pf.stderr_);
    // The closed form only applies to the scalar exponential model along smooth drivers.
    const bool closed = std::string(rf_model_name(model.get())) == "example_s1" && (!c.path.empty() || c.driver == "spiral");
    if (closed) {
        double cf = 0.0;
        check(rf_example_closed_form(model.get(), c.f.c_str(), fine.get(), &cf));
        j["closed_form"] = cf;
        z["theta_vs_closed_form"] = (r.theta - cf) / r.theta_stderr;
        z["pf_vs_closed_form"] = (pf.estimate - cf) / pf.stderr_;
    } else {
        j["closed_form"] = nullptr;
    }
    j["z_scores"] = z;
    emit(c, j.dump(2) + "\n");
}

void cmd_continuity(const Config& c) {
    const std::string mtext = model_text(c);
    ModelPtr model = load_model(mtext);
    PathPtr fine = fine_driver(c, model.get());
    PathPtr driver = on_grid(fine.get(), c.grid);
    const std::size_t segs = rf_path_size(driver.get()) - 1;
    if (c.perturbation == "area" && rf_path_dim(driver.get()) < 2)
        throw CliError("invalid_argument", "area perturbation needs a driver of dimension >= 2", RF_INVALID_ARGUMENT);

    std::vector<PathPtr> perturbed;
    for (double d : c.deltas) {
        rf_path* p = nullptr;
        if (c.perturbation == "scale")
            check(rf_path_dilate(driver.get(), 1.0 + d, &p));
        else if (c.perturbation == "area")
            check(rf_path_shift_area(driver.get(), segs / 2, 0, 1, d, &p));
        else
            throw CliError("invalid_argument", "perturbation must be 'scale' or 'area'", RF_INVALID_ARGUMENT);
        perturbed.push_back(take(p));
    }
    std::vector<const rf_path*> list;
    for (const auto& p : perturbed) list.push_back(p.get());
    const rf_theta_options o = theta_opts(c);
    rf_theta_result base{};
    std::vector<rf_continuity_row> rows(list.size());
    check(rf_continuity_probe(model.get(), driver.get(), c.f.c_str(), list.data(), list.size(), &o, &base, rows.data()));

    json cfg = base_config(c, "continuity", mtext);
    cfg["perturbation"] = c.perturbation;
    cfg["deltas"] = c.deltas;
    std::ostringstream ss;
    ss << "# config: " << cfg.dump() << "\n";
    ss << "# base: theta=" << num(base.theta) << " theta_stderr=" << num(base.theta_stderr) << "\n";
    ss << "index,delta,distance,theta,theta_stderr,delta_theta,ratio\n";
    for (const auto& r : rows)
        ss << r.index << "," << num(c.deltas[r.index]) << "," << num(r.distance) << "," << num(r.theta) << ","
           << num(r.theta_stderr) << "," << num(r.delta_theta) << "," << num(r.ratio) << "\n";
    emit(c, ss.str());
}

void cmd_convergence(const Config& c) {
    const std::string mtext = model_text(c);
    ModelPtr model = load_model(mtext);
    PathPtr fine = fine_driver(c, model.get());
    if (c.levels.empty()) throw CliError("invalid_argument", "convergence needs --levels", RF_INVALID_ARGUMENT);
    std::size_t top = 0;
    for (auto l : c.levels) {
        if (l > 30) throw CliError("invalid_argument", "levels must be at most 30", RF_INVALID_ARGUMENT);
        top = std::max(top, l);
    }
    const std::size_t finest = std::size_t{1} << top;

    struct Row {
        std::size_t level;
        rf_theta_result r;
    };
    std::vector<Row> rows;
    for (auto l : c.levels) {
        const std::size_t steps = std::size_t{1} << l;
        PathPtr driver = on_grid(fine.get(), steps);
        rf_theta_options o = theta_opts(c);
        // Same Brownian draws on every mesh: each coarse step sums the finest sub-increments.
        o.noise_refinement = finest / steps;
        rf_theta_result r{};
        check(rf_evaluate_theta(model.get(), driver.get(), c.f.c_str(), &o, &r));
        rows.push_back({l, r});
    }
    double ref = 0.0;
    for (const auto& r : rows)
        if (r.level == top) ref = r.r.theta;

    json cfg = base_config(c, "convergence", mtext);
    cfg.erase("grid");
    cfg["levels"] = c.levels;
    std::ostringstream ss;
    ss << "# config: " << cfg.dump() << "\n";
    ss << "level,steps,theta,theta_stderr,diff_to_finest\n";
    for (const auto& r : rows)
        ss << r.level << "," << (std::size_t{1} << r.level) << "," << num(r.r.theta) << "," << num(r.r.theta_stderr)
           << "," << num(std::abs(r.r.theta - ref)) << "\n";
    emit(c, ss.str());
}

void cmd_simulate(const Config& c) {
    const std::string mtext = model_text(c);
    ModelPtr model = load_model(mtext);
    std::size_t dx = 0;
    rf_model_dims(model.get(), &dx, nullptr, nullptr);
    std::vector<double> xf(dx);
    rf_path* raw = nullptr;
    check(rf_simulate(model.get(), c.horizon, c.fine_steps, c.seed, c.alpha, &raw, xf.data()));
    PathPtr obs = take(raw);
    char* csv = nullptr;
    check(rf_path_to_csv(obs.get(), &csv));
    const std::string s(csv);
    rf_string_free(csv);
    if (c.out.empty()) {
        std::cout << s;
        return;
    }
    emit(c, s);
    json j;
    json cfg;
    cfg["command"] = "simulate";
    cfg["model"] = model_echo(mtext);
    cfg["horizon"] = c.horizon;
    cfg["fine_steps"] = c.fine_steps;
    cfg["alpha"] = c.alpha;
    cfg["seed"] = c.seed;
    j["config"] = cfg;
    j["x_final"] = xf;
    j["out"] = c.out;
    std::cout << j.dump(2) << "\n";
}

void print_error(const std::string& code, const std::string& message) {
    json j;
    j["error"]["code"] = code;
    j["error"]["message"] = message;
    std::cerr << j.dump() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Robust filtering for correlated-noise systems driven by lifted observation paths"};
    app.require_subcommand(1);
    Config c;

    auto add_common = [&c](CLI::App* s) {
        s->add_option("--model", c.model, "Builtin model name, inline JSON spec, or @file.json");
        s->add_option("--path", c.path, "Driver path CSV (t,y1..[,a12..])");
        s->add_option("--driver", c.driver, "Driver source without --path: simulate | spiral");
        s->add_option("--alpha", c.alpha, "Holder exponent in (1/3, 1/2)");
        s->add_option("--grid", c.grid, "Driver grid steps (divisor or multiple of the fine path's segments; 0 keeps it)");
        s->add_option("--samples", c.samples, "Monte Carlo samples");
        s->add_option("--seed", c.seed, "RNG seed (falls back to RFILTER_SEED)")->each([&c](const std::string&) {
            c.seed_given = true;
        });
        s->add_option("--driver-seed", c.driver_seed, "Seed of the simulated driver (defaults to --seed)")
            ->each([&c](const std::string&) { c.driver_seed_given = true; });
        s->add_option("--f", c.f, "Test function: one | zero | tanh | sin | expr:<expression>");
        s->add_option("--out", c.out, "Output file (stdout when absent)");
        s->add_option("--workers", c.workers, "Worker threads; results do not depend on it");
        s->add_option("--horizon", c.horizon, "Horizon of simulated or spiral drivers");
        s->add_option("--fine-steps", c.fine_steps, "Steps of simulated or spiral drivers");
    };

    auto* lift = app.add_subcommand("lift", "Lift a sampled path CSV to its piecewise-linear rough path");
    lift->add_option("--path", c.path, "Input CSV")->required();
    lift->add_option("--alpha", c.alpha, "Holder exponent");
    lift->add_option("--out", c.out, "Output CSV");
    lift->add_option("--workers", c.workers, "Accepted for uniformity; lifting is sequential");

    auto* theta = app.add_subcommand("theta", "Estimate the robust filter for one driver");
    add_common(theta);
    auto* compare = app.add_subcommand("compare", "Compare the robust filter with the particle filter and closed form");
    add_common(compare);
    compare->add_option("--particles", c.particles, "Particle count");
    auto* continuity = app.add_subcommand("continuity", "Probe the filter under driver perturbations");
    add_common(continuity);
    continuity->add_option("--deltas", c.deltas, "Perturbation sizes")->delimiter(',');
    continuity->add_option("--perturbation", c.perturbation, "scale | area");
    auto* convergence = app.add_subcommand("convergence", "Self-convergence over dyadic driver meshes");
    add_common(convergence);
    convergence->add_option("--levels", c.levels, "Mesh levels m (2^m steps)")->delimiter(',');
    auto* simulate = app.add_subcommand("simulate", "Simulate an observation record and write its lift");
    simulate->add_option("--model", c.model, "Builtin model name, inline JSON spec, or @file.json");
    simulate->add_option("--seed", c.seed, "RNG seed (falls back to RFILTER_SEED)")->each([&c](const std::string&) {
        c.seed_given = true;
    });
    simulate->add_option("--alpha", c.alpha, "Holder exponent");
    simulate->add_option("--horizon", c.horizon, "Horizon");
    simulate->add_option("--fine-steps", c.fine_steps, "Euler steps");
    simulate->add_option("--out", c.out, "Output CSV");
    simulate->add_option("--workers", c.workers, "Accepted for uniformity; simulation is sequential");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        print_error("usage", e.what());
        return 2;
    }

    try {
        resolve_seeds(c);
        if (*lift) cmd_lift(c);
        else if (*theta) cmd_theta(c);
        else if (*compare) cmd_compare(c);
        else if (*continuity) cmd_continuity(c);
        else if (*convergence) cmd_convergence(c);
        else if (*simulate) cmd_simulate(c);
    } catch (const CliError& e) {
        print_error(e.code, e.what());
        return e.exit_code;
    } catch (const std::exception& e) {
        print_error("internal_error", e.what());
        return RF_INTERNAL;
    }
    return 0;
}
