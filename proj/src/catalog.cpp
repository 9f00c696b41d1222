#include "rfilter/catalog.hpp"
#include "rfilter/expression.hpp"

#include "json.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>

namespace rfilter {

namespace {

using json = nlohmann::json;

// Field of z = (x, y) whose value and Jacobian depend on x1 only.
Field scalar_field(std::size_t n, std::size_t m, std::function<void(double, double*)> value,
                   std::function<void(double, double*)> dvalue) {
    auto jac = [dvalue, n, m](std::span<const double> z, std::span<double> out) {
        std::fill(out.begin(), out.end(), 0.0);
        double d[8];
        dvalue(z[0], d);
        for (std::size_t i = 0; i < m; ++i) out[i * n] = d[i];
    };
    return Field(
        n, m, [value](std::span<const double> z, std::span<double> out) { value(z[0], out.data()); }, jac);
}

// Last evaluations per thread, keyed by field instance. Flows of uncorrelated models keep x
// fixed, so the same scalar is evaluated many times in a row.
struct ScalarMemo {
    std::uint64_t id = 0;
    double x = 0.0;
    bool has_derivative = false;
    double value[8];
    double derivative[8];
};

ScalarMemo& scalar_memo(std::uint64_t id) {
    thread_local ScalarMemo slots[4];
    return slots[id % 4];
}

// Same, plus a fused value-and-derivative map for callers needing both.
Field scalar_field_both(std::size_t n, std::size_t m, std::function<void(double, double*)> value,
                        std::function<void(double, double*, double*)> both) {
    static std::atomic<std::uint64_t> next_id{1};
    const std::uint64_t id = next_id++;
    auto lookup = [both, id, m](double x, bool need_derivative) -> const ScalarMemo& {
        ScalarMemo& memo = scalar_memo(id);
        if (memo.id == id && memo.x == x && (memo.has_derivative || !need_derivative)) return memo;
        both(x, memo.value, memo.derivative);
        memo.id = id;
        memo.x = x;
        memo.has_derivative = true;
        return memo;
    };
    auto val = [value, id, m](std::span<const double> z, std::span<double> out) {
        const ScalarMemo& memo = scalar_memo(id);
        if (memo.id == id && memo.x == z[0]) {
            std::copy_n(memo.value, m, out.begin());
            return;
        }
        value(z[0], out.data());
    };
    auto jac = [lookup, n, m](std::span<const double> z, std::span<double> out) {
        const ScalarMemo& memo = lookup(z[0], true);
        std::fill(out.begin(), out.end(), 0.0);
        for (std::size_t i = 0; i < m; ++i) out[i * n] = memo.derivative[i];
    };
    auto fused = [lookup, n, m](std::span<const double> z, std::span<double> v, std::span<double> out) {
        const ScalarMemo& memo = lookup(z[0], true);
        std::copy_n(memo.value, m, v.begin());
        std::fill(out.begin(), out.end(), 0.0);
        for (std::size_t i = 0; i < m; ++i) out[i * n] = memo.derivative[i];
    };
    return Field(n, m, val, jac, fused);
}

Field constant_field(std::size_t n, double v) { return Field::constant(n, Vector::Constant(1, v)); }

InitialLaw unit_box() { return InitialLaw::box(Vector::Constant(1, -1.0), Vector::Constant(1, 1.0)); }

FilterModel example_s1() {
    FilterModel m;
    m.name = "example_s1";
    m.dx = 1;
    m.dy = 2;
    m.db = 0;
    m.h = scalar_field_both(
        3, 2, [](double x, double* o) { o[0] = o[1] = std::tanh(x); },
        [](double x, double* o, double* d) {
            const double t = std::tanh(x);
            o[0] = o[1] = t;
            d[0] = d[1] = 1.0 - t * t;
        });
    const Field zk = scalar_field(
        3, 1, [](double x, double* o) { o[0] = x; }, [](double, double* o) { o[0] = 1.0; });
    m.z = {zk, zk};
    // X = X0 exp(Y1 + Y2): Ito drift under the reference measure is x.
    m.drift = zk;
    m.drift_form = DriftForm::ito;
    m.x0 = InitialLaw::atoms({Vector::Constant(1, 0.0), Vector::Constant(1, 1.0)}, {0.5, 0.5});
    m.h_bound = 1.0;
    return m;
}

FilterModel uncorrelated_1d() {
    FilterModel m;
    m.name = "uncorrelated_1d";
    m.dx = 1;
    m.dy = 2;
    m.db = 1;
    m.h = scalar_field_both(
        3, 2,
        [](double x, double* o) {
            o[0] = std::tanh(x);
            o[1] = 0.5 * std::sin(x);
        },
        [](double x, double* o, double* d) {
            const double t = std::tanh(x);
            o[0] = t;
            o[1] = 0.5 * std::sin(x);
            d[0] = 1.0 - t * t;
            d[1] = 0.5 * std::cos(x);
        });
    m.drift = scalar_field(
        3, 1, [](double x, double* o) { o[0] = -x; }, [](double, double* o) { o[0] = -1.0; });
    m.l = {constant_field(3, 0.6)};
    m.x0 = unit_box();
    m.h_bound = 1.0;
    return m;
}

FilterModel correlated_linear() {
    FilterModel m;
    m.name = "correlated_linear";
    m.dx = 1;
    m.dy = 1;
    m.db = 1;
    m.h = scalar_field(
        2, 1, [](double x, double* o) { o[0] = x; }, [](double, double* o) { o[0] = 1.0; });
    m.z = {constant_field(2, 0.5)};
    m.drift = scalar_field(
        2, 1, [](double x, double* o) { o[0] = -x; }, [](double, double* o) { o[0] = -1.0; });
    m.l = {constant_field(2, 0.5)};
    m.x0 = unit_box();
    return m;
}

FilterModel correlated_2obs() {
    FilterModel m;
    m.name = "correlated_2obs";
    m.dx = 1;
    m.dy = 2;
    m.db = 1;
    m.h = scalar_field_both(
        3, 2,
        [](double x, double* o) {
            o[0] = std::tanh(x);
            o[1] = 0.5 * std::sin(x);
        },
        [](double x, double* o, double* d) {
            const double t = std::tanh(x);
            o[0] = t;
            o[1] = 0.5 * std::sin(x);
            d[0] = 1.0 - t * t;
            d[1] = 0.5 * std::cos(x);
        });
    m.z = {scalar_field_both(
               3, 1, [](double x, double* o) { o[0] = 0.6 * std::cos(x); },
               [](double x, double* o, double* d) {
                   o[0] = 0.6 * std::cos(x);
                   d[0] = -0.6 * std::sin(x);
               }),
           scalar_field_both(
               3, 1, [](double x, double* o) { o[0] = 0.4 * std::sin(x) + 0.3; },
               [](double x, double* o, double* d) {
                   o[0] = 0.4 * std::sin(x) + 0.3;
                   d[0] = 0.4 * std::cos(x);
               })};
    m.drift = scalar_field(
        3, 1, [](double x, double* o) { o[0] = -0.5 * x; }, [](double, double* o) { o[0] = -0.5; });
    m.l = {constant_field(3, 0.5)};
    m.x0 = unit_box();
    m.h_bound = 1.0;
    return m;
}

struct Symbols {
    std::vector<std::string> names;
    std::vector<std::pair<std::string, std::size_t>> aliases;
};

Symbols symbols(std::size_t dx, std::size_t dy) {
    Symbols s;
    for (std::size_t i = 0; i < dx; ++i) s.names.push_back("x" + std::to_string(i + 1));
    for (std::size_t k = 0; k < dy; ++k) s.names.push_back("y" + std::to_string(k + 1));
    if (dx == 1) s.aliases.emplace_back("x", 0);
    if (dy == 1) s.aliases.emplace_back("y", dx);
    return s;
}

std::size_t get_dim(const json& j, const char* key, bool required = true) {
    if (!j.contains(key)) {
        if (required) throw ParseError(std::string("model spec is missing '") + key + "'");
        return 0;
    }
    const json& v = j.at(key);
    if (!v.is_number_integer() || v.get<long long>() < 0)
        throw ParseError(std::string("model spec '") + key + "' must be a non-negative integer");
    return v.get<std::size_t>();
}

Field expr_field(const json& arr, std::size_t count, const Symbols& sym, const std::string& what) {
    if (!arr.is_array() || arr.size() != count)
        throw DimensionMismatch(what + " needs " + std::to_string(count) + " expressions");
    std::vector<Expression> comps;
    for (const auto& e : arr) {
        if (e.is_number())
            comps.push_back(Expression::constant(e.get<double>()));
        else if (e.is_string())
            comps.push_back(Expression::parse(e.get<std::string>(), sym.names, sym.aliases));
        else
            throw ParseError(what + " entries must be strings or numbers");
    }
    return expression_field(comps, sym.names.size());
}

std::vector<Field> expr_columns(const json& arr, std::size_t cols, std::size_t rows, const Symbols& sym,
                                const std::string& what) {
    if (!arr.is_array() || arr.size() != cols)
        throw DimensionMismatch(what + " needs " + std::to_string(cols) + " columns");
    std::vector<Field> out;
    for (std::size_t c = 0; c < cols; ++c)
        out.push_back(expr_field(arr[c], rows, sym, what + " column " + std::to_string(c + 1)));
    return out;
}

Vector vec(const json& j, std::size_t dim, const std::string& what) {
    if (!j.is_array() || j.size() != dim) throw DimensionMismatch(what + " needs " + std::to_string(dim) + " entries");
    Vector v(static_cast<Eigen::Index>(dim));
    for (std::size_t i = 0; i < dim; ++i) v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
    return v;
}

InitialLaw parse_law(const json& j, std::size_t dx) {
    if (j.contains("point")) return InitialLaw::point(vec(j.at("point"), dx, "x0.point"));
    if (j.contains("atoms")) {
        std::vector<Vector> pts;
        for (const auto& a : j.at("atoms")) pts.push_back(vec(a, dx, "x0 atom"));
        std::vector<double> w;
        if (j.contains("weights"))
            w = j.at("weights").get<std::vector<double>>();
        else
            w.assign(pts.size(), 1.0);
        return InitialLaw::atoms(std::move(pts), std::move(w));
    }
    if (j.contains("box")) {
        const json& b = j.at("box");
        return InitialLaw::box(vec(b.at("lo"), dx, "x0.box.lo"), vec(b.at("hi"), dx, "x0.box.hi"));
    }
    throw ParseError("x0 needs one of 'point', 'atoms' or 'box'");
}

}  // namespace

std::vector<std::string> builtin_model_names() {
    return {"example_s1", "uncorrelated_1d", "correlated_linear", "correlated_2obs"};
}

FilterModel builtin_model(const std::string& name) {
    FilterModel m;
    if (name == "example_s1")
        m = example_s1();
    else if (name == "uncorrelated_1d")
        m = uncorrelated_1d();
    else if (name == "correlated_linear")
        m = correlated_linear();
    else if (name == "correlated_2obs")
        m = correlated_2obs();
    else
        throw InvalidArgument("unknown model '" + name + "'");
    m.validate();
    return m;
}

FilterModel model_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ParseError(std::string("model spec is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw ParseError("model spec must be a JSON object");
    try {
        FilterModel m;
        m.name = j.value("name", std::string("inline"));
        m.dx = get_dim(j, "dx");
        m.dy = get_dim(j, "dy");
        m.db = get_dim(j, "db", false);
        if (m.dx == 0 || m.dy == 0) throw DimensionMismatch("model needs dx >= 1 and dy >= 1");
        const Symbols sym = symbols(m.dx, m.dy);
        m.h = expr_field(j.at("h"), m.dy, sym, "h");
        if (j.contains("Z") && !j.at("Z").is_null()) m.z = expr_columns(j.at("Z"), m.dy, m.dx, sym, "Z");
        m.drift = expr_field(j.at("drift"), m.dx, sym, "drift");
        const std::string form = j.value("drift_form", std::string("ito"));
        if (form == "ito")
            m.drift_form = DriftForm::ito;
        else if (form == "stratonovich")
            m.drift_form = DriftForm::stratonovich;
        else
            throw ParseError("drift_form must be 'ito' or 'stratonovich'");
        if (m.db > 0) m.l = expr_columns(j.at("L"), m.db, m.dx, sym, "L");
        m.x0 = parse_law(j.at("x0"), m.dx);
        if (j.contains("h_bound")) m.h_bound = j.at("h_bound").get<double>();
        m.validate();
        return m;
    } catch (const json::exception& e) {
        throw ParseError(std::string("model spec: ") + e.what());
    }
}

FilterModel resolve_model(const std::string& id) {
    const auto p = id.find_first_not_of(" \t\r\n");
    if (p != std::string::npos && id[p] == '{') return model_from_json(id);
    return builtin_model(id);
}

TestFunction builtin_test_function(const std::string& id, std::size_t dx, std::size_t dy) {
    TestFunction t;
    t.name = id;
    if (id == "one") {
        t.f = [](std::span<const double>) { return 1.0; };
        t.bound = 1.0;
        t.lipschitz = 0.0;
    } else if (id == "zero") {
        t.f = [](std::span<const double>) { return 0.0; };
        t.bound = 0.0;
        t.lipschitz = 0.0;
    } else if (id == "tanh") {
        t.f = [](std::span<const double> z) { return std::tanh(z[0]); };
        t.bound = 1.0;
        t.lipschitz = 1.0;
    } else if (id == "sin") {
        t.f = [](std::span<const double> z) { return std::sin(z[0]); };
        t.bound = 1.0;
        t.lipschitz = 1.0;
    } else if (id.rfind("expr:", 0) == 0) {
        const Symbols sym = symbols(dx, dy);
        const Expression e = Expression::parse(id.substr(5), sym.names, sym.aliases);
        t.f = [e](std::span<const double> z) { return e.eval(z); };
    } else {
        throw InvalidArgument("unknown test function '" + id + "'");
    }
    return t;
}

}  // namespace rfilter
