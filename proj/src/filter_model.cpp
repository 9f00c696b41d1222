#include "rfilter/filter_model.hpp"

#include <algorithm>
#include <cmath>

namespace rfilter {

namespace {

void check_field(const Field& f, std::size_t in, std::size_t out, const std::string& what) {
    if (f.empty() || f.in_dim() != in || f.out_dim() != out)
        throw DimensionMismatch(what + " has dimensions " + std::to_string(f.in_dim()) + "->" +
                                std::to_string(f.out_dim()) + ", expected " + std::to_string(in) + "->" +
                                std::to_string(out));
}

// sum_k (sum_i d_{x_i} Z_k^j Z_k^i + d_{y_k} Z_k^j), per component j
Field drift_correction(const Field& base, const std::vector<Field>& z, std::size_t dx, std::size_t dy, double sign) {
    if (z.empty()) return base;
    const std::size_t n = dx + dy;
    return Field(n, dx, [base, z, dx, n, sign](std::span<const double> arg, std::span<double> out) {
        std::vector<double> zk(dx), jac(dx * n), corr(dx, 0.0);
        for (std::size_t k = 0; k < z.size(); ++k) {
            z[k].eval(arg, zk);
            z[k].jacobian(arg, jac);
            for (std::size_t j = 0; j < dx; ++j) {
                double s = 0.0;
                for (std::size_t i = 0; i < dx; ++i) s += jac[j * n + i] * zk[i];
                corr[j] += s + jac[j * n + dx + k];
            }
        }
        base.eval(arg, out);
        for (std::size_t j = 0; j < dx; ++j) out[j] += sign * 0.5 * corr[j];
    });
}

}  // namespace

void FilterModel::validate() const {
    if (dx == 0 || dy == 0) throw DimensionMismatch("model needs d_X >= 1 and d_Y >= 1");
    const std::size_t n = dx + dy;
    check_field(h, n, dy, "h");
    if (!z.empty()) {
        if (z.size() != dy) throw DimensionMismatch("Z needs one column per observation component");
        for (std::size_t k = 0; k < z.size(); ++k) check_field(z[k], n, dx, "Z column " + std::to_string(k + 1));
    }
    check_field(drift, n, dx, "drift");
    if (l.size() != db) throw DimensionMismatch("L needs d_B columns");
    for (std::size_t j = 0; j < l.size(); ++j) check_field(l[j], n, dx, "L column " + std::to_string(j + 1));
    if (x0.dim() != dx) throw DimensionMismatch("initial law dimension differs from d_X");
}

Field stratonovich_drift_correction(const Field& l0_bar, const std::vector<Field>& z, std::size_t dx,
                                    std::size_t dy) {
    return drift_correction(l0_bar, z, dx, dy, -1.0);
}

Field ito_drift_from_stratonovich(const Field& l0, const std::vector<Field>& z, std::size_t dx, std::size_t dy) {
    return drift_correction(l0, z, dx, dy, 1.0);
}

Field FilterModel::stratonovich_drift() const {
    return drift_form == DriftForm::stratonovich ? drift : stratonovich_drift_correction(drift, z, dx, dy);
}

Field FilterModel::ito_drift() const {
    return drift_form == DriftForm::ito ? drift : ito_drift_from_stratonovich(drift, z, dx, dy);
}

Field FilterModel::signal_drift() const {
    const Field base = ito_drift();
    if (z.empty()) return base;
    const std::size_t n = dx + dy;
    const std::size_t m = dx, k_count = dy;
    const Field hh = h;
    const std::vector<Field> zz = z;
    return Field(n, m, [base, hh, zz, m, k_count](std::span<const double> arg, std::span<double> out) {
        std::vector<double> hv(k_count), zk(m);
        base.eval(arg, out);
        hh.eval(arg, hv);
        for (std::size_t k = 0; k < k_count; ++k) {
            zz[k].eval(arg, zk);
            for (std::size_t j = 0; j < m; ++j) out[j] += zk[j] * hv[k];
        }
    });
}

namespace {

// Stack scratch for the small vectors inside coefficient callbacks.
template <std::size_t N>
class Scratch {
public:
    explicit Scratch(std::size_t n) {
        if (n > N) heap_.resize(n);
        ptr_ = n > N ? heap_.data() : stack_;
        n_ = n;
    }
    double* data() { return ptr_; }
    std::span<double> span() { return {ptr_, n_}; }
    double& operator[](std::size_t i) { return ptr_[i]; }

private:
    double stack_[N];
    std::vector<double> heap_;
    double* ptr_;
    std::size_t n_;
};

}  // namespace

FilterSystem build_filter_system(const FilterModel& model) {
    model.validate();
    const std::size_t dx = model.dx, dy = model.dy, n = dx + dy, ds = n + 1;
    FilterSystem out;
    out.layout = {dx, dy};
    RoughDriftSystem& sys = out.system;
    sys.ds = ds;
    sys.db = model.db;
    sys.dy = dy;

    const Field l0 = model.stratonovich_drift();
    const Field h = model.h;
    const std::vector<Field> z = model.z;

    sys.drift = Field(ds, ds, [l0, h, z, dx, dy, n](std::span<const double> s, std::span<double> out) {
        const auto arg = s.first(n);
        l0.eval(arg, out.first(dx));
        std::fill(out.begin() + static_cast<std::ptrdiff_t>(dx), out.end(), 0.0);
        Scratch<16> hv(dy), hp(dy), hm(dy), zk(dx), zp(n), zm(n);
        h.eval(arg, hv.span());
        double m = 0.0;
        for (double v : arg) m = std::max(m, std::abs(v));
        const double eps = 1e-5 * (1.0 + m);
        double acc = 0.0;
        for (std::size_t k = 0; k < dy; ++k) {
            // central difference of h^k along (Z_k, e_k)
            std::copy(arg.begin(), arg.end(), zp.data());
            std::copy(arg.begin(), arg.end(), zm.data());
            if (!z.empty()) {
                z[k].eval(arg, zk.span());
                for (std::size_t i = 0; i < dx; ++i) {
                    zp[i] += eps * zk[i];
                    zm[i] -= eps * zk[i];
                }
            }
            zp[dx + k] += eps;
            zm[dx + k] -= eps;
            h.eval(zp.span(), hp.span());
            h.eval(zm.span(), hm.span());
            const double dk = (hp[k] - hm[k]) / (2.0 * eps);
            acc += dk + hv[k] * hv[k];
        }
        out[n] = -0.5 * acc;
    });

    for (std::size_t j = 0; j < model.db; ++j) {
        const Field lj = model.l[j];
        sys.diffusion.push_back(Field(ds, ds, [lj, dx, n](std::span<const double> s, std::span<double> out) {
            std::fill(out.begin(), out.end(), 0.0);
            lj.eval(s.first(n), out.first(dx));
        }));
    }

    for (std::size_t k = 0; k < dy; ++k) {
        const Field zk = z.empty() ? Field() : z[k];
        auto value = [zk, h, k, dx, dy, n](std::span<const double> s, std::span<double> out) {
            const auto arg = s.first(n);
            std::fill(out.begin(), out.end(), 0.0);
            if (!zk.empty()) zk.eval(arg, out.first(dx));
            out[dx + k] = 1.0;
            Scratch<16> hv(dy);
            h.eval(arg, hv.span());
            out[n] = hv[k];
        };
        auto jacobian = [zk, h, k, dx, dy, n, ds](std::span<const double> s, std::span<double> out) {
            const auto arg = s.first(n);
            std::fill(out.begin(), out.end(), 0.0);
            Scratch<64> buf(std::max(dx, dy) * n);
            if (!zk.empty()) {
                zk.jacobian(arg, {buf.data(), dx * n});
                for (std::size_t i = 0; i < dx; ++i)
                    for (std::size_t j = 0; j < n; ++j) out[i * ds + j] = buf[i * n + j];
            }
            h.jacobian(arg, {buf.data(), dy * n});
            for (std::size_t j = 0; j < n; ++j) out[n * ds + j] = buf[k * n + j];
        };
        sys.rough.push_back(Field(ds, ds, value, jacobian));
    }

    // All columns at once: h and each Z_k are evaluated a single time per call.
    const bool has_z = !z.empty();
    sys.rough_combined = [h, z, has_z, dx, dy, n, ds](const double* s, const double* v, double* value, double* jac) {
        thread_local std::vector<double> scratch;
        const std::size_t need = dy + dx + dy * n + dx * n;
        if (scratch.size() < need) scratch.resize(need);
        double* hv = scratch.data();
        double* zv = hv + dy;
        double* hj = zv + dx;
        double* zj = hj + dy * n;
        const std::span<const double> arg(s, n);
        for (std::size_t i = 0; i < dx; ++i) value[i] = 0.0;
        if (jac) {
            for (std::size_t i = 0; i < ds * ds; ++i) jac[i] = 0.0;
            h.eval_both(arg, {hv, dy}, {hj, dy * n});
        } else {
            h.eval(arg, {hv, dy});
        }
        double vi = 0.0;
        for (std::size_t k = 0; k < dy; ++k) {
            const double vk = v[k];
            value[dx + k] = vk;
            vi += vk * hv[k];
            if (jac)
                for (std::size_t j = 0; j < n; ++j) jac[n * ds + j] += vk * hj[k * n + j];
            if (!has_z || vk == 0.0) continue;
            if (jac) {
                z[k].eval_both(arg, {zv, dx}, {zj, dx * n});
                for (std::size_t i = 0; i < dx; ++i)
                    for (std::size_t j = 0; j < n; ++j) jac[i * ds + j] += vk * zj[i * n + j];
            } else {
                z[k].eval(arg, {zv, dx});
            }
            for (std::size_t i = 0; i < dx; ++i) value[i] += vk * zv[i];
        }
        value[n] = vi;
    };

    sys.initial = model.x0.padded(ds);
    return out;
}

}  // namespace rfilter
