#include "rdlab/quadrature.hpp"

#include <algorithm>
#include <queue>
#include <cmath>
#include <limits>

namespace rdlab {

namespace {

// Gauss-Kronrod 7-15 nodes and weights on [-1, 1] (QUADPACK constants).
constexpr double kron_x[8] = {
    0.991455371120813, 0.949107912342759, 0.864864423359769, 0.741531185599394,
    0.586087235467691, 0.405845151377397, 0.207784955007898, 0.000000000000000};
constexpr double kron_w[8] = {
    0.022935322010529, 0.063092092629979, 0.104790010322250, 0.140653259715525,
    0.169004726639267, 0.190350578064785, 0.204432940075298, 0.209482141084728};
constexpr double gauss_w[4] = {
    0.129484966168870, 0.279705391489277, 0.381830050505119, 0.417959183673469};

struct PanelResult {
    double kronrod;
    double gauss;
    double err; // |kronrod - gauss| based estimate
};

PanelResult gk15(const std::function<double(double)>& f, double a, double b) {
    double c = 0.5 * (a + b);
    double h = 0.5 * (b - a);
    double fk = 0.0, fg = 0.0;
    double fc = f(c);
    fk += kron_w[7] * fc;
    fg += gauss_w[3] * fc;
    for (int i = 0; i < 7; ++i) {
        double fa = f(c - h * kron_x[i]);
        double fb = f(c + h * kron_x[i]);
        fk += kron_w[i] * (fa + fb);
        if (i % 2 == 1) // odd Kronrod indices are the Gauss-7 nodes
            fg += gauss_w[i / 2] * (fa + fb);
    }
    PanelResult r;
    r.kronrod = fk * h;
    r.gauss = fg * h;
    double diff = std::abs(fk - fg) * std::abs(h);
    // QUADPACK-style sharpening of the raw difference
    r.err = diff * std::min(1.0, std::pow(200.0 * diff / (std::abs(r.kronrod) + 1e-300), 1.5));
    if (r.err == 0.0)
        r.err = diff;
    return r;
}

} // namespace

QuadResult integrate_adaptive(const std::function<double(double)>& f, double a, double b,
                              double rel_tol, double abs_tol, int max_depth) {
    QuadResult out;
    if (a == b)
        return out;

    // Worst-first refinement against a global error budget; per-panel
    // tolerances would stall on integrand kinks, whose panel error only
    // shrinks linearly with the width.
    struct Seg {
        double a, b, val, err;
        bool operator<(const Seg& o) const { return err < o.err; }
    };
    const double min_width = (b - a) * std::pow(0.5, max_depth);
    std::priority_queue<Seg> segs;
    auto make_seg = [&](double x0, double x1) {
        PanelResult p = gk15(f, x0, x1);
        return Seg{x0, x1, p.kronrod, p.err};
    };
    Seg first = make_seg(a, b);
    double total_val = first.val;
    double total_err = first.err;
    segs.push(first);

    while (total_err > abs_tol && total_err > rel_tol * std::abs(total_val)) {
        Seg worst = segs.top();
        if (worst.b - worst.a <= min_width || segs.size() > 100000)
            throw QuadratureError("adaptive quadrature did not converge on [" +
                                      std::to_string(worst.a) + ", " + std::to_string(worst.b) +
                                      "]",
                                  worst.a, worst.b);
        segs.pop();
        total_val -= worst.val;
        total_err -= worst.err;
        double m = 0.5 * (worst.a + worst.b);
        for (Seg piece : {make_seg(worst.a, m), make_seg(m, worst.b)}) {
            total_val += piece.val;
            total_err += piece.err;
            segs.push(piece);
        }
    }
    out.value = total_val;
    out.error = std::max(total_err, 0.0);
    return out;
}

double find_sign_change(const std::function<double(double)>& f, double a, double b,
                        double x_tol) {
    double fa = f(a);
    double fb = f(b);
    if (fa == 0.0)
        return a;
    if (fb == 0.0)
        return b;
    if ((fa > 0) == (fb > 0))
        throw std::invalid_argument("find_sign_change: no sign change in bracket");
    while (b - a > x_tol * (std::abs(a) + std::abs(b)) + 1e-300) {
        double m = 0.5 * (a + b);
        if (m <= a || m >= b)
            break;
        double fm = f(m);
        if (fm == 0.0)
            return m;
        if ((fm > 0) == (fa > 0)) {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    return 0.5 * (a + b);
}

LimitEstimate extrapolate_limit(const std::vector<double>& ladder, double divergence_threshold) {
    LimitEstimate out;
    const std::size_t m = ladder.size();
    if (m == 0)
        return out;
    if (m < 3) {
        out.value = ladder.back();
        out.error = m == 2 ? std::abs(ladder[1] - ladder[0]) : std::abs(ladder[0]);
        return out;
    }

    // Divergence: a limit sampled on a geometric ladder has increments that
    // decay at the tail, so tail increments that keep growing (or the value
    // blowing past the threshold while still moving away) mean there is no
    // limit. On the catalog the divergent case is a power tail, whose
    // increments grow by a fixed factor 2^p per rung.
    std::vector<double> inc(m - 1);
    for (std::size_t i = 0; i + 1 < m; ++i)
        inc[i] = ladder[i + 1] - ladder[i];
    auto mag = [&](std::size_t i) { return std::abs(inc[i]); };
    double scale = 1.0;
    for (double v : ladder)
        scale = std::max(scale, std::abs(v));
    double noise_floor = 1e3 * std::numeric_limits<double>::epsilon() * scale;
    if (m >= 5) {
        bool moving = mag(m - 2) > noise_floor;
        double growth = std::sqrt(mag(m - 2) / std::max(mag(m - 4), 1e-300));
        bool past_threshold =
            std::abs(ladder.back()) > divergence_threshold && mag(m - 2) > mag(m - 3);
        if (moving && (growth >= 1.02 || past_threshold)) {
            out.diverged = true;
            out.increasing = inc[m - 2] > 0;
            out.value = out.increasing ? std::numeric_limits<double>::infinity()
                                       : -std::numeric_limits<double>::infinity();
            return out;
        }
    }

    // Iterated Aitken: each sweep removes the dominant geometric error term.
    std::vector<double> x = ladder;
    double last_update = std::abs(x[x.size() - 1] - x[x.size() - 2]);
    for (int sweep = 0; sweep < 3 && x.size() >= 3; ++sweep) {
        std::vector<double> y(x.size() - 2);
        bool degenerate = false;
        for (std::size_t i = 0; i + 2 < x.size() + 0; ++i) {
            double d1 = x[i + 1] - x[i];
            double d2 = x[i + 2] - x[i + 1];
            double den = d2 - d1;
            if (std::abs(den) < 64.0 * std::numeric_limits<double>::epsilon() *
                                    (std::abs(d1) + std::abs(d2) + 1e-300)) {
                degenerate = true;
                break;
            }
            y[i] = x[i + 2] - d2 * d2 / den;
        }
        if (degenerate)
            break;
        last_update = std::abs(y.back() - x.back());
        x = std::move(y);
    }
    out.value = x.back();
    double tail_residual = x.size() >= 2 ? std::abs(x[x.size() - 1] - x[x.size() - 2]) : 0.0;
    out.error = last_update + tail_residual +
                8.0 * std::numeric_limits<double>::epsilon() * scale;
    return out;
}

PowerFit fit_power(const std::vector<double>& t, const std::vector<double>& v) {
    PowerFit out;
    const std::size_t n = t.size();
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        double x = std::log(t[i]);
        double y = std::log(std::max(v[i], 1e-300));
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    double den = n * sxx - sx * sx;
    out.exponent = (n * sxy - sx * sy) / den;
    out.log_prefactor = (sy - out.exponent * sx) / n;
    double ss = 0;
    for (std::size_t i = 0; i < n; ++i) {
        double r = std::log(std::max(v[i], 1e-300)) -
                   (out.log_prefactor + out.exponent * std::log(t[i]));
        ss += r * r;
    }
    out.residual = std::sqrt(ss / n);
    return out;
}

LogFit fit_log(const std::vector<double>& t, const std::vector<double>& v) {
    LogFit out;
    const std::size_t n = t.size();
    double sx = 0, sy = 0, sxx = 0, sxy = 0, smean = 0;
    for (std::size_t i = 0; i < n; ++i) {
        double x = std::log(t[i]);
        sx += x;
        sy += v[i];
        sxx += x * x;
        sxy += x * v[i];
        smean += std::abs(v[i]);
    }
    double den = n * sxx - sx * sx;
    out.slope = (n * sxy - sx * sy) / den;
    out.offset = (sy - out.slope * sx) / n;
    double ss = 0;
    for (std::size_t i = 0; i < n; ++i) {
        double r = v[i] - (out.offset + out.slope * std::log(t[i]));
        ss += r * r;
    }
    out.rel_residual = std::sqrt(ss / n) / std::max(smean / n, 1e-300);
    return out;
}

} // namespace rdlab
