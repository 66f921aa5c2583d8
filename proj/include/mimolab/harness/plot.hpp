#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "../errors.hpp"
#include "table.hpp"

namespace mimolab::harness {

enum class plot_style { linear, log_y };

struct plot_files {
    std::string svg;
    std::string script;  // gnuplot
};

// BER tables plot on a log axis; entropy tables on linear axes.
inline plot_style style_for(const result_table& t, const std::string& hint = "") {
    for (const auto& r : t) {
        if (r.method == "population_dynamics" || r.method == "demod_sim") return plot_style::log_y;
        if (r.method == "exact_mc" || r.method == "perturbative") return plot_style::linear;
    }
    return hint.find("ber") != std::string::npos ? plot_style::log_y : plot_style::linear;
}

inline bool x_is_snr(const result_table& t) {
    return std::all_of(t.begin(), t.end(), [](const result_row& r) { return r.x == r.snr_db; });
}

namespace detail {

inline std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

inline std::string num(double v) { return fmt("%.2f", v); }

struct series {
    std::string method;
    double param;
    std::string label;
    std::vector<const result_row*> rows;
};

inline std::vector<series> group_series(const result_table& t) {
    const bool snr = x_is_snr(t);
    std::map<std::pair<std::string, double>, series> m;
    for (const auto& r : t) {
        const double p = snr ? r.rho : r.snr_db;
        auto& s = m[{r.method, p}];
        s.method = r.method;
        s.param = p;
        s.label = r.method + (snr ? " rho=" : " snr=") + fmt("%g", p) + (snr ? "" : " dB");
        s.rows.push_back(&r);
    }
    std::vector<series> out;
    for (auto& [k, s] : m) {
        std::sort(s.rows.begin(), s.rows.end(), [](const result_row* a, const result_row* b) { return a->x < b->x; });
        out.push_back(std::move(s));
    }
    return out;
}

inline std::vector<double> linear_ticks(double lo, double hi) {
    const double span = hi - lo;
    const double raw = span / 5.0;
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    double step = mag;
    for (double f : {1.0, 2.0, 2.5, 5.0, 10.0})
        if (f * mag >= raw) {
            step = f * mag;
            break;
        }
    std::vector<double> ticks;
    for (double v = std::ceil(lo / step - 1e-9) * step; v <= hi + 1e-9 * span; v += step)
        ticks.push_back(std::abs(v) < 1e-12 * span ? 0.0 : v);
    return ticks;
}

inline const char* color_of(const std::string& method) {
    static const std::map<std::string, const char*> c = {
        {"exact_mc", "#1f77b4"},          {"matrix_integration", "#d62728"}, {"perturbative", "#9467bd"},
        {"identity", "#7f7f7f"},          {"population_dynamics", "#2ca02c"}, {"demod_sim", "#ff7f0e"}};
    const auto it = c.find(method);
    return it == c.end() ? "#000000" : it->second;
}

inline const char* dash_of(std::size_t i) {
    static const char* d[] = {"", "6,3", "2,3", "8,3,2,3"};
    return d[i % 4];
}

}  // namespace detail

inline plot_files emit_plot(const result_table& t, plot_style style, const std::string& title = "") {
    std::vector<const result_row*> ok;
    for (const auto& r : t)
        if (std::isfinite(r.y) && (style == plot_style::linear || r.y > 0.0)) ok.push_back(&r);
    if (ok.empty()) throw config_error("emit_plot: no plottable rows");
    const bool log = style == plot_style::log_y;
    const bool snr = x_is_snr(t);

    double xlo = ok.front()->x, xhi = xlo, ylo = ok.front()->y, yhi = ylo;
    for (const auto* r : ok) {
        xlo = std::min(xlo, r->x);
        xhi = std::max(xhi, r->x);
        ylo = std::min(ylo, r->y);
        yhi = std::max(yhi, r->y);
    }
    if (xhi == xlo) {
        xlo -= 1.0;
        xhi += 1.0;
    }
    std::vector<double> yticks;
    if (log) {
        ylo = std::pow(10.0, std::floor(std::log10(ylo)));
        yhi = std::pow(10.0, std::ceil(std::log10(yhi)));
        if (yhi <= ylo) yhi = ylo * 10.0;
        for (double v = ylo; v <= yhi * 1.0000001; v *= 10.0) yticks.push_back(v);
    } else {
        ylo = std::min(0.0, ylo);
        yhi = yhi > ylo ? yhi * 1.05 : ylo + 1.0;
        yticks = detail::linear_ticks(ylo, yhi);
    }
    const auto xticks = detail::linear_ticks(xlo, xhi);

    const double W = 720, H = 480, left = 80, right = 230, top = 40, bottom = 60;
    const double pw = W - left - right, ph = H - top - bottom;
    auto px = [&](double x) { return left + (x - xlo) / (xhi - xlo) * pw; };
    auto py = [&](double y) {
        const double f = log ? (std::log10(y) - std::log10(ylo)) / (std::log10(yhi) - std::log10(ylo)) : (y - ylo) / (yhi - ylo);
        return top + (1.0 - f) * ph;
    };
    const std::string xlabel = snr ? "SNR (dB)" : "rho";
    const std::string ylabel = log ? "BER" : "conditional entropy (nats)";

    std::string s;
    s += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    s += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"720\" height=\"480\" viewBox=\"0 0 720 480\" "
         "font-family=\"sans-serif\" font-size=\"12\">\n";
    s += "<rect x=\"0\" y=\"0\" width=\"720\" height=\"480\" fill=\"white\"/>\n";
    if (!title.empty()) s += "<text x=\"" + detail::num(left + pw / 2) + "\" y=\"24\" text-anchor=\"middle\">" + title + "</text>\n";
    s += "<g stroke=\"#dddddd\" stroke-width=\"1\">\n";
    for (double v : xticks) s += "<line x1=\"" + detail::num(px(v)) + "\" y1=\"" + detail::num(top) + "\" x2=\"" + detail::num(px(v)) + "\" y2=\"" + detail::num(top + ph) + "\"/>\n";
    for (double v : yticks) s += "<line x1=\"" + detail::num(left) + "\" y1=\"" + detail::num(py(v)) + "\" x2=\"" + detail::num(left + pw) + "\" y2=\"" + detail::num(py(v)) + "\"/>\n";
    s += "</g>\n";
    s += "<rect x=\"" + detail::num(left) + "\" y=\"" + detail::num(top) + "\" width=\"" + detail::num(pw) + "\" height=\"" + detail::num(ph) + "\" fill=\"none\" stroke=\"black\"/>\n";
    for (double v : xticks)
        s += "<text x=\"" + detail::num(px(v)) + "\" y=\"" + detail::num(top + ph + 18) + "\" text-anchor=\"middle\">" + detail::fmt("%g", v) + "</text>\n";
    for (double v : yticks)
        s += "<text x=\"" + detail::num(left - 6) + "\" y=\"" + detail::num(py(v) + 4) + "\" text-anchor=\"end\">" + detail::fmt(log ? "%.0e" : "%g", v) + "</text>\n";
    s += "<text x=\"" + detail::num(left + pw / 2) + "\" y=\"" + detail::num(H - 16) + "\" text-anchor=\"middle\">" + xlabel + "</text>\n";
    s += "<text x=\"18\" y=\"" + detail::num(top + ph / 2) + "\" text-anchor=\"middle\" transform=\"rotate(-90 18 " + detail::num(top + ph / 2) + ")\">" + ylabel + "</text>\n";

    const auto groups = detail::group_series(t);
    std::map<std::string, std::size_t> per_method;
    std::size_t idx = 0;
    for (const auto& g : groups) {
        const std::size_t variant = per_method[g.method]++;
        const char* color = detail::color_of(g.method);
        std::string pts;
        std::string marks;
        for (const auto* r : g.rows) {
            if (!std::isfinite(r->y) || (log && r->y <= 0.0)) continue;
            const std::string X = detail::num(px(r->x)), Y = detail::num(py(r->y));
            pts += (pts.empty() ? "" : " ") + X + "," + Y;
            marks += "<circle cx=\"" + X + "\" cy=\"" + Y + "\" r=\"2.5\" fill=\"" + color + "\"/>\n";
            if (r->stderr_ > 0.0 && std::isfinite(r->stderr_)) {
                const double lo = log ? std::max(r->y - r->stderr_, ylo) : r->y - r->stderr_;
                const double hi = std::min(r->y + r->stderr_, log ? yhi : r->y + r->stderr_);
                marks += "<line x1=\"" + X + "\" y1=\"" + detail::num(py(lo)) + "\" x2=\"" + X + "\" y2=\"" + detail::num(py(hi)) + "\" stroke=\"" + color + "\"/>\n";
            }
        }
        if (!pts.empty()) {
            s += "<polyline fill=\"none\" stroke=\"" + std::string(color) + "\" stroke-width=\"1.5\"";
            if (*detail::dash_of(variant)) s += " stroke-dasharray=\"" + std::string(detail::dash_of(variant)) + "\"";
            s += " points=\"" + pts + "\"/>\n" + marks;
        }
        const double ly = top + 10 + 18.0 * static_cast<double>(idx);
        const double lx = left + pw + 12;
        s += "<line x1=\"" + detail::num(lx) + "\" y1=\"" + detail::num(ly) + "\" x2=\"" + detail::num(lx + 24) + "\" y2=\"" + detail::num(ly) + "\" stroke=\"" + color + "\" stroke-width=\"1.5\"";
        if (*detail::dash_of(variant)) s += " stroke-dasharray=\"" + std::string(detail::dash_of(variant)) + "\"";
        s += "/>\n<text x=\"" + detail::num(lx + 30) + "\" y=\"" + detail::num(ly + 4) + "\">" + g.label + "</text>\n";
        ++idx;
    }
    s += "</svg>\n";

    std::string g;
    g += "# gnuplot script; data is inline\n";
    g += "set xlabel '" + xlabel + "'\n";
    g += "set ylabel '" + ylabel + "'\n";
    if (log) g += "set logscale y\n";
    if (!title.empty()) g += "set title '" + title + "'\n";
    g += "set key outside right\n";
    std::size_t k = 0;
    for (const auto& grp : groups) {
        g += "$s" + std::to_string(k++) + " << EOD\n";
        for (const auto* r : grp.rows) g += format_number(r->x) + " " + format_number(r->y) + " " + format_number(r->stderr_) + "\n";
        g += "EOD\n";
    }
    g += "plot ";
    for (std::size_t i = 0; i < groups.size(); ++i) {
        if (i) g += ", \\\n     ";
        g += "$s" + std::to_string(i) + " using 1:2:3 with yerrorlines title '" + groups[i].label + "'";
    }
    g += "\n";
    return {s, g};
}

}  // namespace mimolab::harness
