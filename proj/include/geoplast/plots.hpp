#pragma once

// Native SVG plot emission for run directories: stress-strain response,
// volumetric plastic strain (dilatancy), energy-ledger components, and the
// damage field.  No plotting runtime is involved; output bytes depend only
// on the trajectory.

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "errors.hpp"
#include "evolution.hpp"
#include "fem.hpp"

namespace geoplast {

namespace svg {

inline std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

struct Series {
    std::string label;
    std::vector<double> x, y;
};

inline const char* palette(int i) {
    static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"};
    return colors[i % 5];
}

// a single-panel line chart with axes, ticks and a legend
inline std::string line_chart(const std::string& title, const std::string& xlabel,
                              const std::string& ylabel, const std::vector<Series>& series) {
    const double W = 640, H = 440, ml = 70, mr = 20, mt = 40, mb = 55;
    double xmin = 0, xmax = 0, ymin = 0, ymax = 0;
    bool first = true;
    for (const auto& s : series)
        for (size_t i = 0; i < s.x.size(); ++i) {
            if (first) {
                xmin = xmax = s.x[i];
                ymin = ymax = s.y[i];
                first = false;
            }
            xmin = std::min(xmin, s.x[i]);
            xmax = std::max(xmax, s.x[i]);
            ymin = std::min(ymin, s.y[i]);
            ymax = std::max(ymax, s.y[i]);
        }
    if (first) {
        xmin = ymin = 0;
        xmax = ymax = 1;
    }
    if (xmax - xmin <= 0) {
        xmin -= 0.5;
        xmax += 0.5;
    }
    if (ymax - ymin <= 0) {
        const double pad = std::abs(ymax) > 0 ? 0.1 * std::abs(ymax) : 0.5;
        ymin -= pad;
        ymax += pad;
    }
    const auto X = [&](double x) { return ml + (x - xmin) / (xmax - xmin) * (W - ml - mr); };
    const auto Y = [&](double y) { return H - mb - (y - ymin) / (ymax - ymin) * (H - mt - mb); };

    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
       << "\" viewBox=\"0 0 " << W << " " << H << "\">\n"
       << "<rect width=\"" << W << "\" height=\"" << H << "\" fill=\"white\"/>\n"
       << "<text x=\"" << W / 2 << "\" y=\"22\" text-anchor=\"middle\" font-family=\"sans-serif\""
       << " font-size=\"15\">" << title << "</text>\n";

    // axes and ticks
    os << "<g stroke=\"#333\" stroke-width=\"1\" font-family=\"sans-serif\" font-size=\"11\">\n";
    os << "<line x1=\"" << ml << "\" y1=\"" << H - mb << "\" x2=\"" << W - mr << "\" y2=\""
       << H - mb << "\"/>\n";
    os << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml << "\" y2=\"" << H - mb
       << "\"/>\n";
    for (int i = 0; i <= 5; ++i) {
        const double xv = xmin + (xmax - xmin) * i / 5.0;
        const double yv = ymin + (ymax - ymin) * i / 5.0;
        os << "<line x1=\"" << X(xv) << "\" y1=\"" << H - mb << "\" x2=\"" << X(xv) << "\" y2=\""
           << H - mb + 5 << "\"/>\n"
           << "<text x=\"" << X(xv) << "\" y=\"" << H - mb + 18
           << "\" text-anchor=\"middle\" stroke=\"none\" fill=\"#333\">" << fmt(xv) << "</text>\n";
        os << "<line x1=\"" << ml - 5 << "\" y1=\"" << Y(yv) << "\" x2=\"" << ml << "\" y2=\""
           << Y(yv) << "\"/>\n"
           << "<text x=\"" << ml - 8 << "\" y=\"" << Y(yv) + 4
           << "\" text-anchor=\"end\" stroke=\"none\" fill=\"#333\">" << fmt(yv) << "</text>\n";
    }
    os << "</g>\n";
    os << "<text x=\"" << (ml + W - mr) / 2 << "\" y=\"" << H - 12
       << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">" << xlabel
       << "</text>\n";
    os << "<text x=\"18\" y=\"" << (mt + H - mb) / 2
       << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\""
       << " transform=\"rotate(-90 18 " << (mt + H - mb) / 2 << ")\">" << ylabel << "</text>\n";

    for (size_t si = 0; si < series.size(); ++si) {
        const auto& s = series[si];
        os << "<polyline fill=\"none\" stroke=\"" << palette(int(si))
           << "\" stroke-width=\"1.5\" points=\"";
        for (size_t i = 0; i < s.x.size(); ++i)
            os << (i ? " " : "") << fmt(X(s.x[i])) << "," << fmt(Y(s.y[i]));
        os << "\"/>\n";
        const double ly = mt + 14 + 16.0 * double(si);
        os << "<line x1=\"" << W - mr - 130 << "\" y1=\"" << ly << "\" x2=\"" << W - mr - 106
           << "\" y2=\"" << ly << "\" stroke=\"" << palette(int(si)) << "\" stroke-width=\"2\"/>\n"
           << "<text x=\"" << W - mr - 100 << "\" y=\"" << ly + 4
           << "\" font-family=\"sans-serif\" font-size=\"11\">" << s.label << "</text>\n";
    }
    os << "</svg>\n";
    return os.str();
}

} // namespace svg

namespace detail {

inline void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open for writing: " + path);
    out << content;
    if (!out) throw IoError("write failed: " + path);
}

inline double volume_avg_component(const Discretization& disc,
                                   const std::vector<SymTensor>& a,
                                   const std::vector<SymTensor>& b, int comp) {
    double s = 0.0;
    for (int el = 0; el < disc.n_elements(); ++el)
        s += disc.mesh().measures[el] * (a[el][comp] + b[el][comp]);
    return s / disc.mesh().volume();
}

} // namespace detail

// Writes stress_strain.svg, trace_p.svg, energy.svg and alpha.svg; returns
// the paths written.  Requires at least two snapshots (one loading step).
inline std::vector<std::string> emit_plots(const Discretization& disc,
                                           const std::vector<StateSnapshot>& snaps,
                                           const std::vector<LedgerRow>& ledger,
                                           const std::string& out_dir) {
    if (snaps.size() < 2)
        throw ValidationError("plots: need at least 2 snapshots (initial state plus one step)");
    if (snaps.size() != ledger.size())
        throw ValidationError("plots: snapshot and ledger sizes disagree");
    std::vector<std::string> written;
    const std::vector<SymTensor> zero(disc.n_elements(), SymTensor::zero(disc.tensor_dim()));

    {
        svg::Series s{"volume average", {}, {}};
        for (size_t i = 0; i < snaps.size(); ++i) {
            s.x.push_back(detail::volume_avg_component(disc, snaps[i].e, snaps[i].p, 0));
            s.y.push_back(detail::volume_avg_component(disc, snaps[i].sigma, zero, 0));
        }
        const std::string path = out_dir + "/stress_strain.svg";
        detail::write_file(path, svg::line_chart("axial response", "strain exx", "stress sxx", {s}));
        written.push_back(path);
    }
    {
        svg::Series s{"integral of tr p", {}, {}};
        for (size_t i = 0; i < snaps.size(); ++i) {
            double trp = 0.0;
            for (int el = 0; el < disc.n_elements(); ++el)
                trp += disc.mesh().measures[el] * snaps[i].p[el].trace();
            s.x.push_back(snaps[i].t);
            s.y.push_back(trp);
        }
        const std::string path = out_dir + "/trace_p.svg";
        detail::write_file(path,
                           svg::line_chart("volumetric plastic strain", "t", "int tr p", {s}));
        written.push_back(path);
    }
    {
        std::vector<svg::Series> ss(4);
        ss[0].label = "elastic Q";
        ss[1].label = "damage D + grad";
        ss[2].label = "hardening Qtilde";
        ss[3].label = "plastic work VH";
        for (const auto& r : ledger) {
            for (auto& s : ss) s.x.push_back(r.t);
            ss[0].y.push_back(r.Q);
            ss[1].y.push_back(r.D + r.grad);
            ss[2].y.push_back(r.Qtilde);
            ss[3].y.push_back(r.VH_cum);
        }
        const std::string path = out_dir + "/energy.svg";
        detail::write_file(path, svg::line_chart("energy components", "t", "energy", ss));
        written.push_back(path);
    }
    {
        const std::string path = out_dir + "/alpha.svg";
        const Mesh& m = disc.mesh();
        if (m.kind == MeshKind::rect) {
            // final damage field as per-element grayscale
            std::ostringstream os;
            const double W = 640, H = 480, ml = 40, mt = 40;
            double lx = 0, ly = 0;
            for (const auto& v : m.vertices) {
                lx = std::max(lx, v[0]);
                ly = std::max(ly, v[1]);
            }
            const double sc = std::min((W - 2 * ml) / lx, (H - 2 * mt) / ly);
            os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
               << "\">\n<rect width=\"" << W << "\" height=\"" << H << "\" fill=\"white\"/>\n"
               << "<text x=\"" << W / 2 << "\" y=\"22\" text-anchor=\"middle\""
               << " font-family=\"sans-serif\" font-size=\"15\">damage field at t = "
               << svg::fmt(snaps.back().t) << " (white = 1 sound, black = 0)</text>\n";
            for (int el = 0; el < m.n_elements(); ++el) {
                const double a = disc.element_average(snaps.back().alpha, el);
                const int gray = int(255.0 * std::clamp(a, 0.0, 1.0));
                os << "<polygon points=\"";
                for (int v = 0; v < 3; ++v) {
                    const auto& p = m.vertices[m.elements[el][v]];
                    os << (v ? " " : "") << svg::fmt(ml + p[0] * sc) << ","
                       << svg::fmt(H - mt - p[1] * sc);
                }
                os << "\" fill=\"rgb(" << gray << "," << gray << "," << gray
                   << ")\" stroke=\"none\"/>\n";
            }
            os << "</svg>\n";
            detail::write_file(path, os.str());
        } else if (m.kind == MeshKind::segment) {
            svg::Series s0{"initial", {}, {}}, s1{"final", {}, {}};
            for (int v = 0; v < m.n_vertices(); ++v) {
                s0.x.push_back(m.vertices[v][0]);
                s0.y.push_back(snaps.front().alpha[v]);
                s1.x.push_back(m.vertices[v][0]);
                s1.y.push_back(snaps.back().alpha[v]);
            }
            detail::write_file(path, svg::line_chart("damage field", "x", "alpha", {s0, s1}));
        } else {
            svg::Series s{"alpha", {}, {}};
            for (size_t i = 0; i < snaps.size(); ++i) {
                s.x.push_back(snaps[i].t);
                s.y.push_back(snaps[i].alpha[0]);
            }
            detail::write_file(path, svg::line_chart("damage history", "t", "alpha", {s}));
        }
        written.push_back(path);
    }
    return written;
}

} // namespace geoplast
