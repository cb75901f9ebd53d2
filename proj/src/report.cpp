#include "edgehyb/report.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>

#include "edgehyb/errors.hpp"

namespace edgehyb {

namespace {

std::string fmt(const char* spec, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, spec, v);
    return buf;
}

std::string exact(double v) { return fmt("%.17g", v); }

const char* const kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
                                "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

}  // namespace

std::string pr_csv(const std::vector<PRPoint>& curve) {
    std::string out = "threshold,tp,fp,fn,precision,recall,tp_pred\n";
    for (const PRPoint& p : curve)
        out += exact(p.threshold) + ',' + std::to_string(p.tp) + ',' + std::to_string(p.fp) + ',' +
               std::to_string(p.fn) + ',' + exact(p.precision) + ',' + exact(p.recall) + ',' +
               std::to_string(p.tp_pred) + '\n';
    return out;
}

std::string per_image_csv(const EvalSummary& s) {
    std::string out = "id,best_threshold,best_f\n";
    for (std::size_t i = 0; i < s.per_image.size(); ++i) {
        const PRPoint& p = s.per_image[i][best_threshold_index(s.per_image[i])];
        out += s.image_ids[i] + ',' + exact(p.threshold) + ',' + exact(s.per_image_best_f[i]) + '\n';
    }
    return out;
}

std::string summary_csv(const std::vector<EvalSummary>& rows) {
    std::string out = "Method,ODS,OIS,AP\n";
    for (const EvalSummary& s : rows) out += s.method + ',' + exact(s.ods) + ',' + exact(s.ois) + ',' + exact(s.ap) + '\n';
    return out;
}

std::string summary_table(const std::vector<EvalSummary>& rows) {
    std::size_t name_w = 6;
    for (const EvalSummary& s : rows) name_w = std::max(name_w, s.method.size());
    auto pad = [&](const std::string& s) { return s + std::string(name_w - s.size(), ' '); };
    std::string out = pad("Method") + "     ODS     OIS      AP\n";
    out += std::string(name_w + 24, '-') + '\n';
    for (const EvalSummary& s : rows)
        out += pad(s.method) + fmt("  %6.4f", s.ods) + fmt("  %6.4f", s.ois) + fmt("  %6.4f", s.ap) + '\n';
    return out;
}

std::string pr_svg(const std::vector<EvalSummary>& rows) {
    const double left = 60, top = 20, size = 400;
    const double width = left + size + 180, height = top + size + 50;
    auto px = [&](double r) { return fmt("%.2f", left + r * size); };
    auto py = [&](double p) { return fmt("%.2f", top + (1.0 - p) * size); };
    std::string out = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fmt("%.0f", width) + "\" height=\"" +
                      fmt("%.0f", height) + "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    out += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    out += "<rect x=\"" + px(0) + "\" y=\"" + py(1) + "\" width=\"" + fmt("%.0f", size) + "\" height=\"" +
           fmt("%.0f", size) + "\" fill=\"none\" stroke=\"black\"/>\n";
    for (int i = 0; i <= 10; ++i) {
        const double v = i / 10.0;
        out += "<line x1=\"" + px(v) + "\" y1=\"" + py(0) + "\" x2=\"" + px(v) + "\" y2=\"" + py(1) +
               "\" stroke=\"#dddddd\"/>\n";
        out += "<line x1=\"" + px(0) + "\" y1=\"" + py(v) + "\" x2=\"" + px(1) + "\" y2=\"" + py(v) +
               "\" stroke=\"#dddddd\"/>\n";
        out += "<text x=\"" + px(v) + "\" y=\"" + fmt("%.2f", top + size + 16) + "\" text-anchor=\"middle\">" +
               fmt("%.1f", v) + "</text>\n";
        out += "<text x=\"" + fmt("%.2f", left - 6) + "\" y=\"" + py(v) + "\" text-anchor=\"end\" dy=\"4\">" +
               fmt("%.1f", v) + "</text>\n";
    }
    out += "<text x=\"" + px(0.5) + "\" y=\"" + fmt("%.2f", top + size + 38) +
           "\" text-anchor=\"middle\">Recall</text>\n";
    out += "<text x=\"16\" y=\"" + py(0.5) + "\" text-anchor=\"middle\" transform=\"rotate(-90 16 " + py(0.5) +
           ")\">Precision</text>\n";
    for (std::size_t m = 0; m < rows.size(); ++m) {
        const char* colour = kPalette[m % (sizeof kPalette / sizeof kPalette[0])];
        std::vector<PRPoint> pts = rows[m].curve;
        std::stable_sort(pts.begin(), pts.end(), [](const PRPoint& a, const PRPoint& b) { return a.recall < b.recall; });
        out += "<polyline fill=\"none\" stroke=\"" + std::string(colour) + "\" stroke-width=\"2\" points=\"";
        for (std::size_t k = 0; k < pts.size(); ++k)
            out += (k ? " " : "") + px(pts[k].recall) + ',' + py(pts[k].precision);
        out += "\"/>\n";
        const double ly = top + 14 + 18.0 * static_cast<double>(m);
        out += "<line x1=\"" + fmt("%.2f", left + size + 16) + "\" y1=\"" + fmt("%.2f", ly - 4) + "\" x2=\"" +
               fmt("%.2f", left + size + 36) + "\" y2=\"" + fmt("%.2f", ly - 4) + "\" stroke=\"" + colour +
               "\" stroke-width=\"2\"/>\n";
        out += "<text x=\"" + fmt("%.2f", left + size + 42) + "\" y=\"" + fmt("%.2f", ly) + "\">" + rows[m].method +
               fmt(" (ODS %.3f)", rows[m].ods) + "</text>\n";
    }
    out += "</svg>\n";
    return out;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out << text;
    if (!out) throw IoError("failed writing " + path.string());
}

void write_evaluation_outputs(const std::filesystem::path& dir, const std::vector<EvalSummary>& rows) {
    std::filesystem::create_directories(dir);
    for (const EvalSummary& s : rows) {
        write_text(dir / (s.method + "_pr.csv"), pr_csv(s.curve));
        write_text(dir / (s.method + "_per_image.csv"), per_image_csv(s));
    }
    write_text(dir / "summary.csv", summary_csv(rows));
    write_text(dir / "summary.txt", summary_table(rows));
    write_text(dir / "pr_curves.svg", pr_svg(rows));
}

Sheet compose_sheet(const std::vector<std::vector<std::uint8_t>>& panels, int height, int width, int gap) {
    if (panels.empty()) throw ArgumentError("a sheet needs at least one panel");
    if (height < 1 || width < 1 || gap < 0) throw ArgumentError("bad panel geometry");
    const int n = static_cast<int>(panels.size());
    Sheet s;
    s.height = height;
    s.width = n * width + (n - 1) * gap;
    s.pixels.assign(static_cast<std::size_t>(s.height) * s.width, 255);
    for (int p = 0; p < n; ++p) {
        const auto& panel = panels[static_cast<std::size_t>(p)];
        if (panel.size() != static_cast<std::size_t>(height) * width) throw ShapeError("panel size mismatch");
        const int x0 = p * (width + gap);
        for (int r = 0; r < height; ++r)
            std::copy_n(panel.begin() + static_cast<std::ptrdiff_t>(r) * width, width,
                        s.pixels.begin() + static_cast<std::ptrdiff_t>(r) * s.width + x0);
    }
    return s;
}

}  // namespace edgehyb
