#include "sumlab/plot/svg.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

namespace sumlab {
namespace {

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

}  // namespace

std::string render_staircase_svg(const std::vector<TracePanel>& panels) {
    constexpr double width = 640;
    constexpr double panel_h = 220;
    constexpr double margin = 40;
    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
        << panel_h * static_cast<double>(panels.size()) << "\" font-family=\"sans-serif\" font-size=\"11\">\n";

    for (std::size_t p = 0; p < panels.size(); ++p) {
        const auto& panel = panels[p];
        const auto& log = panel.state->trial_log;
        const double top = panel_h * static_cast<double>(p);
        double lo = panel.reference_mm;
        double hi = panel.reference_mm;
        for (const auto& t : log) {
            lo = std::min(lo, t.comparison_mm);
            hi = std::max(hi, t.comparison_mm);
        }
        lo -= 0.5;
        hi += 0.5;
        const double n = std::max<double>(1.0, static_cast<double>(log.size()) - 1.0);
        auto x = [&](double i) { return margin + (width - 2 * margin) * i / n; };
        auto y = [&](double v) { return top + panel_h - margin - (panel_h - 2 * margin) * (v - lo) / (hi - lo); };

        svg << "<text x=\"" << margin << "\" y=\"" << fmt(top + 20) << "\">" << panel.title << "</text>\n";
        svg << "<line x1=\"" << margin << "\" x2=\"" << width - margin << "\" y1=\"" << fmt(y(panel.reference_mm))
            << "\" y2=\"" << fmt(y(panel.reference_mm)) << "\" stroke=\"#999\" stroke-dasharray=\"4 3\"/>\n";
        svg << "<text x=\"" << width - margin + 2 << "\" y=\"" << fmt(y(panel.reference_mm)) << "\">ref</text>\n";
        svg << "<polyline fill=\"none\" stroke=\"#1f77b4\" points=\"";
        for (std::size_t i = 0; i < log.size(); ++i) svg << fmt(x(static_cast<double>(i))) << ',' << fmt(y(log[i].comparison_mm)) << ' ';
        svg << "\"/>\n";
        for (std::size_t i = 0; i < log.size(); ++i) {
            if (!log[i].reversal) continue;
            svg << "<circle cx=\"" << fmt(x(static_cast<double>(i))) << "\" cy=\"" << fmt(y(log[i].comparison_mm))
                << "\" r=\"3\" fill=\"#d62728\"/>\n";
        }
        svg << "<text x=\"" << margin << "\" y=\"" << fmt(top + panel_h - 12) << "\">trial</text>\n";
        svg << "<text x=\"4\" y=\"" << fmt(y(hi)) << "\">" << fmt(hi) << "</text>\n";
        svg << "<text x=\"4\" y=\"" << fmt(y(lo)) << "\">" << fmt(lo) << "</text>\n";
    }
    svg << "</svg>\n";
    return svg.str();
}

std::string render_ordering_svg(const std::vector<ContinuumPlacement>& placements) {
    constexpr double width = 640;
    constexpr double height = 120;
    constexpr double margin = 40;
    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
        << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    svg << "<line x1=\"" << margin << "\" x2=\"" << width - margin << "\" y1=\"60\" y2=\"60\" stroke=\"#333\"/>\n";
    std::vector<ContinuumPlacement> sorted = placements;
    std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) {
        return a.position != b.position ? a.position < b.position : a.label < b.label;
    });
    double last = -1.0;
    int stack = 0;
    for (const auto& p : sorted) {
        stack = p.position == last ? stack + 1 : 0;
        last = p.position;
        const double cx = margin + (width - 2 * margin) * p.position;
        svg << "<circle cx=\"" << fmt(cx) << "\" cy=\"60\" r=\"4\" fill=\"#1f77b4\"/>\n";
        svg << "<text x=\"" << fmt(cx - 4) << "\" y=\"" << fmt(48.0 - 14.0 * stack) << "\">" << p.label << "</text>\n";
    }
    svg << "<text x=\"" << margin << "\" y=\"90\">least intense</text>\n";
    svg << "<text x=\"" << width - margin - 80 << "\" y=\"90\">most intense</text>\n";
    svg << "</svg>\n";
    return svg.str();
}

}  // namespace sumlab
