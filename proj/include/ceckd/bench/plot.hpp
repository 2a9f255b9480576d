#ifndef CECKD_BENCH_PLOT_HPP
#define CECKD_BENCH_PLOT_HPP

#include <algorithm>
#include <cstdio>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "ceckd/bench/harness.hpp"
#include "ceckd/error.hpp"

namespace ceckd::bench {

struct Series {
    std::string name;
    std::vector<std::pair<double, double>> points;
};

/// Rows CSV (kRowsHeader schema) -> column name -> engine -> (event_index, value) points.
inline std::map<std::string, std::map<std::string, Series>> read_rows_csv(const std::string& text)
{
    std::istringstream in(text);
    std::string line;
    std::vector<std::string> header;
    std::map<std::string, std::map<std::string, Series>> out;
    auto split = [](const std::string& s) {
        std::vector<std::string> f;
        std::string cur;
        std::istringstream ls(s);
        while (std::getline(ls, cur, ','))
            f.push_back(cur);
        return f;
    };
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        if (line.empty())
            continue;
        auto f = split(line);
        if (f.empty())
            continue;
        if (f[0] == "engine") {
            header = f;
            continue;
        }
        if (header.empty() || f.size() != header.size())
            throw ConfigError("rows CSV does not match its header: " + line);
        double x = std::stod(f[1]);
        for (std::size_t i = 2; i < f.size(); ++i) {
            auto& s = out[header[i]][f[0]];
            s.name = f[0];
            s.points.emplace_back(x, std::stod(f[i]));
        }
    }
    return out;
}

/// A plain line chart, one polyline per series.
inline std::string line_chart_svg(const std::string& title, const std::string& y_label, const std::vector<Series>& series)
{
    const double w = 640, h = 400, ml = 80, mr = 20, mt = 40, mb = 50;
    double xmax = 1, ymax = 1;
    for (const auto& s : series)
        for (auto [x, y] : s.points) {
            xmax = std::max(xmax, x);
            ymax = std::max(ymax, y);
        }
    ymax *= 1.05;
    auto px = [&](double x) { return ml + (w - ml - mr) * x / xmax; };
    auto py = [&](double y) { return h - mb - (h - mt - mb) * y / ymax; };
    static const char* colors[] = {"#d62728", "#1f77b4", "#2ca02c", "#9467bd"};
    char buf[256];
    std::string svg;
    std::snprintf(buf, sizeof buf,
                  "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%.0f\" height=\"%.0f\" font-family=\"sans-serif\" "
                  "font-size=\"12\">\n",
                  w, h);
    svg += buf;
    svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    std::snprintf(buf, sizeof buf, "<text x=\"%.0f\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">", w / 2);
    svg += buf + title + "</text>\n";
    std::snprintf(buf, sizeof buf,
                  "<line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" stroke=\"black\"/>\n"
                  "<line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" stroke=\"black\"/>\n",
                  ml, h - mb, w - mr, h - mb, ml, mt, ml, h - mb);
    svg += buf;
    for (int i = 0; i <= 4; ++i) {
        const double xv = xmax * i / 4, yv = ymax * i / 4;
        std::snprintf(buf, sizeof buf, "<text x=\"%.1f\" y=\"%.1f\" text-anchor=\"middle\">%.0f</text>\n", px(xv),
                      h - mb + 16, xv);
        svg += buf;
        std::snprintf(buf, sizeof buf, "<text x=\"%.1f\" y=\"%.1f\" text-anchor=\"end\">%.3g</text>\n", ml - 6,
                      py(yv) + 4, yv);
        svg += buf;
    }
    std::snprintf(buf, sizeof buf, "<text x=\"%.0f\" y=\"%.0f\" text-anchor=\"middle\">events</text>\n", w / 2, h - 12);
    svg += buf;
    std::snprintf(buf, sizeof buf,
                  "<text x=\"16\" y=\"%.0f\" text-anchor=\"middle\" transform=\"rotate(-90 16 %.0f)\">", h / 2, h / 2);
    svg += buf + y_label + "</text>\n";
    for (std::size_t k = 0; k < series.size(); ++k) {
        const char* c = colors[k % 4];
        svg += "<polyline fill=\"none\" stroke-width=\"1.5\" stroke=\"" + std::string(c) + "\" points=\"";
        for (auto [x, y] : series[k].points) {
            std::snprintf(buf, sizeof buf, "%.1f,%.1f ", px(x), py(y));
            svg += buf;
        }
        svg += "\"/>\n";
        std::snprintf(buf, sizeof buf, "<text x=\"%.1f\" y=\"%.1f\" fill=\"%s\">", ml + 12, mt + 16.0 + 16.0 * k, c);
        svg += buf + series[k].name + "</text>\n";
    }
    svg += "</svg>\n";
    return svg;
}

struct Chart {
    std::string file;
    std::string svg;
};

/// The four comparison charts: update time, ground and unbound holds_at, structure bytes.
inline std::vector<Chart> comparison_charts(const std::string& rows_csv_text)
{
    const auto cols = read_rows_csv(rows_csv_text);
    auto pick = [&](const std::string& col) {
        std::vector<Series> s;
        if (auto it = cols.find(col); it != cols.end())
            for (const auto& [engine, series] : it->second)
                s.push_back(series);
        return s;
    };
    return {
        {"update_time.svg", line_chart_svg("Update time, naive vs ceckd", "ns per event", pick("update_ns_mean"))},
        {"ground_holds_at.svg", line_chart_svg("Ground holds_at", "ns per query", pick("ground_query_ns_mean"))},
        {"unbound_holds_at.svg", line_chart_svg("Unbound holds_at", "ns per query", pick("unbound_query_ns_mean"))},
        {"memory.svg", line_chart_svg("Engine structure bytes", "bytes", pick("structure_bytes"))},
    };
}

} // namespace ceckd::bench

#endif // CECKD_BENCH_PLOT_HPP
