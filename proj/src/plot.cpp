#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>

#include "glu/errors.hpp"
#include "glu/harness.hpp"

namespace glu {

namespace {

struct Series {
    std::string label;
    std::string color;
    std::function<double(const SummaryRow&)> field;
};

constexpr double kWidth = 720.0;
constexpr double kHeight = 480.0;
constexpr double kLeft = 80.0;
constexpr double kRight = 20.0;
constexpr double kTop = 40.0;
constexpr double kBottom = 60.0;

// Log-log chart; points with i = 0 or non-positive values are skipped.
void write_chart(const std::filesystem::path& path, const std::string& title, const std::vector<SummaryRow>& rows,
                 const std::vector<Series>& series) {
    double xmin = INFINITY;
    double xmax = -INFINITY;
    double ymin = INFINITY;
    double ymax = -INFINITY;
    for (const Series& s : series) {
        for (const SummaryRow& r : rows) {
            const double v = s.field(r);
            if (r.i <= 0 || !(v > 0.0) || !std::isfinite(v)) {
                continue;
            }
            xmin = std::min(xmin, std::log10(static_cast<double>(r.i)));
            xmax = std::max(xmax, std::log10(static_cast<double>(r.i)));
            ymin = std::min(ymin, std::log10(v));
            ymax = std::max(ymax, std::log10(v));
        }
    }
    std::ofstream out(path);
    if (!out) {
        throw Error("cannot write " + path.string());
    }
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
        << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    out << "<text x=\"" << kWidth / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">" << title
        << "</text>\n";
    if (!std::isfinite(xmin)) {
        out << "<text x=\"" << kWidth / 2 << "\" y=\"" << kHeight / 2 << "\" text-anchor=\"middle\">no data</text>\n";
        out << "</svg>\n";
        return;
    }
    xmin = std::floor(xmin);
    xmax = std::max(std::ceil(xmax), xmin + 1.0);
    ymin = std::floor(ymin);
    ymax = std::max(std::ceil(ymax), ymin + 1.0);
    const double pw = kWidth - kLeft - kRight;
    const double ph = kHeight - kTop - kBottom;
    auto px = [&](double lx) { return kLeft + (lx - xmin) / (xmax - xmin) * pw; };
    auto py = [&](double ly) { return kTop + (ymax - ly) / (ymax - ymin) * ph; };

    out << "<rect x=\"" << kLeft << "\" y=\"" << kTop << "\" width=\"" << pw << "\" height=\"" << ph
        << "\" fill=\"none\" stroke=\"black\"/>\n";
    for (double d = xmin; d <= xmax + 1e-9; d += 1.0) {
        out << "<line x1=\"" << px(d) << "\" y1=\"" << kTop << "\" x2=\"" << px(d) << "\" y2=\"" << kTop + ph
            << "\" stroke=\"#ddd\"/>\n";
        out << "<text x=\"" << px(d) << "\" y=\"" << kTop + ph + 18 << "\" text-anchor=\"middle\">1e" << d
            << "</text>\n";
    }
    for (double d = ymin; d <= ymax + 1e-9; d += 1.0) {
        out << "<line x1=\"" << kLeft << "\" y1=\"" << py(d) << "\" x2=\"" << kLeft + pw << "\" y2=\"" << py(d)
            << "\" stroke=\"#ddd\"/>\n";
        out << "<text x=\"" << kLeft - 6 << "\" y=\"" << py(d) + 4 << "\" text-anchor=\"end\">1e" << d
            << "</text>\n";
    }
    out << "<text x=\"" << kLeft + pw / 2 << "\" y=\"" << kHeight - 16 << "\" text-anchor=\"middle\">iteration i</text>\n";

    double legend_y = kTop + 16;
    for (const Series& s : series) {
        std::string points;
        for (const SummaryRow& r : rows) {
            const double v = s.field(r);
            if (r.i <= 0 || !(v > 0.0) || !std::isfinite(v)) {
                continue;
            }
            char buf[64];
            std::snprintf(buf, sizeof buf, "%.2f,%.2f ", px(std::log10(static_cast<double>(r.i))),
                          py(std::log10(v)));
            points += buf;
        }
        if (points.empty()) {
            continue;
        }
        out << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"1.5\" points=\"" << points
            << "\"/>\n";
        out << "<line x1=\"" << kLeft + pw - 170 << "\" y1=\"" << legend_y - 4 << "\" x2=\"" << kLeft + pw - 150
            << "\" y2=\"" << legend_y - 4 << "\" stroke=\"" << s.color << "\" stroke-width=\"2\"/>\n";
        out << "<text x=\"" << kLeft + pw - 145 << "\" y=\"" << legend_y << "\">" << s.label << "</text>\n";
        legend_y += 16;
    }
    out << "</svg>\n";
}

} // namespace

std::vector<std::filesystem::path> plot_summary(const std::vector<SummaryRow>& rows,
                                                const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    std::vector<std::filesystem::path> written;

    const auto error_path = dir / "error.svg";
    write_chart(error_path, "Estimation error", rows,
                {{"mean ||x_n - theta||", "#1f77b4", [](const SummaryRow& r) { return r.mean_error; }},
                 {"median ||x_n - theta||", "#ff7f0e", [](const SummaryRow& r) { return r.median_error; }},
                 {"median centralized", "#2ca02c", [](const SummaryRow& r) { return r.median_central_error; }}});
    written.push_back(error_path);

    const auto dis_path = dir / "disagreement.svg";
    write_chart(dis_path, "Disagreement ||x - 1 (x) x_avg||", rows,
                {{"median disagreement", "#d62728", [](const SummaryRow& r) { return r.median_disagreement; }}});
    written.push_back(dis_path);

    const auto gap_path = dir / "gap.svg";
    write_chart(gap_path, "Distributed-centralized gap", rows,
                {{"median mean_n ||x_n - u||", "#9467bd", [](const SummaryRow& r) { return r.median_gap; }}});
    written.push_back(gap_path);
    return written;
}

} // namespace glu
