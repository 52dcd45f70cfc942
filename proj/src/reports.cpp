#include "modify/reports.hpp"

#include <algorithm>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "modify/format.hpp"

namespace modify {

namespace {

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path, std::ios::binary);  // binary: no newline translation
    if (!out) throw EmissionError("cannot open '" + path + "' for writing");
    return out;
}

std::string timestamp_comment() {
    const std::time_t now = std::time(nullptr);
    char buf[64];
    std::tm tm_utc{};
    gmtime_r(&now, &tm_utc);
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
    return std::string("<!-- generated ") + buf + " -->\n";
}

// Linear red (early) to blue (late) ramp.
std::string ramp_color(double t) {
    const int r = static_cast<int>(std::lround(255.0 * (1.0 - t)));
    const int b = static_cast<int>(std::lround(255.0 * t));
    return "rgb(" + std::to_string(r) + ",0," + std::to_string(b) + ")";
}

struct PlotFrame {
    double x0 = 70, y0 = 40, width = 500, height = 380;  // plot area in svg space
    double xmin = 0, xmax = 1, ymin = 0, ymax = 1;

    double sx(double x) const { return x0 + (x - xmin) / (xmax - xmin) * width; }
    double sy(double y) const { return y0 + height - (y - ymin) / (ymax - ymin) * height; }
};

std::string fmt_coord(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

std::string fmt_axis(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
}

void svg_header(std::ostream& out, bool timestamp, const std::string& title) {
    out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    if (timestamp) out << timestamp_comment();
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"480\" "
           "viewBox=\"0 0 640 480\">\n";
    out << "  <rect x=\"0\" y=\"0\" width=\"640\" height=\"480\" fill=\"white\"/>\n";
    out << "  <text x=\"320\" y=\"24\" font-family=\"sans-serif\" font-size=\"16\" "
           "text-anchor=\"middle\">" << title << "</text>\n";
}

void svg_axes(std::ostream& out, const PlotFrame& f, const std::string& xlabel,
              const std::string& ylabel) {
    out << "  <line x1=\"" << fmt_coord(f.x0) << "\" y1=\"" << fmt_coord(f.y0 + f.height)
        << "\" x2=\"" << fmt_coord(f.x0 + f.width) << "\" y2=\"" << fmt_coord(f.y0 + f.height)
        << "\" stroke=\"black\"/>\n";
    out << "  <line x1=\"" << fmt_coord(f.x0) << "\" y1=\"" << fmt_coord(f.y0) << "\" x2=\""
        << fmt_coord(f.x0) << "\" y2=\"" << fmt_coord(f.y0 + f.height) << "\" stroke=\"black\"/>\n";
    out << "  <text x=\"" << fmt_coord(f.x0 + f.width / 2) << "\" y=\"470\" "
           "font-family=\"sans-serif\" font-size=\"13\" text-anchor=\"middle\">" << xlabel
        << "</text>\n";
    out << "  <text x=\"16\" y=\"" << fmt_coord(f.y0 + f.height / 2)
        << "\" font-family=\"sans-serif\" font-size=\"13\" text-anchor=\"middle\" "
           "transform=\"rotate(-90 16 " << fmt_coord(f.y0 + f.height / 2) << ")\">" << ylabel
        << "</text>\n";
    out << "  <text x=\"" << fmt_coord(f.x0) << "\" y=\"" << fmt_coord(f.y0 + f.height + 18)
        << "\" font-family=\"sans-serif\" font-size=\"11\">" << fmt_axis(f.xmin) << "</text>\n";
    out << "  <text x=\"" << fmt_coord(f.x0 + f.width) << "\" y=\""
        << fmt_coord(f.y0 + f.height + 18)
        << "\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"end\">" << fmt_axis(f.xmax)
        << "</text>\n";
    out << "  <text x=\"" << fmt_coord(f.x0 - 6) << "\" y=\"" << fmt_coord(f.y0 + f.height)
        << "\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"end\">" << fmt_axis(f.ymin)
        << "</text>\n";
    out << "  <text x=\"" << fmt_coord(f.x0 - 6) << "\" y=\"" << fmt_coord(f.y0 + 4)
        << "\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"end\">" << fmt_axis(f.ymax)
        << "</text>\n";
}

}  // namespace

void write_metrics_csv(const std::string& path, const std::vector<MetricsRecord>& metrics) {
    auto out = open_out(path);
    out << "iter,epoch,sample_id,loss_da,loss_no,d_da,d_no,degree,applied,w,m_c,lr\n";
    for (const auto& r : metrics) {
        out << r.iter << ',' << r.epoch << ',' << r.sample_id << ',' << format_double(r.loss_da)
            << ',' << format_double(r.loss_no) << ',' << format_double(r.d_da) << ','
            << format_double(r.d_no) << ',' << format_double(r.degree) << ','
            << (r.applied ? 1 : 0) << ',' << format_double(r.w) << ',' << format_double(r.m_c)
            << ',' << format_double(r.lr) << '\n';
    }
    if (!out) throw EmissionError("write failed for '" + path + "'");
}

std::vector<MetricsRecord> read_metrics_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw EmissionError("cannot read metrics file '" + path + "'");
    std::string line;
    if (!std::getline(in, line))
        throw EmissionError("metrics file '" + path + "' is empty");
    std::vector<MetricsRecord> metrics;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string field;
        std::vector<std::string> fields;
        while (std::getline(ss, field, ',')) fields.push_back(field);
        if (fields.size() != 12)
            throw EmissionError("metrics file '" + path + "': bad row '" + line + "'");
        MetricsRecord r;
        r.iter = static_cast<std::uint32_t>(std::stoul(fields[0]));
        r.epoch = static_cast<std::uint32_t>(std::stoul(fields[1]));
        r.sample_id = static_cast<std::uint32_t>(std::stoul(fields[2]));
        r.loss_da = std::stod(fields[3]);
        r.loss_no = std::stod(fields[4]);
        r.d_da = std::stod(fields[5]);
        r.d_no = std::stod(fields[6]);
        r.degree = std::stod(fields[7]);
        r.applied = fields[8] == "1";
        r.w = std::stod(fields[9]);
        r.m_c = std::stod(fields[10]);
        r.lr = std::stod(fields[11]);
        metrics.push_back(r);
    }
    return metrics;
}

std::vector<double> per_iteration_loss(const std::vector<MetricsRecord>& metrics) {
    if (metrics.empty()) return {};
    const std::size_t iters = metrics.back().iter + 1;
    std::vector<double> sums(iters, 0.0);
    std::vector<std::size_t> counts(iters, 0);
    for (const auto& r : metrics) {
        sums[r.iter] += r.loss_no;
        ++counts[r.iter];
    }
    for (std::size_t i = 0; i < iters; ++i) {
        if (counts[i] == 0) throw EmissionError("metrics log has no rows for iteration " +
                                                std::to_string(i));
        sums[i] /= static_cast<double>(counts[i]);
    }
    return sums;
}

std::vector<double> trailing_mean(const std::vector<double>& values, std::size_t window) {
    if (window == 0) throw EmissionError("trailing_mean: window must be at least 1");
    std::vector<double> out(values.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
        acc += values[i];
        if (i >= window) acc -= values[i - window];
        const std::size_t n = std::min(i + 1, window);
        out[i] = acc / static_cast<double>(n);
    }
    return out;
}

std::vector<FlowChannelRow> flow_channel_windows(const std::vector<MetricsRecord>& metrics,
                                                 std::size_t window) {
    if (metrics.empty()) throw EmissionError("flow channel: metrics log is empty");
    if (window == 0) throw EmissionError("flow channel: window must be at least 1");
    const std::size_t iters = metrics.back().iter + 1;
    const std::size_t n_windows = (iters + window - 1) / window;
    std::vector<FlowChannelRow> rows(n_windows);
    std::vector<std::size_t> counts(n_windows, 0);
    for (std::size_t w = 0; w < n_windows; ++w) rows[w].window_start_iter = w * window;
    for (const auto& r : metrics) {
        const std::size_t w = r.iter / window;
        rows[w].mean_m_c += r.m_c;
        rows[w].mean_degree += r.degree;
        rows[w].mean_applied_rate += r.applied ? 1.0 : 0.0;
        ++counts[w];
    }
    for (std::size_t w = 0; w < n_windows; ++w) {
        if (counts[w] == 0)
            throw EmissionError("flow channel: window " + std::to_string(w) + " has no rows");
        const auto n = static_cast<double>(counts[w]);
        rows[w].mean_m_c /= n;
        rows[w].mean_degree /= n;
        rows[w].mean_applied_rate /= n;
    }
    return rows;
}

std::size_t emit_flow_channel(const std::vector<MetricsRecord>& metrics,
                              const std::string& out_dir, std::size_t window, bool timestamp) {
    const auto rows = flow_channel_windows(metrics, window);
    std::filesystem::create_directories(out_dir);

    auto csv = open_out(out_dir + "/flow_channel.csv");
    csv << "window_start_iter,mean_m_c,mean_degree,mean_applied_rate\n";
    for (const auto& r : rows)
        csv << r.window_start_iter << ',' << format_double(r.mean_m_c) << ','
            << format_double(r.mean_degree) << ',' << format_double(r.mean_applied_rate) << '\n';
    if (!csv) throw EmissionError("write failed for flow_channel.csv");

    auto svg = open_out(out_dir + "/flow_channel.svg");
    svg_header(svg, timestamp, "Capability vs realized augmentation rate");
    PlotFrame frame;
    svg_axes(svg, frame, "windowed capability", "windowed applied rate");
    const std::size_t n = rows.size();
    for (std::size_t i = 0; i < n; ++i) {
        const double t = n > 1 ? static_cast<double>(i) / static_cast<double>(n - 1) : 0.0;
        svg << "  <circle cx=\"" << fmt_coord(frame.sx(rows[i].mean_m_c)) << "\" cy=\""
            << fmt_coord(frame.sy(rows[i].mean_applied_rate)) << "\" r=\"4\" fill=\""
            << ramp_color(t) << "\" fill-opacity=\"0.8\"/>\n";
    }
    svg << "</svg>\n";
    if (!svg) throw EmissionError("write failed for flow_channel.svg");
    return rows.size();
}

std::size_t emit_loss_curves(const std::vector<MetricsRecord>& no_da,
                             const std::vector<MetricsRecord>& modify,
                             const std::vector<MetricsRecord>& strong_da,
                             const std::string& out_dir, std::size_t window, bool timestamp) {
    const auto loss_a = per_iteration_loss(no_da);
    const auto loss_b = per_iteration_loss(modify);
    const auto loss_c = per_iteration_loss(strong_da);
    if (loss_a.empty() || loss_a.size() != loss_b.size() || loss_a.size() != loss_c.size())
        throw EmissionError("loss curves: runs cover " + std::to_string(loss_a.size()) + ", " +
                            std::to_string(loss_b.size()) + " and " +
                            std::to_string(loss_c.size()) +
                            " iterations; they must match and be non-empty");
    const auto smooth_a = trailing_mean(loss_a, window);
    const auto smooth_b = trailing_mean(loss_b, window);
    const auto smooth_c = trailing_mean(loss_c, window);

    std::filesystem::create_directories(out_dir);
    auto csv = open_out(out_dir + "/loss_curves.csv");
    csv << "iter,loss_no_da,loss_modify,loss_strong_da\n";
    for (std::size_t i = 0; i < smooth_a.size(); ++i)
        csv << i << ',' << format_double(smooth_a[i]) << ',' << format_double(smooth_b[i]) << ','
            << format_double(smooth_c[i]) << '\n';
    if (!csv) throw EmissionError("write failed for loss_curves.csv");

    auto svg = open_out(out_dir + "/loss_curves.svg");
    svg_header(svg, timestamp, "Smoothed training loss");
    PlotFrame frame;
    frame.xmax = static_cast<double>(smooth_a.size() - 1);
    if (frame.xmax == 0.0) frame.xmax = 1.0;
    double ymax = 0.0;
    for (const auto* series : {&smooth_a, &smooth_b, &smooth_c})
        for (double v : *series) ymax = std::max(ymax, v);
    frame.ymax = ymax > 0.0 ? ymax * 1.05 : 1.0;
    svg_axes(svg, frame, "iteration", "loss");
    const struct {
        const std::vector<double>* series;
        const char* color;
        const char* label;
    } curves[] = {
        {&smooth_a, "#eead0e", "no_da"},
        {&smooth_b, "#3cb371", "modify"},
        {&smooth_c, "#ff0000", "strong_da"},
    };
    int legend_y = 54;
    for (const auto& curve : curves) {
        svg << "  <polyline fill=\"none\" stroke=\"" << curve.color << "\" stroke-width=\"1.5\" "
               "points=\"";
        for (std::size_t i = 0; i < curve.series->size(); ++i) {
            if (i) svg << ' ';
            svg << fmt_coord(frame.sx(static_cast<double>(i))) << ','
                << fmt_coord(frame.sy((*curve.series)[i]));
        }
        svg << "\"/>\n";
        svg << "  <rect x=\"540\" y=\"" << legend_y - 9 << "\" width=\"12\" height=\"12\" fill=\""
            << curve.color << "\"/>\n";
        svg << "  <text x=\"556\" y=\"" << legend_y + 1
            << "\" font-family=\"sans-serif\" font-size=\"12\">" << curve.label << "</text>\n";
        legend_y += 18;
    }
    svg << "</svg>\n";
    if (!svg) throw EmissionError("write failed for loss_curves.svg");
    return smooth_a.size();
}

}  // namespace modify
