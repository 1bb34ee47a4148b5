// Licensed under the Apache License, Version 2.0 (the "License"); you
// may not use this file except in compliance with the License.  You
// may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or
// implied.  See the License for the specific language governing
// permissions and limitations under the License.

#include "geossl/report.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <map>
#include <sstream>
#include <stdexcept>

#include "geossl/harness.hpp"
#include "geossl/textio.hpp"

namespace geossl {

namespace {

// Column indices in the fixed harness schema.
enum Col : std::size_t {
    kColRunId = 0,
    kColAxis = 1,
    kColPoint = 2,
    kColSeed = 3,
    kColEpoch = 8,
    kColLossTotal = 11,
    kColKnn = 12,
    kColLinear = 13,
    kColSpearman = 14,
    kColWallclock = 15,
};

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

bool is_numeric(const std::string& s) {
    if (s.empty()) return false;
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    return res.ec == std::errc{} && res.ptr == s.data() + s.size();
}

// Completed-run rows: numeric seed and a final evaluation in place.
bool is_run_row(const std::vector<std::string>& row) {
    return is_numeric(row[kColSeed]) && !row[kColKnn].empty();
}

struct Moments {
    double mean = 0.0;
    double sd = 0.0;
    std::size_t count = 0;
};

Moments moments(const std::vector<double>& vals) {
    Moments m;
    m.count = vals.size();
    if (vals.empty()) return m;
    for (double v : vals) m.mean += v;
    m.mean /= static_cast<double>(vals.size());
    double var = 0.0;
    for (double v : vals) var += (v - m.mean) * (v - m.mean);
    m.sd = vals.size() > 1 ? std::sqrt(var / static_cast<double>(vals.size() - 1)) : 0.0;
    return m;
}

std::string short_number(double v) {
    std::array<char, 48> buf{};
    const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v,
                                   std::chars_format::general, 4);
    return std::string(buf.data(), res.ptr);
}

std::string xml_escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

struct MetricView {
    std::vector<std::string> names;
    std::vector<double> mean;
    std::vector<double> sd;
};

MetricView metric_view(const AxisSummary& summary, const std::string& metric) {
    MetricView view;
    for (const PointStats& p : summary.points) {
        double mean = 0.0;
        double sd = 0.0;
        bool have = true;
        if (metric == "knn_acc_macro") {
            mean = p.knn_mean;
            sd = p.knn_std;
        } else if (metric == "linear_acc_macro") {
            mean = p.linear_mean;
            sd = p.linear_std;
        } else if (metric == "loss_total") {
            mean = p.loss_mean;
            sd = p.loss_std;
        } else if (metric == "spearman_geo") {
            have = p.spearman_mean.has_value();
            if (have) {
                mean = *p.spearman_mean;
                sd = *p.spearman_std;
            }
        } else {
            throw std::invalid_argument("chart: unknown metric '" + metric + "'");
        }
        if (!have) continue;
        view.names.push_back(p.name);
        view.mean.push_back(mean);
        view.sd.push_back(sd);
    }
    if (view.names.empty()) {
        throw std::invalid_argument("chart: no values for metric '" + metric + "'");
    }
    return view;
}

}  // namespace

CsvTable parse_metrics_csv(const std::string& text) {
    std::stringstream ss(text);
    std::string line;
    CsvTable table;
    std::size_t line_no = 0;
    while (std::getline(ss, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> fields = split_fields(line);
        if (table.header.empty()) {
            const std::vector<std::string> want = split_fields(kCsvHeader);
            if (fields.size() != want.size()) {
                throw std::invalid_argument(
                    "csv row 1: header has " + std::to_string(fields.size())
                    + " columns, expected " + std::to_string(want.size()));
            }
            for (std::size_t c = 0; c < want.size(); ++c) {
                if (fields[c] != want[c]) {
                    throw std::invalid_argument(
                        "csv row 1: column " + std::to_string(c + 1) + " is '"
                        + fields[c] + "', expected '" + want[c] + "'");
                }
            }
            table.header = std::move(fields);
            continue;
        }
        if (fields.size() != table.header.size()) {
            throw std::invalid_argument(
                "csv row " + std::to_string(line_no) + ": "
                + std::to_string(fields.size()) + " columns, expected "
                + std::to_string(table.header.size()));
        }
        for (std::size_t c : {kColLossTotal, kColKnn, kColLinear, kColSpearman,
                              kColWallclock}) {
            if (!fields[c].empty() && !is_numeric(fields[c])) {
                throw std::invalid_argument(
                    "csv row " + std::to_string(line_no) + ": column "
                    + std::to_string(c + 1) + " ('" + table.header[c]
                    + "') holds non-numeric value '" + fields[c] + "'");
            }
        }
        table.rows.push_back(std::move(fields));
    }
    if (table.header.empty()) {
        throw std::invalid_argument("csv is empty: no header row");
    }
    if (table.rows.empty()) {
        throw std::invalid_argument("csv has a header but no data rows");
    }
    return table;
}

AxisSummary summarize_axis(const CsvTable& table) {
    AxisSummary summary;
    std::vector<std::string> order;
    std::map<std::string, std::vector<const std::vector<std::string>*>> groups;
    for (const auto& row : table.rows) {
        if (!is_run_row(row)) continue;
        if (summary.axis.empty()) summary.axis = row[kColAxis];
        const std::string& point = row[kColPoint];
        if (groups.find(point) == groups.end()) order.push_back(point);
        groups[point].push_back(&row);
    }
    if (order.empty()) {
        throw std::invalid_argument("csv has no completed runs to summarize");
    }
    for (const std::string& point : order) {
        PointStats st;
        st.name = point;
        std::vector<double> knn;
        std::vector<double> linear;
        std::vector<double> spearman;
        std::vector<double> loss;
        for (const auto* row : groups[point]) {
            knn.push_back(parse_double((*row)[kColKnn], "knn_acc_macro"));
            if (!(*row)[kColLinear].empty()) {
                linear.push_back(parse_double((*row)[kColLinear], "linear_acc_macro"));
            }
            if (!(*row)[kColSpearman].empty()) {
                spearman.push_back(parse_double((*row)[kColSpearman], "spearman_geo"));
            }
            loss.push_back(parse_double((*row)[kColLossTotal], "loss_total"));
        }
        st.runs = knn.size();
        const Moments mk = moments(knn);
        st.knn_mean = mk.mean;
        st.knn_std = mk.sd;
        const Moments ml = moments(linear);
        st.linear_mean = ml.mean;
        st.linear_std = ml.sd;
        const Moments mt = moments(loss);
        st.loss_mean = mt.mean;
        st.loss_std = mt.sd;
        if (!spearman.empty()) {
            const Moments ms = moments(spearman);
            st.spearman_mean = ms.mean;
            st.spearman_std = ms.sd;
        }
        summary.points.push_back(std::move(st));
    }
    return summary;
}

std::string render_chart_svg(const AxisSummary& summary, const std::string& metric) {
    const MetricView view = metric_view(summary, metric);
    const std::size_t n = view.names.size();

    const double width = 640.0;
    const double height = 400.0;
    const double left = 70.0;
    const double right = width - 24.0;
    const double top = 44.0;
    const double bottom = height - 72.0;

    double lo = view.mean[0] - view.sd[0];
    double hi = view.mean[0] + view.sd[0];
    for (std::size_t i = 1; i < n; ++i) {
        lo = std::min(lo, view.mean[i] - view.sd[i]);
        hi = std::max(hi, view.mean[i] + view.sd[i]);
    }
    if (hi == lo) {
        const double pad = std::max(0.05, std::abs(hi) * 0.1);
        lo -= pad;
        hi += pad;
    } else {
        const double pad = 0.08 * (hi - lo);
        lo -= pad;
        hi += pad;
    }

    auto xpos = [&](std::size_t i) {
        if (n == 1) return 0.5 * (left + right);
        return left + (right - left) * static_cast<double>(i) / static_cast<double>(n - 1);
    };
    auto ypos = [&](double v) { return bottom - (bottom - top) * (v - lo) / (hi - lo); };

    std::string svg;
    svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"400\" "
           "viewBox=\"0 0 640 400\" role=\"img\">\n";
    svg += "  <rect width=\"640\" height=\"400\" fill=\"#ffffff\"/>\n";
    svg += "  <text x=\"320\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" "
           "font-size=\"16\">" + xml_escape(metric + " by " + summary.axis) + "</text>\n";

    // Horizontal grid lines with y tick labels.
    for (int t = 0; t <= 4; ++t) {
        const double v = lo + (hi - lo) * static_cast<double>(t) / 4.0;
        const double y = ypos(v);
        svg += "  <line x1=\"" + short_number(left) + "\" y1=\"" + short_number(y)
               + "\" x2=\"" + short_number(right) + "\" y2=\"" + short_number(y)
               + "\" stroke=\"#dddddd\" stroke-width=\"1\"/>\n";
        svg += "  <text x=\"" + short_number(left - 8.0) + "\" y=\""
               + short_number(y + 4.0)
               + "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">"
               + short_number(v) + "</text>\n";
    }

    // Deviation band, drawn before the mean line.
    if (n > 1) {
        std::string path = "M";
        for (std::size_t i = 0; i < n; ++i) {
            path += " " + short_number(xpos(i)) + " "
                    + short_number(ypos(view.mean[i] + view.sd[i]));
        }
        for (std::size_t i = n; i-- > 0;) {
            path += " L " + short_number(xpos(i)) + " "
                    + short_number(ypos(view.mean[i] - view.sd[i]));
        }
        path += " Z";
        svg += "  <path d=\"" + path + "\" fill=\"#1f77b4\" fill-opacity=\"0.18\" "
               "stroke=\"none\"/>\n";
    }

    std::string line_points;
    for (std::size_t i = 0; i < n; ++i) {
        if (i != 0) line_points += " ";
        line_points += short_number(xpos(i)) + "," + short_number(ypos(view.mean[i]));
    }
    svg += "  <polyline points=\"" + line_points + "\" fill=\"none\" stroke=\"#1f77b4\" "
           "stroke-width=\"2\"/>\n";
    for (std::size_t i = 0; i < n; ++i) {
        svg += "  <circle cx=\"" + short_number(xpos(i)) + "\" cy=\""
               + short_number(ypos(view.mean[i]))
               + "\" r=\"3.5\" fill=\"#1f77b4\"/>\n";
        svg += "  <text x=\"" + short_number(xpos(i)) + "\" y=\""
               + short_number(bottom + 18.0)
               + "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\" "
               "transform=\"rotate(-24 " + short_number(xpos(i)) + " "
               + short_number(bottom + 18.0) + ")\">" + xml_escape(view.names[i])
               + "</text>\n";
    }

    // Axes on top of the grid.
    svg += "  <line x1=\"" + short_number(left) + "\" y1=\"" + short_number(top)
           + "\" x2=\"" + short_number(left) + "\" y2=\"" + short_number(bottom)
           + "\" stroke=\"#333333\" stroke-width=\"1\"/>\n";
    svg += "  <line x1=\"" + short_number(left) + "\" y1=\"" + short_number(bottom)
           + "\" x2=\"" + short_number(right) + "\" y2=\"" + short_number(bottom)
           + "\" stroke=\"#333333\" stroke-width=\"1\"/>\n";
    svg += "  <text x=\"320\" y=\"" + short_number(height - 10.0)
           + "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">"
           + xml_escape(summary.axis) + "</text>\n";
    svg += "</svg>\n";
    return svg;
}

std::string summary_table_text(const std::vector<AxisSummary>& axes) {
    auto cell = [](double mean, double sd) {
        return short_number(mean) + " +/- " + short_number(sd);
    };
    std::vector<std::array<std::string, 7>> rows;
    rows.push_back({"axis", "point", "runs", "knn", "linear", "spearman", "loss_total"});
    for (const AxisSummary& s : axes) {
        for (const PointStats& p : s.points) {
            rows.push_back({s.axis, p.name, std::to_string(p.runs),
                            cell(p.knn_mean, p.knn_std), cell(p.linear_mean, p.linear_std),
                            p.spearman_mean ? cell(*p.spearman_mean, *p.spearman_std)
                                            : std::string("-"),
                            cell(p.loss_mean, p.loss_std)});
        }
    }
    std::array<std::size_t, 7> width{};
    for (const auto& row : rows) {
        for (std::size_t c = 0; c < row.size(); ++c) {
            width[c] = std::max(width[c], row[c].size());
        }
    }
    std::string out;
    for (const auto& row : rows) {
        for (std::size_t c = 0; c < row.size(); ++c) {
            out += row[c];
            if (c + 1 < row.size()) {
                out.append(width[c] - row[c].size() + 2, ' ');
            }
        }
        out += '\n';
    }
    return out;
}

}  // namespace geossl
