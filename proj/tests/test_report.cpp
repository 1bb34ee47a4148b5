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

#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <string>

#include "geossl/harness.hpp"
#include "geossl/report.hpp"

using namespace geossl;

namespace {

std::string row(const std::string& point, const std::string& seed,
                const std::string& loss_total, const std::string& knn,
                const std::string& linear, const std::string& spearman) {
    return "r" + point + seed + ",temporal," + point + "," + seed
           + ",infonce,rank,0.48,2500,3,0.5,0.1," + loss_total + "," + knn + ","
           + linear + "," + spearman + ",12.5\n";
}

// Two grid points, two seeds each, plus precomputed mean/std rows and
// one per-epoch row that must all be skipped by the summarizer.
std::string sample_csv() {
    std::string text = std::string(kCsvHeader) + "\n";
    text += row("off", "11", "1.2", "0.70", "0.75", "");
    text += row("off", "12", "1.0", "0.80", "0.85", "");
    text += row("off", "mean", "99", "99", "99", "99");
    text += row("off", "std", "99", "99", "99", "99");
    text += row("on", "11", "0.8", "0.9", "0.9", "0.5");
    text += row("on", "12", "0.8", "0.9", "0.9", "0.7");
    text += row("on", "13", "0.8", "", "", "");  // unfinished run
    text += row("on", "mean", "99", "99", "99", "99");
    text += row("on", "std", "99", "99", "99", "99");
    return text;
}

template <typename Fn>
std::string thrown_message(Fn&& fn) {
    try {
        fn();
    } catch (const std::exception& e) {
        return e.what();
    }
    FAIL("expected an exception");
    return {};
}

}  // namespace

TEST_CASE("metrics csv parses and keeps every data row") {
    const CsvTable table = parse_metrics_csv(sample_csv());
    CHECK(table.header.size() == 16);
    CHECK(table.rows.size() == 9);
    CHECK(table.rows[0][2] == "off");
    CHECK(table.rows[0][3] == "11");
}

TEST_CASE("metrics csv diagnostics name the row and column") {
    const std::string short_row = thrown_message([] {
        parse_metrics_csv(std::string(kCsvHeader) + "\na,b,c\n");
    });
    CHECK(short_row.find("row 2") != std::string::npos);
    CHECK(short_row.find("3 columns, expected 16") != std::string::npos);

    const std::string bad_header = thrown_message([] {
        std::string header(kCsvHeader);
        header.replace(header.find("axis"), 4, "axes");
        parse_metrics_csv(header + "\n");
    });
    CHECK(bad_header.find("row 1") != std::string::npos);
    CHECK(bad_header.find("column 2") != std::string::npos);
    CHECK(bad_header.find("axes") != std::string::npos);

    const std::string bad_value = thrown_message([] {
        parse_metrics_csv(std::string(kCsvHeader) + "\n"
                          + row("off", "11", "1.0", "high", "0.5", ""));
    });
    CHECK(bad_value.find("row 2") != std::string::npos);
    CHECK(bad_value.find("knn_acc_macro") != std::string::npos);
    CHECK(bad_value.find("high") != std::string::npos);

    CHECK_THROWS_AS(static_cast<void>(parse_metrics_csv("")), std::invalid_argument);
    CHECK_THROWS_AS(static_cast<void>(parse_metrics_csv("\n\n")),
                    std::invalid_argument);
    const std::string no_rows = thrown_message([] {
        parse_metrics_csv(std::string(kCsvHeader) + "\n");
    });
    CHECK(no_rows.find("no data rows") != std::string::npos);
}

TEST_CASE("summarize_axis pools completed runs only") {
    const AxisSummary summary = summarize_axis(parse_metrics_csv(sample_csv()));
    CHECK(summary.axis == "temporal");
    REQUIRE(summary.points.size() == 2);

    const PointStats& off = summary.points[0];
    CHECK(off.name == "off");
    CHECK(off.runs == 2);
    CHECK(off.knn_mean == doctest::Approx(0.75));
    CHECK(off.knn_std == doctest::Approx(std::sqrt(0.005)));
    CHECK(off.linear_mean == doctest::Approx(0.80));
    CHECK(off.loss_mean == doctest::Approx(1.1));
    CHECK_FALSE(off.spearman_mean.has_value());

    const PointStats& on = summary.points[1];
    CHECK(on.name == "on");
    CHECK(on.runs == 2);
    CHECK(on.knn_mean == doctest::Approx(0.9));
    CHECK(on.knn_std == doctest::Approx(0.0));
    REQUIRE(on.spearman_mean.has_value());
    CHECK(*on.spearman_mean == doctest::Approx(0.6));
    CHECK(*on.spearman_std == doctest::Approx(std::sqrt(0.02)));
}

TEST_CASE("summarize_axis rejects tables without completed runs") {
    std::string text = std::string(kCsvHeader) + "\n";
    text += row("off", "mean", "1", "1", "1", "1");
    text += row("off", "11", "1.0", "", "", "");
    const std::string msg = thrown_message([&] {
        summarize_axis(parse_metrics_csv(text));
    });
    CHECK(msg.find("no completed runs") != std::string::npos);
}

TEST_CASE("chart renders a mean line with a deviation band") {
    const AxisSummary summary = summarize_axis(parse_metrics_csv(sample_csv()));
    const std::string svg = render_chart_svg(summary, "knn_acc_macro");
    CHECK(svg.find("<svg") == 0);
    CHECK(svg.find("</svg>") != std::string::npos);
    CHECK(svg.find("<polyline") != std::string::npos);
    CHECK(svg.find("<path") != std::string::npos);  // the band
    CHECK(svg.find("<circle") != std::string::npos);
    CHECK(svg.find(">off<") != std::string::npos);
    CHECK(svg.find(">on<") != std::string::npos);
    CHECK(svg.find("knn_acc_macro by temporal") != std::string::npos);

    // Spearman exists for one point, so the chart narrows to it.
    const std::string sp = render_chart_svg(summary, "spearman_geo");
    CHECK(sp.find(">on<") != std::string::npos);
    CHECK(sp.find(">off<") == std::string::npos);

    CHECK_THROWS_AS(static_cast<void>(render_chart_svg(summary, "accuracy")),
                    std::invalid_argument);
}

TEST_CASE("chart rejects a metric no point carries") {
    std::string text = std::string(kCsvHeader) + "\n";
    text += row("off", "11", "1.0", "0.7", "0.7", "");
    const AxisSummary summary = summarize_axis(parse_metrics_csv(text));
    CHECK_THROWS_AS(static_cast<void>(render_chart_svg(summary, "spearman_geo")),
                    std::invalid_argument);
    // A single point still renders: centered marker, no band.
    const std::string svg = render_chart_svg(summary, "knn_acc_macro");
    CHECK(svg.find("<circle") != std::string::npos);
    CHECK(svg.find("<polyline") != std::string::npos);
}

TEST_CASE("summary text lines up columns across axes") {
    const AxisSummary a = summarize_axis(parse_metrics_csv(sample_csv()));
    std::string other = std::string(kCsvHeader) + "\n";
    other += "x,cardinality,1/8,21,infonce,none,1,2500,3,0.5,0,0.5,0.66,0.6,,9\n";
    const AxisSummary b = summarize_axis(parse_metrics_csv(other));

    const std::string text = summary_table_text({a, b});
    CHECK(text.find("axis") == 0);
    CHECK(text.find("temporal") != std::string::npos);
    CHECK(text.find("cardinality") != std::string::npos);
    CHECK(text.find("1/8") != std::string::npos);
    CHECK(text.find("+/-") != std::string::npos);

    // Missing spearman renders as a bare dash.
    bool dash_cell = false;
    for (std::size_t pos = text.find('-'); pos != std::string::npos;
         pos = text.find('-', pos + 1)) {
        const bool left_ok = pos == 0 || text[pos - 1] == ' ';
        const bool right_ok = pos + 1 >= text.size() || text[pos + 1] == ' '
                              || text[pos + 1] == '\n';
        if (left_ok && right_ok) {
            dash_cell = true;
            break;
        }
    }
    CHECK(dash_cell);
}

TEST_CASE("single-run csv from the harness feeds the summarizer") {
    RunConfig cfg;
    cfg.dataset_dir = "data";
    RunReport report;
    report.epochs = {{1, 0.6, 0.2, 0.5}, {2, 0.5, 0.2, 0.4}};
    report.knn_acc_macro = 0.81;
    report.linear_acc_macro = 0.84;
    report.spearman_geo = 0.33;
    report.wallclock_s = 2.5;

    const std::string csv = report_to_csv(cfg, report, "none", "single");
    const AxisSummary summary = summarize_axis(parse_metrics_csv(csv));
    REQUIRE(summary.points.size() == 1);
    CHECK(summary.points[0].runs == 1);  // epoch rows carry no metrics
    CHECK(summary.points[0].knn_mean == doctest::Approx(0.81));
    CHECK(summary.points[0].knn_std == 0.0);
    REQUIRE(summary.points[0].spearman_mean.has_value());
    CHECK(*summary.points[0].spearman_mean == doctest::Approx(0.33));
}
