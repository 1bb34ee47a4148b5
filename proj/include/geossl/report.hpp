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

#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace geossl {

// Parsed metrics CSV, schema-checked against the harness header.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};

// Parses and validates one metrics CSV. Throws std::invalid_argument
// with row and column diagnostics on malformed input, including an
// empty file or a file with a header but no rows.
CsvTable parse_metrics_csv(const std::string& text);

// Per grid point statistics across seeds, computed from completed-run
// rows (numeric seed and a non-empty knn cell). Precomputed mean/std
// rows in the CSV are ignored so nothing is counted twice.
struct PointStats {
    std::string name;
    std::size_t runs = 0;
    double knn_mean = 0.0;
    double knn_std = 0.0;
    double linear_mean = 0.0;
    double linear_std = 0.0;
    std::optional<double> spearman_mean;
    std::optional<double> spearman_std;
    double loss_mean = 0.0;
    double loss_std = 0.0;
};

struct AxisSummary {
    std::string axis;
    std::vector<PointStats> points;  // first-appearance order
};

// Collapses a table to per-point statistics. Throws when the table has
// no completed runs.
AxisSummary summarize_axis(const CsvTable& table);

// Standalone SVG line chart of one metric across the axis grid: mean
// line with a +/- one standard deviation band. Metrics: knn_acc_macro,
// linear_acc_macro, spearman_geo, loss_total. Throws when no point
// carries the metric.
std::string render_chart_svg(const AxisSummary& summary, const std::string& metric);

// Fixed-width text table over one or more axes.
std::string summary_table_text(const std::vector<AxisSummary>& axes);

}  // namespace geossl
