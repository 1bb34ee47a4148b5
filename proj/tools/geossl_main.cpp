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

#include <CLI11.hpp>

#include <cstdint>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "geossl/config.hpp"
#include "geossl/harness.hpp"
#include "geossl/model.hpp"
#include "geossl/report.hpp"
#include "geossl/rng.hpp"
#include "geossl/synthdata.hpp"
#include "geossl/textio.hpp"

namespace fs = std::filesystem;
using namespace geossl;

namespace {

struct Flags {
    std::string config_path;
    std::string out;
    std::string checkpoint;
    std::string protocol;
    std::string axis;
    std::vector<std::string> csvs;
    std::uint64_t seed = 0;
    std::size_t threads = 0;
    bool force = false;
};

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in.good()) {
        throw std::runtime_error("cannot read '" + path.string() + "'");
    }
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_file(const fs::path& path, const std::string& body) {
    std::ofstream out(path, std::ios::binary);
    out << body;
    out.flush();
    if (!out.good()) {
        throw std::runtime_error("cannot write '" + path.string() + "'");
    }
}

std::string utc_stamp() {
    const std::time_t now = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[24];
    std::strftime(buf, sizeof buf, "%Y%m%dT%H%M%S", &tm);
    return buf;
}

// runs/run_<timestamp>_<config hash>; suffixed when a same-second rerun
// of the same config would collide.
fs::path make_run_dir(const std::string& out_root, const std::string& effective) {
    const fs::path root = out_root.empty() ? fs::path("runs") : fs::path(out_root);
    const std::string base =
        "run_" + utc_stamp() + "_" + hex16(fnv1a64(effective)).substr(0, 12);
    fs::path dir = root / base;
    for (int n = 2; fs::exists(dir); ++n) {
        dir = root / (base + "." + std::to_string(n));
    }
    fs::create_directories(dir);
    return dir;
}

// The [train] augmentation value stays symbolic in the config; a run
// needs the actual pipeline. "default" maps to the empty pipeline so
// the harness applies its geometric preset at the crop size.
RunConfig resolved_run(const AppConfig& cfg, const char* cmd) {
    if (cfg.dataset_dir.empty()) {
        throw std::runtime_error(std::string(cmd) + ": [dataset] dir is required");
    }
    RunConfig run = cfg.run;
    run.dataset_dir = cfg.dataset_dir;
    if (!cfg.augmentation.empty() && cfg.augmentation != "default") {
        run.augmentation = resolve_pipeline(cfg.augmentation, run.crop_size);
    }
    run.validate();
    return run;
}

int cmd_generate(const AppConfig& cfg, const Flags& flags) {
    const std::string dir = !flags.out.empty() ? flags.out : cfg.dataset_dir;
    if (dir.empty()) {
        throw std::runtime_error("generate: set --out or the [dataset] dir key");
    }
    const fs::path manifest_path = fs::path(dir) / "manifest.json";
    if (fs::exists(manifest_path) && !flags.force) {
        throw std::runtime_error("generate: '" + dir
                                 + "' already holds a dataset; pass --force to overwrite");
    }
    generate(cfg.synth, dir);

    const DatasetManifest m = load_manifest(dir);
    const std::uintmax_t want = static_cast<std::uintmax_t>(m.locations) * m.timestamps
                                * m.channels * m.height * m.width * sizeof(float);
    const std::uintmax_t got = fs::file_size(fs::path(dir) / "patches.bin");
    if (got != want) {
        throw std::runtime_error("generate: patch store is " + std::to_string(got)
                                 + " bytes, expected " + std::to_string(want));
    }
    std::cout << "dataset " << dir << ": " << m.locations << " locations x "
              << m.timestamps << " timestamps, " << m.channels << " channels "
              << m.height << "x" << m.width << ", " << m.classes << " classes, seed "
              << cfg.synth.seed << "\n";
    return 0;
}

int cmd_pretrain(const AppConfig& cfg, const Flags& flags) {
    const RunConfig run = resolved_run(cfg, "pretrain");
    const Dataset ds = load_dataset(cfg.dataset_dir);
    const RunResult res = pretrain(run, ds);

    const std::string effective = app_config_to_text(cfg);
    const fs::path dir = make_run_dir(flags.out, effective);
    write_file(dir / "config.ini", effective);
    write_file(dir / "report.csv", report_to_csv(run, res.report, "none", "single"));
    save_checkpoint((dir / "checkpoint.ck").string(), res.encoder, res.target);
    export_embeddings(res.encoder, ds, dir.string());

    // Read everything back so exit 0 vouches for the artifacts.
    static_cast<void>(load_checkpoint((dir / "checkpoint.ck").string()));
    static_cast<void>(summarize_axis(parse_metrics_csv(read_file(dir / "report.csv"))));
    static_cast<void>(parse_app_config(read_file(dir / "config.ini")));

    for (const EpochStats& e : res.report.epochs) {
        std::cout << "epoch " << e.epoch << "  loss_ssl " << format_double(e.loss_ssl)
                  << "  loss_reg " << format_double(e.loss_reg) << "  loss_total "
                  << format_double(e.loss_total) << "\n";
    }
    std::cout << "knn_acc_macro = " << format_double(res.report.knn_acc_macro) << "\n"
              << "linear_acc_macro = " << format_double(res.report.linear_acc_macro)
              << "\n";
    if (res.report.spearman_geo) {
        std::cout << "spearman_geo = " << format_double(*res.report.spearman_geo) << "\n";
    } else {
        std::cout << "spearman_geo = undefined (no anchor has two neighbours within "
                  << format_double(run.loss.d_max) << " km)\n";
    }
    std::cout << "wallclock_s = " << format_double(res.report.wallclock_s) << "\n"
              << "run directory: " << dir.string() << "\n";
    return 0;
}

int cmd_evaluate(const AppConfig& cfg, const Flags& flags) {
    if (cfg.dataset_dir.empty()) {
        throw std::runtime_error("evaluate: [dataset] dir is required");
    }
    const Dataset ds = load_dataset(cfg.dataset_dir);

    Encoder enc;
    if (!flags.checkpoint.empty()) {
        enc = load_checkpoint(flags.checkpoint).first;
    } else {
        EncoderConfig ecfg;
        ecfg.input_dim = ds.manifest.channels * cfg.run.crop_size * cfg.run.crop_size;
        ecfg.hidden_dim = cfg.run.hidden_dim;
        ecfg.feature_dim = cfg.run.feature_dim;
        ecfg.projection_dim = cfg.run.projection_dim;
        Rng rng(cfg.run.seed);
        enc = Encoder::init(ecfg, rng);
    }

    const SplitIndices& split = cfg.eval.split == "blocked" ? ds.manifest.blocked_split
                                                            : ds.manifest.random_split;
    const bool all = cfg.eval.protocol == "all";
    std::string lines = "encoder = "
                        + (flags.checkpoint.empty() ? "random(seed " + std::to_string(cfg.run.seed) + ")"
                                                    : flags.checkpoint)
                        + "\nsplit = " + cfg.eval.split + "\n";
    if (all || cfg.eval.protocol == "knn") {
        lines += "knn_acc_macro = "
                 + format_double(knn_evaluate(enc, ds, cfg.eval.k, cfg.eval.sharpening, &split))
                 + "\n";
    }
    if (all || cfg.eval.protocol == "linear") {
        lines += "linear_acc_macro = "
                 + format_double(linear_probe(enc, ds, cfg.eval.probe_epochs, &split)) + "\n";
    }
    if (all || cfg.eval.protocol == "spearman") {
        const std::optional<double> rho =
            spearman_alignment(enc, ds, cfg.run.loss.d_max, &split);
        lines += rho ? "spearman_geo = " + format_double(*rho) + "\n"
                     : std::string("spearman_geo = undefined (no qualifying pairs)\n");
    }
    std::cout << lines;
    if (!flags.out.empty()) {
        fs::create_directories(flags.out);
        const fs::path file = fs::path(flags.out) / "evaluation.txt";
        write_file(file, lines);
        std::cout << "written: " << file.string() << "\n";
    }
    return 0;
}

int cmd_ablate(const AppConfig& cfg, const Flags& flags, std::size_t threads) {
    const RunConfig base = resolved_run(cfg, "ablate");
    const AblationAxis axis = parse_ablation_axis(cfg.ablation.axis);
    const std::vector<AblationPoint> grid = default_grid(axis, base);
    const std::string csv = run_ablation(axis, grid, cfg.ablation.seeds, threads);

    const std::string effective = app_config_to_text(cfg);
    const fs::path dir = make_run_dir(flags.out, effective);
    write_file(dir / "config.ini", effective);
    write_file(dir / "ablation.csv", csv);
    static_cast<void>(summarize_axis(parse_metrics_csv(read_file(dir / "ablation.csv"))));

    std::cout << "axis " << cfg.ablation.axis << ": " << grid.size() << " grid points x "
              << cfg.ablation.seeds << " seeds\n"
              << "run directory: " << dir.string() << "\n";
    return 0;
}

int cmd_report(const Flags& flags) {
    // Parse every input before writing anything, so a malformed CSV
    // leaves no partial output behind.
    std::vector<AxisSummary> axes;
    std::vector<std::string> stems;
    for (const std::string& path : flags.csvs) {
        try {
            axes.push_back(summarize_axis(parse_metrics_csv(read_file(path))));
        } catch (const std::invalid_argument& e) {
            throw std::invalid_argument(path + ": " + e.what());
        }
        stems.push_back(fs::path(path).stem().string());
    }

    const fs::path out = flags.out.empty() ? fs::path("report") : fs::path(flags.out);
    fs::create_directories(out);
    static const char* kMetrics[] = {"knn_acc_macro", "linear_acc_macro",
                                     "spearman_geo", "loss_total"};
    for (std::size_t i = 0; i < axes.size(); ++i) {
        for (const char* metric : kMetrics) {
            std::string svg;
            try {
                svg = render_chart_svg(axes[i], metric);
            } catch (const std::invalid_argument&) {
                continue;  // no point carries this metric
            }
            const fs::path file = out / (stems[i] + "_" + metric + ".svg");
            write_file(file, svg);
            std::cout << "written: " << file.string() << "\n";
        }
    }
    const std::string table = summary_table_text(axes);
    write_file(out / "summary.txt", table);
    std::cout << "written: " << (out / "summary.txt").string() << "\n\n" << table;
    return 0;
}

std::string key_listing() {
    return "Configuration keys and defaults (sections map to --config files):\n\n"
           + app_config_to_text(AppConfig{});
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Workbench for geography-regularized self-supervised learning on "
                 "synthetic multispectral patches"};
    app.require_subcommand(1);
    app.footer(key_listing());

    Flags flags;
    std::vector<CLI::Option*> seed_opts;
    const auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--config", flags.config_path,
                        "INI configuration file; flags override file values");
        seed_opts.push_back(cmd->add_option(
            "--seed", flags.seed,
            "Override the dataset seed (generate) or the run seed (other commands)"));
        cmd->add_option("--out", flags.out, "Output directory");
        cmd->add_flag("--force", flags.force, "Overwrite existing outputs");
        cmd->add_option("--threads", flags.threads, "Worker threads for sweeps")
            ->envname("GEOSSL_THREADS");
    };

    CLI::App* gen = app.add_subcommand("generate", "Write a synthetic geo-tagged dataset");
    add_common(gen);
    CLI::App* pre = app.add_subcommand("pretrain", "Train an encoder into a run directory");
    add_common(pre);
    CLI::App* eva = app.add_subcommand("evaluate", "Score an encoder on a dataset");
    add_common(eva);
    eva->add_option("--checkpoint", flags.checkpoint,
                    "Encoder checkpoint; omitted means a fresh random encoder");
    eva->add_option("--protocol", flags.protocol, "knn | linear | spearman | all");
    CLI::App* abl = app.add_subcommand("ablate", "Sweep one axis into a metrics CSV");
    add_common(abl);
    abl->add_option("--axis", flags.axis,
                    "augmentation | cardinality | temporal | patch_size | alpha_dmax");
    CLI::App* rep = app.add_subcommand("report",
                                       "Render SVG charts and a text summary from CSVs");
    add_common(rep);
    rep->add_option("csv", flags.csvs, "Metrics CSV files")->required();

    CLI11_PARSE(app, argc, argv);

    bool seed_set = false;
    for (const CLI::Option* opt : seed_opts) seed_set |= opt->count() > 0;

    try {
        AppConfig cfg =
            flags.config_path.empty() ? AppConfig{} : load_app_config(flags.config_path);
        if (seed_set) {
            if (gen->parsed()) {
                cfg.synth.seed = flags.seed;
            } else {
                cfg.run.seed = flags.seed;
            }
        }
        if (!flags.protocol.empty()) cfg.eval.protocol = flags.protocol;
        if (!flags.axis.empty()) cfg.ablation.axis = flags.axis;
        validate_app_config(cfg);
        const std::size_t threads = flags.threads == 0 ? 1 : flags.threads;

        if (gen->parsed()) return cmd_generate(cfg, flags);
        if (pre->parsed()) return cmd_pretrain(cfg, flags);
        if (eva->parsed()) return cmd_evaluate(cfg, flags);
        if (abl->parsed()) return cmd_ablate(cfg, flags, threads);
        return cmd_report(flags);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
