// Copyright (c) 2026, The relcurate Authors
// SPDX-License-Identifier: Apache-2.0

#include "relcurate/report.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "relcurate/config.hpp"
#include "relcurate/error.hpp"
#include "relcurate/io.hpp"
#include "relcurate/manifest.hpp"

namespace relcurate {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

namespace {

// Shortest text that parses back to the same double.
std::string num(double v) {
    char buf[40];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

// Splits a CSV file into rows of fields, checking the header.
std::vector<std::vector<std::string>> read_csv(const fs::path& path, std::string_view header) {
    std::istringstream in(read_file(path));
    std::string line;
    if (!std::getline(in, line) || line != header) {
        throw ParseError(1, path.string() + ": expected header '" + std::string(header) + "'");
    }
    const auto width = static_cast<std::size_t>(std::count(header.begin(), header.end(), ',') + 1);
    std::vector<std::vector<std::string>> rows;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::vector<std::string> fields;
        std::stringstream ss(line);
        std::string f;
        while (std::getline(ss, f, ',')) fields.push_back(f);
        if (fields.size() != width) {
            throw ParseError(line_no, path.string() + ": expected " + std::to_string(width) +
                                          " fields");
        }
        rows.push_back(std::move(fields));
    }
    return rows;
}

double to_double(const std::string& s) {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw Error("bad number '" + s + "'");
    return v;
}

constexpr std::string_view kLossHeader = "step,l_r,l_c,total";
constexpr std::string_view kSweepHeader = "fraction,selected,post_mean_i2c,post_median_i2c";
constexpr std::string_view kAblationHeader =
    "seed,arm,enable_crm,enable_clm,pre_mean_i2c,post_mean_i2c,post_median_i2c";

std::vector<double> scores_of(const fs::path& path) {
    std::vector<double> out;
    for (const auto& s : load_scored(path)) out.push_back(s.i2c);
    return out;
}

}  // namespace

I2cSummary summarize_i2c(std::span<const double> scores) {
    I2cSummary s;
    s.count = scores.size();
    if (scores.empty()) return s;
    std::vector<double> sorted(scores.begin(), scores.end());
    std::sort(sorted.begin(), sorted.end());
    double sum = 0.0;
    for (double v : sorted) sum += v;
    s.mean = sum / static_cast<double>(sorted.size());
    const auto n = sorted.size();
    s.median = n % 2 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
    s.min = sorted.front();
    s.max = sorted.back();
    return s;
}

void write_loss_csv(const fs::path& path, std::span<const LossPoint> curve) {
    std::string out(kLossHeader);
    out += '\n';
    for (const auto& p : curve) {
        out += std::to_string(p.step) + ',' + num(p.loss.l_r) + ',' + num(p.loss.l_c) + ',' +
               num(p.loss.total) + '\n';
    }
    write_file_atomic(path, out);
}

std::vector<LossPoint> read_loss_csv(const fs::path& path) {
    std::vector<LossPoint> out;
    for (const auto& r : read_csv(path, kLossHeader)) {
        out.push_back({std::stoi(r[0]), {to_double(r[1]), to_double(r[2]), to_double(r[3])}});
    }
    return out;
}

void write_sweep_csv(const fs::path& path, std::span<const SweepRow> rows) {
    std::string out(kSweepHeader);
    out += '\n';
    for (const auto& r : rows) {
        out += num(r.fraction) + ',' + std::to_string(r.selected) + ',' + num(r.post_mean_i2c) +
               ',' + num(r.post_median_i2c) + '\n';
    }
    write_file_atomic(path, out);
}

std::vector<SweepRow> read_sweep_csv(const fs::path& path) {
    std::vector<SweepRow> out;
    for (const auto& r : read_csv(path, kSweepHeader)) {
        out.push_back({to_double(r[0]), std::stoul(r[1]), to_double(r[2]), to_double(r[3])});
    }
    return out;
}

void write_ablation_csv(const fs::path& path, std::span<const AblationRow> rows) {
    std::string out(kAblationHeader);
    out += '\n';
    for (const auto& r : rows) {
        out += std::to_string(r.seed) + ',' + r.arm + ',' + (r.enable_crm ? "1" : "0") + ',' +
               (r.enable_clm ? "1" : "0") + ',' + num(r.pre_mean_i2c) + ',' +
               num(r.post_mean_i2c) + ',' + num(r.post_median_i2c) + '\n';
    }
    write_file_atomic(path, out);
}

std::vector<AblationRow> read_ablation_csv(const fs::path& path) {
    std::vector<AblationRow> out;
    for (const auto& r : read_csv(path, kAblationHeader)) {
        out.push_back({std::stoull(r[0]), r[1], r[2] == "1", r[3] == "1", to_double(r[4]),
                       to_double(r[5]), to_double(r[6])});
    }
    return out;
}

std::vector<HistogramBin> i2c_histogram(std::span<const double> pre, std::span<const double> post,
                                        int bins) {
    if (bins < 1) throw Error("histogram needs at least one bin");
    std::vector<HistogramBin> out;
    if (pre.empty() && post.empty()) return out;
    double lo = INFINITY, hi = -INFINITY;
    for (auto set : {pre, post}) {
        for (double v : set) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
    }
    if (hi <= lo) hi = lo + 1.0;
    const double width = (hi - lo) / bins;
    for (int b = 0; b < bins; ++b) {
        out.push_back({lo + b * width, b + 1 == bins ? hi : lo + (b + 1) * width, 0, 0});
    }
    auto bin_of = [&](double v) {
        const auto b = static_cast<int>((v - lo) / width);
        return static_cast<std::size_t>(std::clamp(b, 0, bins - 1));
    };
    for (double v : pre) ++out[bin_of(v)].pre;
    for (double v : post) ++out[bin_of(v)].post;
    return out;
}

MetricsReport emit_report(const fs::path& workdir) {
    MetricsReport report;
    const auto at = [&](Stage s, const char* name) { return workdir / artifact_path(s, name); };
    const auto manifest = read_manifest(workdir);

    const fs::path sweep_file = workdir / kSweepFile;
    const fs::path ablation_file = workdir / kAblationFile;
    if (fs::exists(sweep_file)) report.sweep = read_sweep_csv(sweep_file);
    if (fs::exists(ablation_file)) report.ablation = read_ablation_csv(ablation_file);

    const bool have_pipeline =
        fs::exists(at(Stage::score, artifact::kScored)) &&
        fs::exists(at(Stage::generate_final, artifact::kScored));
    if (!have_pipeline && report.sweep.empty() && report.ablation.empty()) {
        for (auto [s, name] : {std::pair{Stage::score, artifact::kScored},
                               std::pair{Stage::generate_final, artifact::kScored}}) {
            if (!fs::exists(at(s, name))) {
                throw StageError("report", "missing artifact " + artifact_path(s, name));
            }
        }
    }

    std::vector<double> pre, post;
    if (have_pipeline) {
        auto status = [&](Stage s) {
            const auto e = latest_entry(manifest, std::string(to_string(s)));
            return e ? e->status : std::string("unrecorded");
        };
        auto count_if_present = [&](Stage s, const char* name, auto loader) -> std::size_t {
            return fs::exists(at(s, name)) ? loader(at(s, name)).size() : 0;
        };
        pre = scores_of(at(Stage::score, artifact::kScored));
        post = scores_of(at(Stage::generate_final, artifact::kScored));

        const auto dropped = count_if_present(Stage::filter, artifact::kDropped, load_dropped);
        std::size_t groups = 0;
        if (fs::exists(at(Stage::partition, artifact::kPartitions))) {
            for (const auto& p : load_partitions(at(Stage::partition, artifact::kPartitions))) {
                groups += p.skipped_for_contrastive ? 0 : 1;
            }
        }
        const auto clm_status = status(Stage::train_clm);
        report.stages = {
            {"generate_initial", status(Stage::generate_initial),
             count_if_present(Stage::generate_initial, artifact::kSamples, load_samples),
             "samples"},
            {"filter", status(Stage::filter),
             count_if_present(Stage::filter, artifact::kKept, load_samples),
             "kept, " + std::to_string(dropped) + " dropped"},
            {"score", status(Stage::score), pre.size(), "scored"},
            {"partition", status(Stage::partition), groups, "contrastive groups"},
            {"train_crm", status(Stage::train_crm),
             count_if_present(Stage::train_crm, artifact::kSelected, load_scored), "selected"},
            {"train_clm", clm_status, clm_status == "ok" ? groups : 0, "groups trained"},
            {"generate_final", status(Stage::generate_final), post.size(), "samples"},
        };
        report.pre = summarize_i2c(pre);
        report.post = summarize_i2c(post);

        for (Stage s : {Stage::train_crm, Stage::train_clm}) {
            const auto path = at(s, artifact::kLoss);
            if (!fs::exists(path)) continue;
            std::string phase = s == Stage::train_crm ? "crm" : "clm";
            // A joint run records both terms in the CRM stage.
            if (s == Stage::train_crm && clm_status == "skipped(joint)") phase = "joint";
            report.loss_curves[phase] = read_loss_csv(path);
        }
    }

    const fs::path out_dir = workdir / stage_dir(Stage::report);
    fs::create_directories(out_dir);

    // summary.txt
    std::ostringstream sum;
    sum << "relcurate report\n\n";
    if (have_pipeline) {
        sum << "stages\n";
        for (const auto& s : report.stages) {
            char line[160];
            std::snprintf(line, sizeof line, "  %-17s %-20s %6zu %s\n", s.stage.c_str(),
                          s.status.c_str(), s.count, s.what.c_str());
            sum << line;
        }
        sum << "  report            ok\n\n";
        char line[200];
        std::snprintf(line, sizeof line,
                      "i2c before training: n=%zu mean=%.6f median=%.6f\n"
                      "i2c after training:  n=%zu mean=%.6f median=%.6f\n"
                      "change in mean:      %+.6f\n",
                      report.pre.count, report.pre.mean, report.pre.median, report.post.count,
                      report.post.mean, report.post.median, report.post.mean - report.pre.mean);
        sum << line;
        for (const auto& [phase, curve] : report.loss_curves) {
            if (curve.empty()) continue;
            std::snprintf(line, sizeof line, "%s loss: %.6f -> %.6f over %zu steps\n",
                          phase.c_str(), curve.front().loss.total, curve.back().loss.total,
                          curve.size());
            sum << line;
        }
    }
    if (!report.sweep.empty()) {
        sum << "\nselection fraction sweep\n  fraction  selected  post_mean_i2c  post_median_i2c\n";
        for (const auto& r : report.sweep) {
            char line[120];
            std::snprintf(line, sizeof line, "  %8.4f  %8zu  %13.6f  %15.6f\n", r.fraction,
                          r.selected, r.post_mean_i2c, r.post_median_i2c);
            sum << line;
        }
    }
    if (!report.ablation.empty()) {
        sum << "\nablation grid\n  seed  arm        pre_mean_i2c  post_mean_i2c\n";
        for (const auto& r : report.ablation) {
            char line[120];
            std::snprintf(line, sizeof line, "  %4llu  %-9s  %12.6f  %13.6f\n",
                          static_cast<unsigned long long>(r.seed), r.arm.c_str(), r.pre_mean_i2c,
                          r.post_mean_i2c);
            sum << line;
        }
    }
    write_file_atomic(out_dir / artifact::kSummary, sum.str());

    // metrics.json
    ojson m;
    auto summary_json = [](const I2cSummary& s) {
        return ojson{{"count", s.count}, {"mean", s.mean}, {"median", s.median},
                     {"min", s.min},     {"max", s.max}};
    };
    m["stages"] = ojson::array();
    for (const auto& s : report.stages) {
        m["stages"].push_back({{"stage", s.stage}, {"status", s.status}, {"count", s.count}});
    }
    if (have_pipeline) {
        m["i2c_pre"] = summary_json(report.pre);
        m["i2c_post"] = summary_json(report.post);
    }
    m["loss_curves"] = ojson::object();
    for (const auto& [phase, curve] : report.loss_curves) {
        ojson arr = ojson::array();
        for (const auto& p : curve) arr.push_back(p.loss.total);
        m["loss_curves"][phase] = arr;
    }
    m["sweep"] = ojson::array();
    for (const auto& r : report.sweep) {
        m["sweep"].push_back({{"fraction", r.fraction},
                              {"selected", r.selected},
                              {"post_mean_i2c", r.post_mean_i2c},
                              {"post_median_i2c", r.post_median_i2c}});
    }
    m["ablation"] = ojson::array();
    for (const auto& r : report.ablation) {
        m["ablation"].push_back({{"seed", r.seed},
                                 {"arm", r.arm},
                                 {"pre_mean_i2c", r.pre_mean_i2c},
                                 {"post_mean_i2c", r.post_mean_i2c}});
    }
    write_file_atomic(out_dir / artifact::kMetrics, m.dump(2) + "\n");

    // loss_curves.csv
    std::string curves = "phase,step,l_r,l_c,total\n";
    for (const auto& [phase, curve] : report.loss_curves) {
        for (const auto& p : curve) {
            curves += phase + ',' + std::to_string(p.step) + ',' + num(p.loss.l_r) + ',' +
                      num(p.loss.l_c) + ',' + num(p.loss.total) + '\n';
        }
    }
    write_file_atomic(out_dir / artifact::kLossCurves, curves);

    // i2c_histogram.csv
    std::string hist = "bin_lo,bin_hi,pre_count,post_count\n";
    for (const auto& b : i2c_histogram(pre, post)) {
        hist += num(b.lo) + ',' + num(b.hi) + ',' + std::to_string(b.pre) + ',' +
                std::to_string(b.post) + '\n';
    }
    write_file_atomic(out_dir / artifact::kHistogram, hist);

    if (!report.sweep.empty()) write_sweep_csv(out_dir / kSweepFile, report.sweep);
    if (!report.ablation.empty()) write_ablation_csv(out_dir / kAblationFile, report.ablation);
    return report;
}

}  // namespace relcurate
