// Copyright (c) 2026, The relcurate Authors
// SPDX-License-Identifier: Apache-2.0

#include "relcurate/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <map>

#include "relcurate/checkpoint.hpp"
#include "relcurate/error.hpp"
#include "relcurate/filter.hpp"
#include "relcurate/hashing.hpp"
#include "relcurate/io.hpp"
#include "relcurate/relevance.hpp"
#include "relcurate/rng.hpp"
#include "relcurate/toy_model.hpp"
#include "relcurate/toy_world.hpp"

namespace relcurate {

namespace fs = std::filesystem;

namespace {

constexpr const char* kOk = "ok";
constexpr const char* kSkippedAblation = "skipped(ablation)";
constexpr const char* kSkippedJoint = "skipped(joint)";

constexpr Stage kSharedStages[] = {Stage::generate_initial, Stage::filter, Stage::score,
                                   Stage::partition};

Stage phase_stage(Phase p) { return p == Phase::crm ? Stage::train_crm : Stage::train_clm; }

// Training stages in execution order. Phases left out of phase_order (only
// allowed when disabled) run afterwards as skips.
std::vector<Stage> training_chain(const PipelineConfig& cfg) {
    std::vector<Stage> chain;
    if (!cfg.training.joint) {
        for (Phase p : cfg.training.phase_order) chain.push_back(phase_stage(p));
    }
    for (Stage s : {Stage::train_crm, Stage::train_clm}) {
        if (std::find(chain.begin(), chain.end(), s) == chain.end()) chain.push_back(s);
    }
    return chain;
}

Stage checkpoint_source(const PipelineConfig& cfg, Stage s) {
    const auto chain = training_chain(cfg);
    if (s == Stage::generate_final) return chain.back();
    const auto it = std::find(chain.begin(), chain.end(), s);
    return it == chain.begin() ? Stage::generate_initial : *(it - 1);
}

class StageRun {
public:
    StageRun(Stage stage, const PipelineConfig& cfg, fs::path workdir)
        : stage_(stage), cfg_(cfg), workdir_(std::move(workdir)), manifest_(read_manifest(workdir_)) {
        fs::create_directories(workdir_ / stage_dir(stage_));
    }

    // Checks an artifact of an earlier stage against the manifest and
    // records its digest as an input.
    fs::path input(Stage producer, const char* name) {
        const auto rel = artifact_path(producer, name);
        const auto path = workdir_ / rel;
        if (!fs::exists(path)) {
            throw Error("missing input " + rel + "; run " + std::string(to_string(producer)) +
                        " first");
        }
        const auto entry = latest_entry(manifest_, std::string(to_string(producer)));
        if (!entry) {
            throw Error("no manifest record for " + std::string(to_string(producer)) +
                        " (input " + rel + ")");
        }
        if (entry->config_hash != stage_config_hash(cfg_, producer)) {
            throw Error("stale input " + rel + ": " + std::string(to_string(producer)) +
                        " ran under a different configuration");
        }
        const auto digest = sha256_file(path);
        const auto recorded = entry->outputs.find(rel);
        if (recorded == entry->outputs.end() || recorded->second != digest) {
            throw Error("stale input " + rel + ": contents differ from the manifest record");
        }
        inputs_[rel] = digest;
        return path;
    }

    fs::path output(const char* name) {
        const auto rel = artifact_path(stage_, name);
        outputs_.push_back(rel);
        return workdir_ / rel;
    }

    ManifestEntry finish(std::string status, std::chrono::steady_clock::time_point start) {
        ManifestEntry e;
        e.stage = std::string(to_string(stage_));
        e.status = std::move(status);
        e.config_hash = stage_config_hash(cfg_, stage_);
        e.inputs = inputs_;
        for (const auto& rel : outputs_) e.outputs[rel] = sha256_file(workdir_ / rel);
        e.duration_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                            std::chrono::steady_clock::now() - start)
                            .count();
        append_manifest(workdir_, e);
        return e;
    }

    const PipelineConfig& cfg() const { return cfg_; }
    const fs::path& workdir() const { return workdir_; }

private:
    Stage stage_;
    const PipelineConfig& cfg_;
    fs::path workdir_;
    std::vector<ManifestEntry> manifest_;
    std::map<std::string, std::string> inputs_;
    std::vector<std::string> outputs_;
};

std::map<std::string, ImageRef> index_images(std::vector<ImageRef> images) {
    std::map<std::string, ImageRef> out;
    for (auto& im : images) out.emplace(im.image_id, std::move(im));
    return out;
}

const ImageRef& image_for(const std::map<std::string, ImageRef>& images, const std::string& id) {
    const auto it = images.find(id);
    if (it == images.end()) throw Error("sample refers to unknown image " + id);
    return it->second;
}

// Caption per image, then `per_image` question-answer pairs cycling through
// the instruction classes; probabilities come from `scorer`.
std::vector<VlitSample> generate_set(const PipelineConfig& cfg, const ToyWorld& world,
                                     const ToyModelParams& generator,
                                     const ToyModelParams& scorer,
                                     const std::vector<WorldImage>& images, int per_image,
                                     int limit, const std::string& tag) {
    const auto& vocab = world.vocab();
    const auto& g = cfg.generation;
    std::vector<VlitSample> out;
    for (std::size_t i = 0; i < images.size() && static_cast<int>(out.size()) < limit; ++i) {
        const auto& image = images[i].image;
        const auto caption =
            generate_caption(image.features, generator, vocab, g.caption_max_tokens,
                             {g.decode, derive_seed(cfg.seed, tag + "/caption", i)});
        for (int j = 0; j < per_image && static_cast<int>(out.size()) < limit; ++j) {
            GenerationRequest rq;
            rq.image = image;
            rq.instruction_class = kInstructionClasses[static_cast<std::size_t>(j) % 3];
            rq.max_question_tokens = g.max_question_tokens;
            rq.max_answer_tokens = g.max_answer_tokens;
            rq.decode = {g.decode, derive_seed(cfg.seed, tag + "/qa",
                                               i * static_cast<std::size_t>(per_image) +
                                                   static_cast<std::size_t>(j))};
            auto s = generate_qa(image, caption, rq, generator, vocab);
            attach_probabilities(s, image.features, scorer, vocab);
            out.push_back(std::move(s));
        }
    }
    return out;
}

TrainOptions train_options(const PipelineConfig& cfg) {
    TrainOptions o;
    o.contrastive = cfg.contrastive;
    o.anchor_max_tokens = cfg.training.anchor_max_tokens;
    o.train_projection = cfg.training.train_projection;
    return o;
}

std::vector<TrainItem> crm_items(const std::vector<ScoredSample>& selected,
                                 const std::map<std::string, ImageRef>& images) {
    std::vector<TrainItem> items;
    for (const auto& s : selected) {
        items.push_back({image_for(images, s.sample.image_id), s.sample, std::nullopt});
    }
    return items;
}

std::vector<TrainItem> clm_items(const PipelineConfig& cfg, const ToyWorld& world,
                                 const std::vector<PseudoLabelPartition>& partitions,
                                 const std::vector<ScoredSample>& scored,
                                 const std::map<std::string, ImageRef>& images) {
    std::map<std::string, const VlitSample*> by_id;
    for (const auto& s : scored) by_id[s.sample.sample_id] = &s.sample;
    auto sample = [&](const std::string& id) -> const VlitSample& {
        const auto it = by_id.find(id);
        if (it == by_id.end()) throw Error("partition refers to unknown sample " + id);
        return *it->second;
    };
    std::vector<TrainItem> items;
    for (const auto& p : partitions) {
        if (p.skipped_for_contrastive) continue;
        ContrastiveGroup g;
        g.positive = sample(p.positive);
        for (const auto& n : p.negatives) g.negatives.push_back(sample(n));
        g.anchor_class = g.positive.instruction_class;
        g.anchor_question = world.instruction(g.anchor_class, cfg.seed, "anchor/" + p.image_id);
        items.push_back({image_for(images, p.image_id), std::nullopt, std::move(g)});
    }
    if (items.empty()) throw Error("every partition is skipped; nothing to contrast");
    return items;
}

GeneratorState train(GeneratorState state, const std::vector<TrainItem>& items,
                     Objective objective, int steps, const PipelineConfig& cfg,
                     const Vocabulary& vocab, std::vector<LossPoint>& curve) {
    state.model.learning_rate = cfg.learning_rate;
    const auto options = train_options(cfg);
    for (int step = 0; step < steps; ++step) {
        auto r = train_step(items, objective, state, vocab, options);
        curve.push_back({step, r.loss});
        state = std::move(r.state);
    }
    return state;
}

void copy_file_exact(const fs::path& from, const fs::path& to) {
    write_file_atomic(to, read_file(from));
}

ManifestEntry stage_generate_initial(StageRun& run) {
    const auto start = std::chrono::steady_clock::now();
    const auto& cfg = run.cfg();
    const ToyWorld world(cfg.world, cfg.model);
    std::vector<double> pretrain_curve;
    const auto state = world.pretrain(cfg.seed, cfg.learning_rate, &pretrain_curve);
    const auto images = world.sample_images(cfg.num_images, "img", derive_seed(cfg.seed, "images"));
    const auto samples = generate_set(cfg, world, state.model, state.model, images,
                                      cfg.samples_per_image, cfg.initial_count, "initial");

    std::vector<ImageRef> refs;
    for (const auto& im : images) refs.push_back(im.image);
    std::vector<LossPoint> curve;
    for (std::size_t i = 0; i < pretrain_curve.size(); ++i) {
        curve.push_back({static_cast<int>(i), {pretrain_curve[i], 0.0, pretrain_curve[i]}});
    }
    save_images(refs, run.output(artifact::kImages));
    save_checkpoint(state, run.output(artifact::kModel));
    save_samples(samples, run.output(artifact::kSamples));
    write_loss_csv(run.output(artifact::kLoss), curve);
    return run.finish(kOk, start);
}

ManifestEntry stage_filter(StageRun& run) {
    const auto start = std::chrono::steady_clock::now();
    const auto samples = load_samples(run.input(Stage::generate_initial, artifact::kSamples));
    const auto result = filter_samples(samples, run.cfg().filter);
    save_samples(result.kept, run.output(artifact::kKept));
    save_dropped(result.dropped, run.output(artifact::kDropped));
    return run.finish(kOk, start);
}

ManifestEntry stage_score(StageRun& run) {
    const auto start = std::chrono::steady_clock::now();
    const auto kept = load_samples(run.input(Stage::filter, artifact::kKept));
    save_scored(score_samples(kept), run.output(artifact::kScored));
    return run.finish(kOk, start);
}

ManifestEntry stage_partition(StageRun& run) {
    const auto start = std::chrono::steady_clock::now();
    const auto scored = load_scored(run.input(Stage::score, artifact::kScored));
    save_partitions(partition_pseudo_labels(scored), run.output(artifact::kPartitions));
    return run.finish(kOk, start);
}

ManifestEntry stage_train(StageRun& run, Stage stage) {
    const auto start = std::chrono::steady_clock::now();
    const auto& cfg = run.cfg();
    const auto ckpt_in = run.input(checkpoint_source(cfg, stage), artifact::kModel);
    const bool is_crm = stage == Stage::train_crm;
    const bool joint = cfg.training.joint && cfg.enable_crm && cfg.enable_clm;

    std::string skip;
    if (is_crm && !cfg.enable_crm) skip = kSkippedAblation;
    if (!is_crm && !cfg.enable_clm) skip = kSkippedAblation;
    if (!is_crm && joint) skip = kSkippedJoint;
    if (!skip.empty()) {
        copy_file_exact(ckpt_in, run.output(artifact::kModel));
        return run.finish(skip, start);
    }

    const ToyWorld world(cfg.world, cfg.model);
    auto state = load_checkpoint(ckpt_in);
    if (state.model.dims() != cfg.model) throw Error("checkpoint dimensions differ from config");
    const auto images = index_images(load_images(run.input(Stage::generate_initial, artifact::kImages)));
    const auto scored = load_scored(run.input(Stage::score, artifact::kScored));

    std::vector<TrainItem> items;
    Objective objective = Objective::clm_only;
    int steps = cfg.training.clm_steps;
    if (is_crm) {
        const auto selected = rank_and_select(scored, cfg.selection);
        save_scored(selected, run.output(artifact::kSelected));
        items = crm_items(selected, images);
        objective = Objective::crm_only;
        steps = cfg.training.crm_steps;
    }
    if (!is_crm || joint) {
        const auto partitions = load_partitions(run.input(Stage::partition, artifact::kPartitions));
        auto groups = clm_items(cfg, world, partitions, scored, images);
        items.insert(items.end(), std::make_move_iterator(groups.begin()),
                     std::make_move_iterator(groups.end()));
        if (joint) objective = Objective::combined;
    }

    std::vector<LossPoint> curve;
    state = train(std::move(state), items, objective, steps, cfg, world.vocab(), curve);
    save_checkpoint(state, run.output(artifact::kModel));
    write_loss_csv(run.output(artifact::kLoss), curve);
    return run.finish(kOk, start);
}

ManifestEntry stage_generate_final(StageRun& run) {
    const auto start = std::chrono::steady_clock::now();
    const auto& cfg = run.cfg();
    const ToyWorld world(cfg.world, cfg.model);
    const auto generator =
        load_checkpoint(run.input(checkpoint_source(cfg, Stage::generate_final), artifact::kModel));
    const auto scorer = load_checkpoint(run.input(Stage::generate_initial, artifact::kModel));
    const int n_images = (cfg.final_count + cfg.final_samples_per_image - 1) /
                         cfg.final_samples_per_image;
    const auto images = world.sample_images(n_images, "fin", derive_seed(cfg.seed, "final-images"));
    const auto samples = generate_set(cfg, world, generator.model, scorer.model, images,
                                      cfg.final_samples_per_image, cfg.final_count, "final");

    std::vector<ImageRef> refs;
    for (const auto& im : images) refs.push_back(im.image);
    save_images(refs, run.output(artifact::kImages));
    save_samples(samples, run.output(artifact::kSamples));
    save_scored(score_samples(samples), run.output(artifact::kScored));
    return run.finish(kOk, start);
}

ManifestEntry stage_report(StageRun& run) {
    const auto start = std::chrono::steady_clock::now();
    const auto& w = run.workdir();
    if (fs::exists(w / artifact_path(Stage::score, artifact::kScored)) ||
        fs::exists(w / artifact_path(Stage::generate_final, artifact::kScored))) {
        run.input(Stage::score, artifact::kScored);
        run.input(Stage::generate_final, artifact::kScored);
    }
    emit_report(w);
    for (const char* name : {artifact::kSummary, artifact::kMetrics, artifact::kLossCurves,
                             artifact::kHistogram}) {
        run.output(name);
    }
    return run.finish(kOk, start);
}

// True when the latest record of `stage` matches the config and every output
// it lists is still on disk unchanged.
bool is_current(Stage stage, const PipelineConfig& cfg, const fs::path& workdir) {
    const auto entry = latest_entry(read_manifest(workdir), std::string(to_string(stage)));
    if (!entry || entry->config_hash != stage_config_hash(cfg, stage)) return false;
    for (const auto& [rel, digest] : entry->outputs) {
        if (!fs::exists(workdir / rel) || sha256_file(workdir / rel) != digest) return false;
    }
    return true;
}

// Copies the shared stage directories and their manifest records into a
// fresh workdir.
void seed_workdir(const fs::path& src, const fs::path& dst) {
    fs::remove_all(dst);
    fs::create_directories(dst);
    const auto manifest = read_manifest(src);
    for (Stage s : kSharedStages) {
        fs::copy(src / stage_dir(s), dst / stage_dir(s), fs::copy_options::recursive);
        const auto entry = latest_entry(manifest, std::string(to_string(s)));
        if (!entry) throw Error("shared stage " + std::string(to_string(s)) + " has no record");
        append_manifest(dst, *entry);
    }
}

void ensure_shared(const PipelineConfig& cfg, const fs::path& workdir) {
    for (Stage s : kSharedStages) {
        if (!is_current(s, cfg, workdir)) run_stage(s, cfg, workdir);
    }
}

// Training, final generation and report in an already seeded workdir.
MetricsReport run_downstream(const PipelineConfig& cfg, const fs::path& workdir) {
    for (Stage s : stage_order(cfg)) {
        if (std::find(std::begin(kSharedStages), std::end(kSharedStages), s) !=
            std::end(kSharedStages)) {
            continue;
        }
        if (s == Stage::report) break;
        run_stage(s, cfg, workdir);
    }
    run_stage(Stage::report, cfg, workdir);
    return emit_report(workdir);
}

std::string fraction_label(double f) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "fraction_%g", f);
    return buf;
}

}  // namespace

std::vector<Stage> stage_order(const PipelineConfig& cfg) {
    std::vector<Stage> order(std::begin(kSharedStages), std::end(kSharedStages));
    for (Stage s : training_chain(cfg)) order.push_back(s);
    order.push_back(Stage::generate_final);
    order.push_back(Stage::report);
    return order;
}

ManifestEntry run_stage(Stage stage, const PipelineConfig& cfg, const fs::path& workdir) {
    const std::string name(to_string(stage));
    try {
        cfg.validate();
        StageRun run(stage, cfg, workdir);
        switch (stage) {
            case Stage::generate_initial: return stage_generate_initial(run);
            case Stage::filter: return stage_filter(run);
            case Stage::score: return stage_score(run);
            case Stage::partition: return stage_partition(run);
            case Stage::train_crm:
            case Stage::train_clm: return stage_train(run, stage);
            case Stage::generate_final: return stage_generate_final(run);
            case Stage::report: return stage_report(run);
        }
        throw Error("unhandled stage");
    } catch (const StageError&) {
        throw;
    } catch (const std::exception& e) {
        throw StageError(name, e.what());
    }
}

MetricsReport run_pipeline(const PipelineConfig& cfg, const fs::path& workdir) {
    for (Stage s : stage_order(cfg)) run_stage(s, cfg, workdir);
    return emit_report(workdir);
}

std::vector<SweepRow> sweep_selection_fraction(const PipelineConfig& cfg, const fs::path& workdir,
                                               std::span<const double> fractions) {
    if (fractions.empty()) throw ConfigError("sweep needs at least one fraction");
    for (double f : fractions) {
        SelectionConfig probe = cfg.selection;
        probe.fraction = f;
        probe.validate();
    }
    cfg.validate();
    ensure_shared(cfg, workdir);

    std::vector<SweepRow> rows;
    for (double f : fractions) {
        PipelineConfig run_cfg = cfg;
        run_cfg.selection.fraction = f;
        const auto dir = workdir / "sweep" / fraction_label(f);
        seed_workdir(workdir, dir);
        const auto report = run_downstream(run_cfg, dir);
        SweepRow row;
        row.fraction = f;
        const auto selected = dir / artifact_path(Stage::train_crm, artifact::kSelected);
        row.selected = fs::exists(selected) ? load_scored(selected).size() : 0;
        row.post_mean_i2c = report.post.mean;
        row.post_median_i2c = report.post.median;
        rows.push_back(row);
    }
    write_sweep_csv(workdir / kSweepFile, rows);
    return rows;
}

std::vector<AblationRow> run_ablation_grid(const PipelineConfig& cfg, const fs::path& workdir,
                                           std::span<const std::uint64_t> seeds) {
    if (seeds.empty()) throw ConfigError("ablation grid needs at least one seed");
    struct Arm {
        const char* name;
        bool crm;
        bool clm;
    };
    constexpr Arm kArms[] = {
        {"baseline", false, false},
        {"crm_only", true, false},
        {"clm_only", false, true},
        {"crm_clm", true, true},
    };

    std::vector<AblationRow> rows;
    for (std::uint64_t seed : seeds) {
        PipelineConfig seed_cfg = cfg;
        seed_cfg.seed = seed;
        seed_cfg.validate();
        const auto seed_dir = workdir / "ablation" / ("seed_" + std::to_string(seed));
        const auto shared = seed_dir / "shared";
        ensure_shared(seed_cfg, shared);
        for (const auto& arm : kArms) {
            PipelineConfig arm_cfg = seed_cfg;
            arm_cfg.enable_crm = arm.crm;
            arm_cfg.enable_clm = arm.clm;
            const auto dir = seed_dir / arm.name;
            seed_workdir(shared, dir);
            const auto report = run_downstream(arm_cfg, dir);
            rows.push_back({seed, arm.name, arm.crm, arm.clm, report.pre.mean, report.post.mean,
                            report.post.median});
        }
    }
    write_ablation_csv(workdir / kAblationFile, rows);
    return rows;
}

}  // namespace relcurate
