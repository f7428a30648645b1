// Copyright (c) 2026, molre contributors
// SPDX-License-Identifier: Apache-2.0

#include "molre/cli/commands.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>

#include <json.hpp>

#include "molre/cli/checkpoint.hpp"
#include "molre/core/errors.hpp"
#include "molre/core/rng.hpp"
#include "molre/data/augment.hpp"
#include "molre/data/synth.hpp"

namespace molre {

namespace fs = std::filesystem;

namespace {

class RunLock {
public:
    explicit RunLock(fs::path path) : path_(std::move(path)) {
        std::FILE* f = std::fopen(path_.c_str(), "wx");
        if (!f) {
            throw DataError("run directory is locked by another training process (remove '" + path_.string() +
                            "' if that process is gone)");
        }
        std::fclose(f);
    }
    ~RunLock() {
        std::error_code ec;
        fs::remove(path_, ec);
    }
    RunLock(const RunLock&) = delete;
    RunLock& operator=(const RunLock&) = delete;

private:
    fs::path path_;
};

void ensure_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw DataError("cannot create directory '" + dir.string() + "': " + ec.message());
}

Manifest load_dataset_manifest(const RunConfig& config) {
    Manifest m = read_manifest(config.data_dir / kManifestFile);
    if (m.classes() != config.model.classes) {
        throw DataError("dataset '" + config.data_dir.string() + "' has " + std::to_string(m.classes()) +
                        " classes, config expects " + std::to_string(config.model.classes));
    }
    return m;
}

std::vector<Tensor> embed_split(const Model& model, const fs::path& dir, const Manifest& manifest,
                                const std::vector<std::size_t>& indices) {
    std::vector<Tensor> out;
    out.reserve(indices.size());
    for (auto i : indices) out.push_back(embed_sample(model, load_sample(dir, manifest, i)));
    return out;
}

constexpr std::size_t kNormalizationSamples = 256;

Tensor stack_rows(const std::vector<Tensor>& parts) {
    std::size_t rows = 0;
    for (const auto& p : parts) rows += p.rows();
    Tensor out({rows, parts.front().cols()});
    auto dst = out.data().begin();
    for (const auto& p : parts) dst = std::copy(p.data().begin(), p.data().end(), dst);
    return out;
}

nlohmann::json epoch_line(const EpochRecord& r) {
    nlohmann::json j;
    j["epoch"] = r.epoch;
    j["train_loss"] = r.train_loss;
    j["val_auc"] = r.val_auc ? nlohmann::json(*r.val_auc) : nlohmann::json(nullptr);
    j["lr_head"] = r.lr_head;
    j["lr_adapter"] = r.lr_adapter;
    j["steps"] = r.steps;
    j["improved"] = r.improved;
    j["best_epoch"] = r.best_epoch;
    j["best_auc"] = r.best_auc;
    j["stop"] = r.stop;
    return j;
}

void append_line(std::ofstream& log, const nlohmann::json& j) {
    log << j.dump() << '\n';
    log.flush();
}

}  // namespace

Tensor embed_sample(const Model& model, const VolumeSample& volume) { return model.embed_volume(preprocess(volume)); }

Manifest cmd_synth(const RunConfig& config) {
    config.validate();
    ensure_dir(config.data_dir);
    SynthConfig synth = config.synth;
    synth.classes = config.model.classes;

    Manifest m;
    m.seed = config.seed;
    for (std::size_t c = 0; c < synth.classes; ++c) m.class_names.push_back(class_name(c));
    m.prevalence = synth.class_prevalence();
    m.dims = {synth.slices, synth.height, synth.width};
    m.spacing = synth.spacing;

    const auto parts = split_indices(config.samples, config.split, config.seed);
    std::vector<Split> split_of(config.samples, Split::Train);
    for (std::size_t s = 0; s < 3; ++s)
        for (auto i : parts[s]) split_of[i] = static_cast<Split>(s);

    std::vector<double> positives(synth.classes, 0.0);
    for (std::size_t i = 0; i < config.samples; ++i) {
        const VolumeSample v = synth_sample(synth, config.seed, i);
        ManifestEntry e;
        e.id = v.sample_id;
        e.file = v.sample_id + ".vox";
        e.split = split_of[i];
        e.labels = v.labels;
        e.stream_id = v.stream_id;
        write_volume(config.data_dir / e.file, v);
        for (std::size_t c = 0; c < synth.classes; ++c) positives[c] += e.labels[c];
        m.entries.push_back(std::move(e));
    }
    for (double& p : positives) p /= static_cast<double>(config.samples);
    m.observed_prevalence = positives;
    write_manifest(config.data_dir / kManifestFile, m);
    return m;
}

TrainSummary cmd_train(const RunConfig& config, const std::optional<fs::path>& resume, std::ostream* progress) {
    config.validate();
    const Manifest manifest = load_dataset_manifest(config);
    ensure_dir(config.run_dir);
    RunLock lock(config.run_dir / kLockFile);
    const std::string config_text = to_text(config);
    {
        std::ofstream os(config.run_dir / "config.txt", std::ios::trunc);
        os << config_text;
    }

    auto model = std::make_shared<Model>(config.model_config());
    const auto train_idx = manifest.indices(Split::Train);
    const auto val_idx = manifest.indices(Split::Val);
    if (train_idx.empty()) throw DataError("dataset has no training samples");
    if (val_idx.empty()) throw DataError("dataset has no validation samples");

    auto val = std::make_shared<std::vector<Tensor>>(embed_split(*model, config.data_dir, manifest, val_idx));
    TrainData data;
    data.slices = manifest.dims[0];
    data.train_labels = label_matrix(manifest, train_idx);
    data.val_labels = label_matrix(manifest, val_idx);
    data.val = [val](std::size_t i) { return (*val)[i]; };

    const fs::path dir = config.data_dir;
    const std::uint64_t seed = config.seed;
    std::shared_ptr<std::vector<Tensor>> cache;
    if (config.augment_enabled) {
        // The input normalization is fit on un-augmented embeddings of a
        // bounded prefix of the training split.
        const std::vector<std::size_t> head(train_idx.begin(),
                                            train_idx.begin() + static_cast<std::ptrdiff_t>(
                                                                    std::min(train_idx.size(), kNormalizationSamples)));
        model->fit_input_normalization(stack_rows(embed_split(*model, dir, manifest, head)));
        const AugmentConfig aug = config.augment;
        const Model* m = model.get();
        data.train = [m, dir, manifest, train_idx, aug, seed](std::size_t i, int epoch) {
            const VolumeSample v = load_sample(dir, manifest, train_idx[i]);
            RngStream rng = RngStream(seed, v.stream_id).split(static_cast<std::uint64_t>(epoch));
            return embed_sample(*m, augment(v, aug, rng));
        };
    } else {
        cache = std::make_shared<std::vector<Tensor>>(embed_split(*model, dir, manifest, train_idx));
        model->fit_input_normalization(stack_rows(*cache));
        data.train = [cache](std::size_t i, int) { return (*cache)[i]; };
    }

    Trainer trainer(*model, std::move(data), config.train_config());
    NamedTensors best = snapshot_params(*model);
    auto log_mode = std::ios::trunc;
    if (resume) {
        const Checkpoint ckpt = load_checkpoint(*resume);
        if (ckpt.config_text != config_text) {
            throw ConfigError("checkpoint '" + resume->string() + "' was written with a different configuration");
        }
        restore_checkpoint(ckpt, *model, trainer.state());
        const fs::path best_path = config.run_dir / kBestCheckpoint;
        if (fs::exists(best_path)) best = load_checkpoint(best_path).params;
        log_mode = std::ios::app;
    }
    std::ofstream log(config.run_dir / kMetricsLog, log_mode);
    if (!log) throw DataError("cannot open metrics log in '" + config.run_dir.string() + "'");

    TrainSummary summary;
    while (!trainer.done()) {
        EpochRecord rec;
        try {
            rec = trainer.run_epoch();
        } catch (const NumericalError& e) {
            append_line(log, {{"event", "abort"}, {"epoch", trainer.state().epoch + 1}, {"error", e.what()}});
            throw;
        }
        const Checkpoint ckpt = make_checkpoint(config_text, *model, trainer.state(), seed);
        if (rec.improved) {
            best = ckpt.params;
            save_checkpoint(config.run_dir / kBestCheckpoint, ckpt);
        }
        save_checkpoint(config.run_dir / kLastCheckpoint, ckpt);
        append_line(log, epoch_line(rec));
        if (progress) {
            *progress << "epoch " << rec.epoch << "  loss " << rec.train_loss << "  val_auc "
                      << (rec.val_auc ? std::to_string(*rec.val_auc) : std::string("n/a")) << "  best " << rec.best_epoch
                      << (rec.improved ? "  *" : "") << '\n';
        }
        summary.history.push_back(rec);
    }
    const auto& es = trainer.state().early_stop;
    summary.stop_epoch = trainer.state().epoch;
    summary.best_epoch = es.best_epoch;
    summary.best_auc = es.best_auc;
    append_line(log, {{"event", "stopped"},
                      {"stop_epoch", summary.stop_epoch},
                      {"best_epoch", summary.best_epoch},
                      {"best_auc", summary.best_auc},
                      {"early_stop", trainer.state().stopped}});
    restore_params(*model, best);
    std::ofstream params(config.run_dir / "params.txt", std::ios::trunc);
    write_param_table(param_report(*model), params);
    return summary;
}

MetricsReport cmd_eval(const fs::path& checkpoint, Split split, const fs::path& out_dir,
                       const std::optional<fs::path>& data_dir) {
    const Checkpoint ckpt = load_checkpoint(checkpoint);
    RunConfig config = parse_config(ckpt.config_text, checkpoint.string());
    if (data_dir) config.data_dir = *data_dir;
    config.validate();

    Model model(config.model_config());
    restore_params(model, ckpt.params);
    model.set_buffers(ckpt.buffers);
    const Manifest manifest = load_dataset_manifest(config);
    const auto idx = manifest.indices(split);
    if (idx.empty()) throw DataError("split '" + std::string(split_name(split)) + "' has no samples");

    const auto embeddings = embed_split(model, config.data_dir, manifest, idx);
    const Tensor probs = predict(model, [&](std::size_t i) { return embeddings[i]; }, idx.size(), manifest.dims[0]);
    MetricsReport report = build_report(probs, label_matrix(manifest, idx), manifest.class_names, param_report(model));

    ensure_dir(out_dir);
    const std::string stem = "eval_" + std::string(split_name(split));
    std::ofstream tsv(out_dir / (stem + ".tsv"), std::ios::trunc);
    write_class_table(report, tsv);
    std::ofstream json(out_dir / (stem + ".json"), std::ios::trunc);
    json << summary_json(report) << '\n';
    if (!tsv || !json) throw DataError("cannot write evaluation reports into '" + out_dir.string() + "'");
    return report;
}

ParamTable cmd_count_params(const RunConfig& config, std::ostream& out) {
    config.validate();
    const Model model(config.model_config());
    ParamTable table = param_report(model);
    write_param_table(table, out);
    return table;
}

}  // namespace molre
