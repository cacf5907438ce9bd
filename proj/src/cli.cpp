// Copyright 2026 The traitalign Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "traitalign/cli.hpp"

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "traitalign/errors.hpp"
#include "traitalign/search.hpp"
#include "traitalign/synthdata.hpp"
#include "traitalign/train.hpp"
#include "traitalign/version.hpp"

namespace traitalign {

using nlohmann::json;

namespace {

std::uint64_t env_seed_fallback() {
    if (const char* env = std::getenv("TRAITALIGN_SEED")) {
        try {
            return std::stoull(env);
        } catch (...) {
            throw ConfigError("TRAITALIGN_SEED is not a valid integer");
        }
    }
    return 1;
}

struct CommonOpts {
    std::string dataset;
    std::string config_file;
    std::uint64_t seed = 0;
    bool seed_set = false;

    std::size_t epochs = 20;
    std::size_t batch_size = 128;
    double lr = 1e-3;
    double weight_decay = 0.0;
    double tau = 0.1;
    double lambda_beh = 1.0;
    double tau_a = 0.1;
    std::size_t k = 5;
    std::size_t embed_dim = 32;

    std::size_t eeg_chunk = 256;
    std::size_t eeg_overlap = 128;
    std::size_t fmri_chunk = 40;
    std::size_t fmri_overlap = 20;
    bool auto_chunks = false;
    std::size_t budget = 30;
    std::size_t batches_per_epoch = 0;

    std::string task = "both";
    std::string loss_mode = "subject";
    std::string aggregation = "noise";
    std::string vote = "majority";
    std::size_t jobs = std::max(1u, std::thread::hardware_concurrency());
};

void add_common_flags(CLI::App* cmd, CommonOpts& o, bool with_training) {
    cmd->add_option("--data", o.dataset, "Dataset directory");
    cmd->add_option("--config", o.config_file, "JSON config file (flags override it)");
    cmd->add_option("--seed", o.seed, "Master seed (fallback: TRAITALIGN_SEED, then 1)")
        ->each([&o](const std::string&) { o.seed_set = true; });
    cmd->add_option("--jobs", o.jobs, "Worker threads for LOSO folds");
    if (!with_training) return;
    cmd->add_option("--epochs", o.epochs, "Training epochs");
    cmd->add_option("--batch-size", o.batch_size, "Chunk triples per batch");
    cmd->add_option("--lr", o.lr, "Adam learning rate");
    cmd->add_option("--weight-decay", o.weight_decay, "Adam weight decay");
    cmd->add_option("--tau", o.tau, "Contrastive temperature");
    cmd->add_option("--lambda-beh", o.lambda_beh, "Behavior loss weight");
    cmd->add_option("--tau-a", o.tau_a, "Aggregation temperature");
    cmd->add_option("--k", o.k, "kNN neighbor count");
    cmd->add_option("--embed-dim", o.embed_dim, "Embedding width D");
    cmd->add_option("--batches-per-epoch", o.batches_per_epoch,
                    "Batches per epoch (0 = one sweep over the chunk pool)");
    cmd->add_option("--eeg-chunk", o.eeg_chunk, "EEG chunk length (timepoints)");
    cmd->add_option("--eeg-overlap", o.eeg_overlap, "EEG chunk overlap");
    cmd->add_option("--fmri-chunk", o.fmri_chunk, "fMRI chunk length (scans)");
    cmd->add_option("--fmri-overlap", o.fmri_overlap, "fMRI chunk overlap");
    cmd->add_flag("--auto-chunks", o.auto_chunks, "Search chunk lengths before running");
    cmd->add_option("--budget", o.budget, "Trial budget for --auto-chunks / tune");
    cmd->add_option("--task", o.task, "classify|regress|both");
    cmd->add_option("--loss-mode", o.loss_mode, "subject|onehot (contrastive positives)");
    cmd->add_option("--aggregation", o.aggregation, "noise|uniform chunk aggregation");
    cmd->add_option("--vote", o.vote, "majority|threshold classification rule");
}

// Config file merge: any key present in the file and not overridden on the
// command line replaces the default.
void merge_config_file(const CLI::App* cmd, CommonOpts& o) {
    if (o.config_file.empty()) return;
    std::ifstream is(o.config_file);
    if (!is) throw ConfigError("config file not found: " + o.config_file);
    json j = json::parse(is, nullptr, false);
    if (j.is_discarded()) throw ConfigError("config file is not valid JSON");

    auto overridden = [&](const std::string& flag) {
        const auto* opt = cmd->get_option_no_throw(flag);
        return opt != nullptr && opt->count() > 0;
    };
    auto set_sz = [&](const char* key, const char* flag, std::size_t& dst) {
        if (j.contains(key) && !overridden(flag)) dst = j[key].get<std::size_t>();
    };
    auto set_d = [&](const char* key, const char* flag, double& dst) {
        if (j.contains(key) && !overridden(flag)) dst = j[key].get<double>();
    };
    auto set_s = [&](const char* key, const char* flag, std::string& dst) {
        if (j.contains(key) && !overridden(flag)) dst = j[key].get<std::string>();
    };
    if (j.contains("seed") && !overridden("--seed")) {
        o.seed = j["seed"].get<std::uint64_t>();
        o.seed_set = true;
    }
    set_s("data", "--data", o.dataset);
    set_sz("epochs", "--epochs", o.epochs);
    set_sz("batch_size", "--batch-size", o.batch_size);
    set_d("lr", "--lr", o.lr);
    set_d("weight_decay", "--weight-decay", o.weight_decay);
    set_d("tau", "--tau", o.tau);
    set_d("lambda_beh", "--lambda-beh", o.lambda_beh);
    set_d("tau_a", "--tau-a", o.tau_a);
    set_sz("k", "--k", o.k);
    set_sz("embed_dim", "--embed-dim", o.embed_dim);
    set_sz("eeg_chunk", "--eeg-chunk", o.eeg_chunk);
    set_sz("eeg_overlap", "--eeg-overlap", o.eeg_overlap);
    set_sz("fmri_chunk", "--fmri-chunk", o.fmri_chunk);
    set_sz("fmri_overlap", "--fmri-overlap", o.fmri_overlap);
    set_sz("budget", "--budget", o.budget);
    set_sz("jobs", "--jobs", o.jobs);
    set_s("task", "--task", o.task);
    set_s("loss_mode", "--loss-mode", o.loss_mode);
    set_s("aggregation", "--aggregation", o.aggregation);
    set_s("vote", "--vote", o.vote);
}

std::uint64_t resolve_seed(const CommonOpts& o) {
    return o.seed_set ? o.seed : env_seed_fallback();
}

TrainConfig to_train_config(const CommonOpts& o) {
    TrainConfig cfg;
    cfg.epochs = o.epochs;
    cfg.batch_size = o.batch_size;
    cfg.lr = o.lr;
    cfg.weight_decay = o.weight_decay;
    cfg.tau = o.tau;
    cfg.lambda_beh = o.lambda_beh;
    cfg.tau_a = o.tau_a;
    cfg.k = o.k;
    cfg.encoder.embed_dim = o.embed_dim;
    cfg.eeg_chunks = {o.eeg_chunk, o.eeg_overlap};
    cfg.fmri_chunks = {o.fmri_chunk, o.fmri_overlap};
    cfg.batches_per_epoch = o.batches_per_epoch;
    cfg.seed = resolve_seed(o);

    if (o.loss_mode == "subject") {
        cfg.loss_mode = LossMode::kSubjectAware;
    } else if (o.loss_mode == "onehot") {
        cfg.loss_mode = LossMode::kOneHot;
    } else {
        throw ConfigError("--loss-mode must be subject or onehot");
    }
    if (o.aggregation == "noise") {
        cfg.aggregation = AggregationMode::kNoiseInformed;
    } else if (o.aggregation == "uniform") {
        cfg.aggregation = AggregationMode::kUniform;
    } else {
        throw ConfigError("--aggregation must be noise or uniform");
    }
    if (o.vote == "majority") {
        cfg.vote_rule = VoteRule::kMajority;
    } else if (o.vote == "threshold") {
        cfg.vote_rule = VoteRule::kThresholdedMean;
    } else {
        throw ConfigError("--vote must be majority or threshold");
    }
    if (o.task != "classify" && o.task != "regress" && o.task != "both") {
        throw ConfigError("--task must be classify, regress, or both");
    }
    return cfg;
}

json resolved_config_json(const std::string& command, const CommonOpts& o,
                          const TrainConfig& cfg) {
    return {{"command", command},
            {"version", kVersion},
            {"data", o.dataset},
            {"seed", cfg.seed},
            {"epochs", cfg.epochs},
            {"batch_size", cfg.batch_size},
            {"lr", cfg.lr},
            {"weight_decay", cfg.weight_decay},
            {"tau", cfg.tau},
            {"lambda_beh", cfg.lambda_beh},
            {"tau_a", cfg.tau_a},
            {"k", cfg.k},
            {"embed_dim", cfg.encoder.embed_dim},
            {"eeg_chunk", cfg.eeg_chunks.length},
            {"eeg_overlap", cfg.eeg_chunks.overlap},
            {"fmri_chunk", cfg.fmri_chunks.length},
            {"fmri_overlap", cfg.fmri_chunks.overlap},
            {"task", o.task},
            {"loss_mode", o.loss_mode},
            {"aggregation", o.aggregation},
            {"vote", o.vote},
            {"jobs", o.jobs}};
}

void write_json(const std::string& path, const json& j) {
    std::ofstream os(path);
    if (!os) throw DataError("cannot write output file: " + path);
    os << j.dump(2) << "\n";
}

Cohort load_required_dataset(const CommonOpts& o) {
    if (o.dataset.empty()) throw ConfigError("--data is required");
    return load_dataset(o.dataset);
}

// Runs the chunk-length search and applies the winner to cfg.
json run_auto_chunks(const Cohort& cohort, const CommonOpts& o, TrainConfig& cfg,
                     const std::string& log_path) {
    SearchConfig scfg;
    scfg.train = cfg;
    scfg.tpe.budget = o.budget;
    scfg.task = o.task == "regress" ? TaskKind::kRegress : TaskKind::kClassify;
    scfg.jobs = o.jobs;
    scfg.log_path = log_path;
    const auto result = optimize_chunk_length(cohort, scfg);
    apply_candidate(cfg, result.best.candidate, scfg, cohort.spec);
    return {{"best_candidate", result.best.candidate},
            {"best_score", result.best.score},
            {"trials", result.history.size()}};
}

json histogram_to_json(const SimilarityHistogram& hist) {
    json bins = json::array();
    for (std::size_t b = 0; b < hist.bins(); ++b) {
        json bin = {{"lo", hist.edges[b]},
                    {"hi", hist.edges[b + 1]},
                    {"count", hist.counts[b]},
                    {"labeled", hist.labeled[b]}};
        if (hist.labeled[b] > 0) {
            bin["accuracy"] = hist.accuracy(b);
        } else {
            bin["accuracy"] = nullptr;
        }
        bins.push_back(bin);
    }
    return bins;
}

json metrics_to_json(const MetricsReport& m) {
    json j = {{"accuracy", m.accuracy}, {"f1", m.f1}, {"mae", m.mae}};
    if (m.has_r2) {
        j["r2"] = m.r2;
    } else {
        j["r2"] = nullptr;
    }
    return j;
}

int cmd_generate(const CommonOpts& o, const CohortSpec& spec_in, const std::string& out_dir) {
    if (out_dir.empty()) throw ConfigError("generate: --out is required");
    CohortSpec spec = spec_in;
    spec.seed = resolve_seed(o);
    const auto cohort = generate_cohort(spec);
    save_dataset(out_dir, cohort);
    std::cout << "wrote " << cohort.subjects.size() << " subjects to " << out_dir << "\n";
    return kExitOk;
}

int cmd_tune(const CommonOpts& o, const std::string& out_log, bool tie_lengths,
             bool search_overlap, std::size_t search_epochs) {
    const auto cohort = load_required_dataset(o);
    TrainConfig cfg = resolve_train_config(to_train_config(o), cohort.spec);

    SearchConfig scfg;
    scfg.train = cfg;
    scfg.tpe.budget = o.budget;
    scfg.task = o.task == "regress" ? TaskKind::kRegress : TaskKind::kClassify;
    scfg.search_epochs = search_epochs;
    scfg.tie_lengths = tie_lengths;
    scfg.search_overlap = search_overlap;
    scfg.jobs = o.jobs;
    scfg.log_path = out_log;

    const auto result = optimize_chunk_length(cohort, scfg);
    json out = {{"config", resolved_config_json("tune", o, cfg)},
                {"best_candidate", result.best.candidate},
                {"best_score", result.best.score},
                {"best_trial", result.best.number},
                {"trials", result.history.size()}};
    std::cout << out.dump(2) << "\n";
    return kExitOk;
}

int cmd_train(const CommonOpts& o, const std::string& out_ckpt, const std::string& out_log) {
    if (out_ckpt.empty()) throw ConfigError("train: --out is required");
    const auto cohort = load_required_dataset(o);
    TrainConfig cfg = resolve_train_config(to_train_config(o), cohort.spec);

    json config = resolved_config_json("train", o, cfg);
    if (o.auto_chunks) {
        config["auto_chunks"] = run_auto_chunks(cohort, o, cfg, out_ckpt + ".trials.jsonl");
        config["eeg_chunk"] = cfg.eeg_chunks.length;
        config["eeg_overlap"] = cfg.eeg_chunks.overlap;
        config["fmri_chunk"] = cfg.fmri_chunks.length;
        config["fmri_overlap"] = cfg.fmri_chunks.overlap;
    }

    std::vector<const SubjectRecord*> all;
    for (const auto& s : cohort.subjects) all.push_back(&s);
    const auto model = train_encoders(all, cfg);

    ModelBundle bundle;
    bundle.cfg = cfg;
    bundle.model = model;
    bundle.index = build_index(all, model, cfg);
    bundle.config_json = config.dump();
    save_model(out_ckpt, bundle);

    const std::string log_path = out_log.empty() ? out_ckpt + ".log.jsonl" : out_log;
    std::ofstream log(log_path, std::ios::trunc);
    if (!log) throw DataError("train: cannot write log " + log_path);
    for (const auto& e : model.log) {
        log << json{{"epoch", e.epoch},
                    {"loss_neu", e.loss_neu},
                    {"loss_beh", e.loss_beh},
                    {"total", e.total},
                    {"wall_ms", e.wall_ms}}
                   .dump()
            << "\n";
    }
    std::cout << "checkpoint: " << out_ckpt << "\nlog: " << log_path << "\n";
    return kExitOk;
}

int cmd_eval(const CommonOpts& o, const std::string& checkpoint, bool no_retrain, bool fast,
             const std::string& out_path, std::size_t bins) {
    const auto cohort = load_required_dataset(o);
    TrainConfig cfg = resolve_train_config(to_train_config(o), cohort.spec);
    if (fast) cfg.epochs = std::min<std::size_t>(cfg.epochs, 5);

    json config = resolved_config_json("eval", o, cfg);
    config["fast"] = fast;
    config["retrain_per_fold"] = !no_retrain;

    EvalResult result;
    if (no_retrain) {
        if (checkpoint.empty()) throw ConfigError("eval --no-retrain needs --checkpoint");
        auto bundle = load_model(checkpoint);
        // Fixed encoders: per fold, the index is rebuilt from the remaining
        // subjects but no retraining happens.
        const TrainConfig mcfg = resolve_train_config(bundle.cfg, cohort.spec);
        result.histogram = make_similarity_histogram(bins);
        std::vector<double> ps, ts;
        std::vector<int> pl, tl;
        for (std::size_t f = 0; f < cohort.subjects.size(); ++f) {
            std::vector<const SubjectRecord*> train;
            for (std::size_t i = 0; i < cohort.subjects.size(); ++i) {
                if (i != f) train.push_back(&cohort.subjects[i]);
            }
            const auto index = build_index(train, bundle.model, mcfg);
            const auto& held = cohort.subjects[f];
            const auto embs = embed_subject(held, bundle.model, mcfg);
            const auto agg = aggregate_subject(embs.eeg, embs.fmri, mcfg.tau_a,
                                               mcfg.aggregation, held.id);
            const auto pred = knn_predict(index, agg.vec, mcfg.vote_rule);
            result.per_subject.push_back(
                {held.id, held.trait, held.label, pred.score, pred.label});
            report_chunk_similarity(result.histogram, embs.eeg, embs.fmri, &index, held.label,
                                    mcfg.vote_rule);
            ps.push_back(pred.score);
            pl.push_back(pred.label);
            ts.push_back(held.trait);
            tl.push_back(held.label);
        }
        result.metrics = compute_metrics(ps, pl, ts, tl);
    } else {
        if (o.auto_chunks) {
            config["auto_chunks"] =
                run_auto_chunks(cohort, o, cfg, out_path + ".trials.jsonl");
        }
        result = loso_evaluate(cohort, cfg, o.jobs, bins);
    }

    json per_subject = json::array();
    for (const auto& r : result.per_subject) {
        per_subject.push_back({{"id", r.id},
                               {"truth", r.truth_score},
                               {"truth_label", r.truth_label},
                               {"pred_score", r.pred_score},
                               {"pred_class", r.pred_label}});
    }
    json out = {{"config", config},
                {"per_subject", per_subject},
                {"metrics", metrics_to_json(result.metrics)},
                {"similarity_histogram", histogram_to_json(result.histogram)}};
    if (!out_path.empty()) write_json(out_path, out);
    std::cout << json{{"metrics", out["metrics"]}}.dump(2) << "\n";
    return kExitOk;
}

int cmd_predict(const CommonOpts& o, const std::string& checkpoint, const std::string& eeg_file,
                const std::string& fmri_file, const std::string& out_path) {
    if (checkpoint.empty() || eeg_file.empty() || fmri_file.empty()) {
        throw ConfigError("predict: --checkpoint, --eeg and --fmri are required");
    }
    auto bundle = load_model(checkpoint);
    const auto& cfg = bundle.cfg;

    std::vector<std::size_t> dims;
    SubjectRecord subject;
    subject.id = -1;
    subject.eeg = load_array(eeg_file, dims);
    if (dims.size() != 2 || dims[0] != cfg.encoder.channels) {
        throw DataError("predict: EEG array does not match the checkpoint channel count");
    }
    subject.fmri = load_array(fmri_file, dims);
    if (dims.size() != 2 || dims[0] != cfg.encoder.rois) {
        throw DataError("predict: fMRI array does not match the checkpoint ROI count");
    }

    const auto embs = embed_subject(subject, bundle.model, cfg);
    const auto agg =
        aggregate_subject(embs.eeg, embs.fmri, cfg.tau_a, cfg.aggregation, subject.id);
    const auto pred = knn_predict(bundle.index, agg.vec, cfg.vote_rule);

    json neighbors = json::array();
    for (auto i : pred.neighbors) {
        neighbors.push_back(bundle.index.embeddings[i].subject_id);
    }
    json out = {{"version", kVersion},
                {"pred_score", pred.score},
                {"pred_class", pred.label},
                {"neighbors", neighbors},
                {"n_eeg_chunks", agg.n_eeg},
                {"n_fmri_chunks", agg.n_fmri}};
    const auto run_cfg = json::parse(bundle.config_json, nullptr, false);
    out["config"] = run_cfg.is_discarded() ? json(bundle.config_json) : run_cfg;
    if (!out_path.empty()) write_json(out_path, out);
    std::cout << out.dump(2) << "\n";
    return kExitOk;
}

int cmd_report(const std::string& eval_path, const std::string& out_path) {
    if (eval_path.empty()) throw ConfigError("report: --eval is required");
    std::ifstream is(eval_path);
    if (!is) throw DataError("report: cannot open " + eval_path);
    json eval_json = json::parse(is, nullptr, false);
    if (eval_json.is_discarded() || !eval_json.contains("similarity_histogram")) {
        throw DataError("report: not a traitalign eval report");
    }

    const auto& hist = eval_json["similarity_histogram"];
    std::cout << "similarity    pairs   accuracy\n";
    for (const auto& bin : hist) {
        char line[96];
        const double lo = bin["lo"].get<double>();
        const double hi = bin["hi"].get<double>();
        const auto count = bin["count"].get<std::size_t>();
        if (bin["accuracy"].is_null()) {
            std::snprintf(line, sizeof line, "[%5.2f,%5.2f) %6zu        -", lo, hi, count);
        } else {
            std::snprintf(line, sizeof line, "[%5.2f,%5.2f) %6zu   %6.3f", lo, hi, count,
                          bin["accuracy"].get<double>());
        }
        std::cout << line << "\n";
    }
    if (!out_path.empty()) {
        write_json(out_path, json{{"source", eval_path},
                                  {"similarity_histogram", hist},
                                  {"metrics", eval_json.value("metrics", json())}});
    }
    return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args) {
    CLI::App app{"Data-efficient multimodal trait prediction"};
    app.require_subcommand(1);

    CommonOpts o;

    // generate
    auto* gen = app.add_subcommand("generate", "Generate a synthetic cohort dataset");
    CohortSpec spec;
    std::string gen_out;
    gen->add_option("--out", gen_out, "Output dataset directory")->required();
    gen->add_option("--subjects", spec.n_subjects, "Number of subjects");
    gen->add_option("--channels", spec.channels, "EEG channels");
    gen->add_option("--timepoints", spec.timepoints, "EEG timepoints");
    gen->add_option("--sample-rate", spec.sample_rate, "EEG sample rate (Hz)");
    gen->add_option("--rois", spec.rois, "fMRI ROIs");
    gen->add_option("--scans", spec.scans, "fMRI scans");
    gen->add_option("--scales", spec.scales, "Behavior scales");
    gen->add_option("--eeg-effect", spec.eeg_effect, "Trait effect on EEG band power");
    gen->add_option("--fmri-effect", spec.fmri_effect, "Trait effect on connectivity");
    gen->add_option("--behavior-noise", spec.behavior_noise, "Behavior noise std");
    gen->add_option("--eeg-noise", spec.eeg_noise, "Pink-noise floor amplitude");
    gen->add_option("--noise-rate", spec.chunk_noise_rate, "Corrupted segment fraction");
    gen->add_option("--burst-period", spec.burst_period,
                    "Oscillation burst period (0 = continuous)");
    add_common_flags(gen, o, false);

    // tune
    auto* tune = app.add_subcommand("tune", "Search chunk lengths with TPE over LOSO");
    std::string tune_log = "trials.jsonl";
    bool tie_lengths = false, search_overlap = false;
    std::size_t search_epochs = 5;
    tune->add_option("--out", tune_log, "Trial log path (JSONL, resumable)");
    tune->add_flag("--tie-lengths", tie_lengths, "Search one length for both modalities");
    tune->add_flag("--search-overlap", search_overlap, "Also search overlap percentages");
    tune->add_option("--search-epochs", search_epochs, "Epochs per search fold");
    add_common_flags(tune, o, true);

    // train
    auto* train = app.add_subcommand("train", "Train encoders on the full dataset");
    std::string train_out, train_log;
    train->add_option("--out", train_out, "Checkpoint output path")->required();
    train->add_option("--log", train_log, "Training log path (default <out>.log.jsonl)");
    add_common_flags(train, o, true);

    // eval
    auto* eval = app.add_subcommand("eval", "Leave-one-subject-out evaluation");
    std::string eval_out = "eval.json", eval_ckpt;
    bool fast = false, no_retrain = false;
    std::size_t bins = 10;
    eval->add_option("--out", eval_out, "Evaluation report path");
    eval->add_option("--checkpoint", eval_ckpt, "Checkpoint (with --no-retrain)");
    eval->add_flag("--fast", fast, "Reuse search-phase epoch count");
    eval->add_flag("--no-retrain", no_retrain, "Evaluate a fixed checkpoint (no per-fold training)");
    eval->add_option("--bins", bins, "Similarity histogram bins");
    add_common_flags(eval, o, true);

    // predict
    auto* predict = app.add_subcommand("predict", "Predict one subject from array files");
    std::string pred_ckpt, pred_eeg, pred_fmri, pred_out;
    predict->add_option("--checkpoint", pred_ckpt, "Model checkpoint")->required();
    predict->add_option("--eeg", pred_eeg, "EEG array file (TADS)")->required();
    predict->add_option("--fmri", pred_fmri, "fMRI array file (TADS)")->required();
    predict->add_option("--out", pred_out, "Prediction JSON path");

    // report
    auto* report = app.add_subcommand("report", "Similarity histogram table from an eval report");
    std::string report_eval, report_out;
    report->add_option("--eval", report_eval, "Eval report JSON")->required();
    report->add_option("--out", report_out, "Report JSON output");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (gen->parsed()) {
            merge_config_file(gen, o);
            return cmd_generate(o, spec, gen_out);
        }
        if (tune->parsed()) {
            merge_config_file(tune, o);
            return cmd_tune(o, tune_log, tie_lengths, search_overlap, search_epochs);
        }
        if (train->parsed()) {
            merge_config_file(train, o);
            return cmd_train(o, train_out, train_log);
        }
        if (eval->parsed()) {
            merge_config_file(eval, o);
            return cmd_eval(o, eval_ckpt, no_retrain, fast, eval_out, bins);
        }
        if (predict->parsed()) {
            return cmd_predict(o, pred_ckpt, pred_eeg, pred_fmri, pred_out);
        }
        if (report->parsed()) {
            return cmd_report(report_eval, report_out);
        }
        throw ConfigError("no command given");
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return kExitData;
    } catch (const NumericError& e) {
        std::cerr << "numeric error: " << e.what() << "\n";
        return kExitNumeric;
    }
}

}  // namespace traitalign
