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

#include "traitalign/train.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <mutex>
#include <thread>
#include <unordered_map>

#include <json.hpp>

#include "traitalign/adam.hpp"
#include "traitalign/errors.hpp"
#include "traitalign/rng.hpp"
#include "traitalign/version.hpp"

namespace traitalign {

using nlohmann::json;

namespace {

struct SubjectChunks {
    const SubjectRecord* record = nullptr;
    std::vector<Chunk> eeg;
    std::vector<Chunk> fmri;
    std::vector<double> behavior_z;
};

std::vector<double> zscore(const std::vector<double>& v, const std::vector<double>& mean,
                           const std::vector<double>& std) {
    std::vector<double> out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = (v[i] - mean[i]) / std[i];
    return out;
}

void behavior_stats(const std::vector<const SubjectRecord*>& subjects, std::size_t scales,
                    std::vector<double>& mean, std::vector<double>& std) {
    mean.assign(scales, 0.0);
    std.assign(scales, 0.0);
    for (const auto* s : subjects) {
        if (s->behavior.size() != scales) throw DataError("train: behavior width mismatch");
        for (std::size_t q = 0; q < scales; ++q) mean[q] += s->behavior[q];
    }
    for (auto& m : mean) m /= static_cast<double>(subjects.size());
    for (const auto* s : subjects) {
        for (std::size_t q = 0; q < scales; ++q) {
            const double d = s->behavior[q] - mean[q];
            std[q] += d * d;
        }
    }
    for (auto& v : std) {
        v = std::sqrt(v / static_cast<double>(subjects.size()));
        if (v == 0.0) v = 1.0;  // degenerate scale: pass through centered
    }
}

std::vector<SubjectChunks> materialize(const std::vector<const SubjectRecord*>& subjects,
                                       const TrainConfig& cfg,
                                       const std::vector<double>& beh_mean,
                                       const std::vector<double>& beh_std) {
    const std::size_t c = cfg.encoder.channels;
    const std::size_t r = cfg.encoder.rois;
    std::vector<SubjectChunks> out;
    out.reserve(subjects.size());
    for (const auto* s : subjects) {
        if (s->eeg.size() % c != 0 || s->fmri.size() % r != 0) {
            throw DataError("train: recording size not divisible by channel/ROI count");
        }
        SubjectChunks sc;
        sc.record = s;
        sc.eeg = augment(s->eeg, c, s->eeg.size() / c, cfg.eeg_chunks, s->id, Modality::kEeg);
        sc.fmri =
            augment(s->fmri, r, s->fmri.size() / r, cfg.fmri_chunks, s->id, Modality::kFmri);
        sc.behavior_z = zscore(s->behavior, beh_mean, beh_std);
        out.push_back(std::move(sc));
    }
    return out;
}

}  // namespace

TrainConfig resolve_train_config(TrainConfig cfg, const CohortSpec& data_spec) {
    cfg.encoder.channels = data_spec.channels;
    cfg.encoder.rois = data_spec.rois;
    cfg.encoder.scales = data_spec.scales;
    return cfg;
}

TrainedModel train_encoders(const std::vector<const SubjectRecord*>& train_subjects,
                            const TrainConfig& cfg) {
    if (train_subjects.size() < 2) {
        throw DataError("train: need at least two subjects for contrastive batches");
    }
    cfg.eeg_chunks.validate();
    cfg.fmri_chunks.validate();

    TrainedModel out;
    behavior_stats(train_subjects, cfg.encoder.scales, out.beh_mean, out.beh_std);
    const auto data = materialize(train_subjects, cfg, out.beh_mean, out.beh_std);

    Rng init_rng(mix_seed(cfg.seed, 0x1217));
    out.encoders = EncoderSet::init(cfg.encoder, init_rng);
    if (cfg.eeg_chunks.length < out.encoders.eeg.min_chunk_length()) {
        throw DataError("train: EEG chunk shorter than the conv receptive field");
    }

    Adam opt(out.encoders.params(),
             {cfg.lr, 0.9, 0.999, 1e-8, cfg.weight_decay});
    Rng batch_rng(mix_seed(cfg.seed, 0xba7c));

    std::size_t total_eeg_chunks = 0;
    for (const auto& sc : data) total_eeg_chunks += sc.eeg.size();
    const std::size_t batches_per_epoch =
        cfg.batches_per_epoch > 0
            ? cfg.batches_per_epoch
            : std::max<std::size_t>(1, (total_eeg_chunks + cfg.batch_size - 1) / cfg.batch_size);

    std::vector<std::size_t> order(data.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        const auto t0 = std::chrono::steady_clock::now();
        double sum_neu = 0.0, sum_beh = 0.0, sum_total = 0.0;
        for (std::size_t b = 0; b < batches_per_epoch; ++b) {
            batch_rng.shuffle(order);
            const std::size_t n_sub = std::min<std::size_t>(
                order.size(), std::max<std::size_t>(cfg.min_subjects_per_batch, 16));

            std::unordered_map<std::size_t, TensorPtr> eeg_cache, fmri_cache, beh_cache;
            std::vector<TensorPtr> rows_e, rows_m, rows_h;
            std::vector<int> ids;
            rows_e.reserve(cfg.batch_size);
            rows_m.reserve(cfg.batch_size);
            rows_h.reserve(cfg.batch_size);
            for (std::size_t rI = 0; rI < cfg.batch_size; ++rI) {
                const std::size_t si = order[rI % n_sub];
                const auto& sc = data[si];
                const auto ei = static_cast<std::size_t>(
                    batch_rng.randint(0, static_cast<std::int64_t>(sc.eeg.size()) - 1));
                const auto mi = static_cast<std::size_t>(
                    batch_rng.randint(0, static_cast<std::int64_t>(sc.fmri.size()) - 1));

                const std::size_t ekey = si * 1000003 + ei;
                auto eit = eeg_cache.find(ekey);
                if (eit == eeg_cache.end()) {
                    eit = eeg_cache.emplace(ekey, encode_eeg(sc.eeg[ei], out.encoders.eeg))
                              .first;
                }
                const std::size_t mkey = si * 1000003 + mi;
                auto mit = fmri_cache.find(mkey);
                if (mit == fmri_cache.end()) {
                    mit = fmri_cache.emplace(mkey, encode_fmri(sc.fmri[mi], out.encoders.fmri))
                              .first;
                }
                auto hit = beh_cache.find(si);
                if (hit == beh_cache.end()) {
                    hit = beh_cache
                              .emplace(si, encode_behavior(sc.behavior_z,
                                                           out.encoders.behavior))
                              .first;
                }
                rows_e.push_back(eit->second);
                rows_m.push_back(mit->second);
                rows_h.push_back(hit->second);
                ids.push_back(sc.record->id);
            }

            BatchEmbeddings batch;
            batch.eeg = stack_rows(rows_e);
            batch.fmri = stack_rows(rows_m);
            batch.behavior = stack_rows(rows_h);
            batch.subject_ids = std::move(ids);
            batch.tau = cfg.tau;

            const auto losses = total_loss(batch, cfg.lambda_beh, cfg.loss_mode);
            opt.zero_grad();
            backward(losses.total);
            opt.step();

            sum_neu += losses.neu->value();
            sum_beh += losses.beh->value();
            sum_total += losses.total->value();
        }
        const auto t1 = std::chrono::steady_clock::now();
        EpochLogEntry entry;
        entry.epoch = epoch;
        entry.loss_neu = sum_neu / static_cast<double>(batches_per_epoch);
        entry.loss_beh = sum_beh / static_cast<double>(batches_per_epoch);
        entry.total = sum_total / static_cast<double>(batches_per_epoch);
        entry.wall_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
        out.log.push_back(entry);
    }
    return out;
}

SubjectChunkEmbeddings embed_subject(const SubjectRecord& subject, const TrainedModel& model,
                                     const TrainConfig& cfg) {
    NoGradGuard no_grad;
    SubjectChunkEmbeddings out;
    const std::size_t c = cfg.encoder.channels;
    const std::size_t r = cfg.encoder.rois;
    const auto eeg_chunks =
        augment(subject.eeg, c, subject.eeg.size() / c, cfg.eeg_chunks, subject.id,
                Modality::kEeg);
    const auto fmri_chunks =
        augment(subject.fmri, r, subject.fmri.size() / r, cfg.fmri_chunks, subject.id,
                Modality::kFmri);
    for (const auto& ch : eeg_chunks) out.eeg.push_back(encode_eeg(ch, model.encoders.eeg)->data);
    for (const auto& ch : fmri_chunks) {
        out.fmri.push_back(encode_fmri(ch, model.encoders.fmri)->data);
    }
    return out;
}

PredictorIndex build_index(const std::vector<const SubjectRecord*>& train_subjects,
                           const TrainedModel& model, const TrainConfig& cfg) {
    PredictorIndex index;
    index.k = std::min<std::size_t>(cfg.k, train_subjects.size());
    for (const auto* s : train_subjects) {
        const auto embs = embed_subject(*s, model, cfg);
        index.embeddings.push_back(
            aggregate_subject(embs.eeg, embs.fmri, cfg.tau_a, cfg.aggregation, s->id));
        index.scores.push_back(s->trait);
        index.classes.push_back(s->label);
    }
    return index;
}

EvalResult loso_evaluate(const Cohort& cohort, const TrainConfig& base_cfg, std::size_t jobs,
                         std::size_t histogram_bins) {
    if (cohort.subjects.size() < 3) throw DataError("loso: need at least 3 subjects");
    const TrainConfig cfg = resolve_train_config(base_cfg, cohort.spec);
    const std::size_t folds = cohort.subjects.size();

    std::vector<SubjectResult> results(folds);
    std::vector<SimilarityHistogram> hists(folds, make_similarity_histogram(histogram_bins));
    std::atomic<std::size_t> next_fold{0};
    std::atomic<bool> failed{false};
    std::string error_message;
    std::mutex error_mutex;

    auto worker = [&]() {
        while (!failed.load()) {
            const std::size_t fold = next_fold.fetch_add(1);
            if (fold >= folds) break;
            try {
                std::vector<const SubjectRecord*> train;
                for (std::size_t i = 0; i < folds; ++i) {
                    if (i != fold) train.push_back(&cohort.subjects[i]);
                }
                TrainConfig fold_cfg = cfg;
                fold_cfg.seed = mix_seed(cfg.seed, 0xf01d + fold);
                const auto model = train_encoders(train, fold_cfg);
                const auto index = build_index(train, model, fold_cfg);

                const auto& held = cohort.subjects[fold];
                const auto embs = embed_subject(held, model, fold_cfg);
                const auto agg = aggregate_subject(embs.eeg, embs.fmri, fold_cfg.tau_a,
                                                   fold_cfg.aggregation, held.id);
                const auto pred = knn_predict(index, agg.vec, fold_cfg.vote_rule);
                results[fold] = {held.id, held.trait, held.label, pred.score, pred.label};
                report_chunk_similarity(hists[fold], embs.eeg, embs.fmri, &index, held.label,
                                        fold_cfg.vote_rule);
            } catch (const std::exception& e) {
                std::lock_guard<std::mutex> lock(error_mutex);
                failed.store(true);
                if (error_message.empty()) error_message = e.what();
            }
        }
    };

    const std::size_t n_threads = std::max<std::size_t>(1, std::min(jobs, folds));
    if (n_threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    if (failed.load()) throw DataError("loso: fold failed: " + error_message);

    EvalResult out;
    out.per_subject = std::move(results);
    out.histogram = make_similarity_histogram(histogram_bins);
    for (const auto& h : hists) {
        for (std::size_t b = 0; b < histogram_bins; ++b) {
            out.histogram.counts[b] += h.counts[b];
            out.histogram.labeled[b] += h.labeled[b];
            out.histogram.correct[b] += h.correct[b];
        }
    }
    std::vector<double> ps, ts;
    std::vector<int> pl, tl;
    for (const auto& r : out.per_subject) {
        ps.push_back(r.pred_score);
        pl.push_back(r.pred_label);
        ts.push_back(r.truth_score);
        tl.push_back(r.truth_label);
    }
    out.metrics = compute_metrics(ps, pl, ts, tl);
    return out;
}

namespace {

std::string loss_mode_name(LossMode m) {
    return m == LossMode::kSubjectAware ? "subject_aware" : "onehot";
}
std::string aggregation_name(AggregationMode m) {
    return m == AggregationMode::kNoiseInformed ? "noise" : "uniform";
}
std::string vote_name(VoteRule v) {
    return v == VoteRule::kMajority ? "majority" : "threshold";
}

json train_config_to_json(const TrainConfig& cfg) {
    return {{"epochs", cfg.epochs},
            {"batch_size", cfg.batch_size},
            {"lr", cfg.lr},
            {"weight_decay", cfg.weight_decay},
            {"tau", cfg.tau},
            {"lambda_beh", cfg.lambda_beh},
            {"tau_a", cfg.tau_a},
            {"k", cfg.k},
            {"eeg_chunk", {{"length", cfg.eeg_chunks.length}, {"overlap", cfg.eeg_chunks.overlap}}},
            {"fmri_chunk",
             {{"length", cfg.fmri_chunks.length}, {"overlap", cfg.fmri_chunks.overlap}}},
            {"loss_mode", loss_mode_name(cfg.loss_mode)},
            {"aggregation", aggregation_name(cfg.aggregation)},
            {"vote_rule", vote_name(cfg.vote_rule)},
            {"min_subjects_per_batch", cfg.min_subjects_per_batch},
            {"batches_per_epoch", cfg.batches_per_epoch},
            {"seed", cfg.seed},
            {"encoder",
             {{"channels", cfg.encoder.channels},
              {"rois", cfg.encoder.rois},
              {"scales", cfg.encoder.scales},
              {"embed_dim", cfg.encoder.embed_dim},
              {"mix_width", cfg.encoder.mix_width},
              {"twc_depth", cfg.encoder.twc_depth},
              {"kernel", cfg.encoder.kernel},
              {"gcn_features", cfg.encoder.gcn_features},
              {"spline_basis", cfg.encoder.spline_basis},
              {"spline_degree", cfg.encoder.spline_degree},
              {"leaky_slope", cfg.encoder.leaky_slope}}}};
}

TrainConfig train_config_from_json(const json& j) {
    TrainConfig cfg;
    cfg.epochs = j.at("epochs").get<std::size_t>();
    cfg.batch_size = j.at("batch_size").get<std::size_t>();
    cfg.lr = j.at("lr").get<double>();
    cfg.weight_decay = j.at("weight_decay").get<double>();
    cfg.tau = j.at("tau").get<double>();
    cfg.lambda_beh = j.at("lambda_beh").get<double>();
    cfg.tau_a = j.at("tau_a").get<double>();
    cfg.k = j.at("k").get<std::size_t>();
    cfg.eeg_chunks = {j.at("eeg_chunk").at("length").get<std::size_t>(),
                      j.at("eeg_chunk").at("overlap").get<std::size_t>()};
    cfg.fmri_chunks = {j.at("fmri_chunk").at("length").get<std::size_t>(),
                       j.at("fmri_chunk").at("overlap").get<std::size_t>()};
    cfg.loss_mode = j.at("loss_mode").get<std::string>() == "onehot" ? LossMode::kOneHot
                                                                     : LossMode::kSubjectAware;
    cfg.aggregation = j.at("aggregation").get<std::string>() == "uniform"
                          ? AggregationMode::kUniform
                          : AggregationMode::kNoiseInformed;
    cfg.vote_rule = j.at("vote_rule").get<std::string>() == "threshold"
                        ? VoteRule::kThresholdedMean
                        : VoteRule::kMajority;
    cfg.min_subjects_per_batch = j.at("min_subjects_per_batch").get<std::size_t>();
    cfg.batches_per_epoch = j.at("batches_per_epoch").get<std::size_t>();
    cfg.seed = j.at("seed").get<std::uint64_t>();
    const auto& e = j.at("encoder");
    cfg.encoder.channels = e.at("channels").get<std::size_t>();
    cfg.encoder.rois = e.at("rois").get<std::size_t>();
    cfg.encoder.scales = e.at("scales").get<std::size_t>();
    cfg.encoder.embed_dim = e.at("embed_dim").get<std::size_t>();
    cfg.encoder.mix_width = e.at("mix_width").get<std::size_t>();
    cfg.encoder.twc_depth = e.at("twc_depth").get<std::size_t>();
    cfg.encoder.kernel = e.at("kernel").get<std::size_t>();
    cfg.encoder.gcn_features = e.at("gcn_features").get<std::size_t>();
    cfg.encoder.spline_basis = e.at("spline_basis").get<std::size_t>();
    cfg.encoder.spline_degree = e.at("spline_degree").get<int>();
    cfg.encoder.leaky_slope = e.at("leaky_slope").get<double>();
    return cfg;
}

TensorPtr string_to_tensor(const std::string& s) {
    std::vector<double> bytes(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
        bytes[i] = static_cast<double>(static_cast<unsigned char>(s[i]));
    }
    return Tensor::from({s.size()}, std::move(bytes));
}

std::string tensor_to_string(const TensorPtr& t) {
    std::string s(t->size(), '\0');
    for (std::size_t i = 0; i < t->size(); ++i) {
        s[i] = static_cast<char>(static_cast<unsigned char>(t->data[i]));
    }
    return s;
}

}  // namespace

void save_model(const std::string& path, const ModelBundle& bundle) {
    auto tensors = bundle.model.encoders.named_tensors();
    tensors.push_back({"beh_norm/mean", Tensor::from({bundle.model.beh_mean.size()},
                                                     bundle.model.beh_mean)});
    tensors.push_back(
        {"beh_norm/std", Tensor::from({bundle.model.beh_std.size()}, bundle.model.beh_std)});

    const auto& index = bundle.index;
    const std::size_t n = index.size();
    const std::size_t width = n > 0 ? index.embeddings[0].vec.size() : 0;
    std::vector<double> flat(n * width);
    std::vector<double> scores(n), classes(n), sids(n), n_eeg(n), n_fmri(n);
    for (std::size_t i = 0; i < n; ++i) {
        std::copy(index.embeddings[i].vec.begin(), index.embeddings[i].vec.end(),
                  flat.begin() + i * width);
        scores[i] = index.scores[i];
        classes[i] = static_cast<double>(index.classes[i]);
        sids[i] = static_cast<double>(index.embeddings[i].subject_id);
        n_eeg[i] = static_cast<double>(index.embeddings[i].n_eeg);
        n_fmri[i] = static_cast<double>(index.embeddings[i].n_fmri);
    }
    tensors.push_back({"index/embeddings", Tensor::from({n, width}, std::move(flat))});
    tensors.push_back({"index/scores", Tensor::from({n}, std::move(scores))});
    tensors.push_back({"index/classes", Tensor::from({n}, std::move(classes))});
    tensors.push_back({"index/subject_ids", Tensor::from({n}, std::move(sids))});
    tensors.push_back({"index/n_eeg", Tensor::from({n}, std::move(n_eeg))});
    tensors.push_back({"index/n_fmri", Tensor::from({n}, std::move(n_fmri))});

    json meta;
    meta["version"] = kVersion;
    meta["train_config"] = train_config_to_json(bundle.cfg);
    meta["k"] = index.k;
    if (!bundle.config_json.empty()) {
        meta["run_config"] = json::parse(bundle.config_json, nullptr, false);
        if (meta["run_config"].is_discarded()) meta["run_config"] = bundle.config_json;
    }
    tensors.push_back({"meta/model_json", string_to_tensor(meta.dump())});

    save_checkpoint(path, tensors);
}

ModelBundle load_model(const std::string& path) {
    const auto tensors = load_checkpoint(path);
    std::unordered_map<std::string, TensorPtr> by_name;
    for (const auto& nt : tensors) by_name[nt.name] = nt.tensor;
    auto get = [&](const std::string& name) -> TensorPtr {
        auto it = by_name.find(name);
        if (it == by_name.end()) throw DataError("model: missing tensor " + name);
        return it->second;
    };

    ModelBundle bundle;
    json meta = json::parse(tensor_to_string(get("meta/model_json")), nullptr, false);
    if (meta.is_discarded()) throw DataError("model: corrupt meta json");
    bundle.cfg = train_config_from_json(meta.at("train_config"));
    bundle.config_json = meta.contains("run_config") ? meta["run_config"].dump() : "";

    bundle.model.encoders = EncoderSet::from_named_tensors(bundle.cfg.encoder, tensors);
    bundle.model.beh_mean = get("beh_norm/mean")->data;
    bundle.model.beh_std = get("beh_norm/std")->data;

    const auto emb = get("index/embeddings");
    const std::size_t n = emb->rows(), width = emb->cols();
    const auto scores = get("index/scores");
    const auto classes = get("index/classes");
    const auto sids = get("index/subject_ids");
    const auto n_eeg = get("index/n_eeg");
    const auto n_fmri = get("index/n_fmri");
    bundle.index.k = meta.at("k").get<std::size_t>();
    for (std::size_t i = 0; i < n; ++i) {
        SubjectEmbedding se;
        se.subject_id = static_cast<int>(sids->data[i]);
        se.n_eeg = static_cast<std::size_t>(n_eeg->data[i]);
        se.n_fmri = static_cast<std::size_t>(n_fmri->data[i]);
        se.vec.assign(emb->data.begin() + i * width, emb->data.begin() + (i + 1) * width);
        bundle.index.embeddings.push_back(std::move(se));
        bundle.index.scores.push_back(scores->data[i]);
        bundle.index.classes.push_back(static_cast<int>(classes->data[i]));
    }
    return bundle;
}

}  // namespace traitalign
