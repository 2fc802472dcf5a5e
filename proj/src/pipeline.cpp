#include "tracelink/pipeline.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <set>
#include <utility>

#include <json.hpp>

#include "tracelink/doc_vectors.hpp"
#include "tracelink/error.hpp"
#include "tracelink/metrics.hpp"
#include "tracelink/parallel.hpp"

namespace fs = std::filesystem;

namespace tracelink {

namespace {

using nlohmann::json;

template <typename Fn>
auto stage(const std::string& name, Fn&& fn) -> decltype(fn()) {
    try {
        return fn();
    } catch (const Error& e) {
        throw Error(e.kind(), "stage " + name + ": " + e.message());
    } catch (const std::exception& e) {
        throw Error(ErrorKind::IoError, "stage " + name + ": " + e.what());
    }
}

void ensure_dir(const fs::path& dir) {
    if (dir.empty()) {
        return;
    }
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) {
        throw Error(ErrorKind::IoError,
                    "cannot create directory '" + dir.string() + "': " + ec.message());
    }
}

void write_text_file(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw Error(ErrorKind::IoError, "cannot open '" + path.string() + "' for writing");
    }
    out << text;
    out.flush();
    if (!out) {
        throw Error(ErrorKind::IoError, "write to '" + path.string() + "' failed");
    }
}

json parse_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error(ErrorKind::IoError, "cannot open config '" + path + "'");
    }
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        throw Error(ErrorKind::InvalidConfig, "config '" + path + "': " + e.what());
    }
    if (!doc.is_object()) {
        throw Error(ErrorKind::InvalidConfig, "config '" + path + "': root must be an object");
    }
    return doc;
}

std::vector<DocumentVector> embed_all(const WordEmbeddingModel& model,
                                      const std::vector<Artifact>& artifacts, unsigned threads) {
    std::vector<DocumentVector> vectors(artifacts.size());
    parallel_for(artifacts.size(), threads, [&](std::size_t i) {
        vectors[i] = embed_document(model, artifacts[i].id, artifacts[i].tokens);
    });
    return vectors;
}

DistanceMatrix filter_sources(const DistanceMatrix& m, const std::set<std::string>& keep) {
    DistanceMatrix out;
    out.metric_tag = m.metric_tag;
    out.target_ids = m.target_ids;
    for (std::size_t i = 0; i < m.n_sources(); ++i) {
        if (!keep.count(m.source_ids[i])) {
            continue;
        }
        out.source_ids.push_back(m.source_ids[i]);
        const float* row = m.values.data() + i * m.n_targets();
        out.values.insert(out.values.end(), row, row + m.n_targets());
    }
    return out;
}

std::string format_distance(double value) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6f", value);
    return buf;
}

} // namespace

RunConfig load_run_config(const std::string& path) {
    const json doc = parse_json_file(path);
    RunConfig config;
    try {
        if (doc.contains("dataset")) {
            config.dataset_path = doc.at("dataset").get<std::string>();
        }
        if (doc.contains("embeddings")) {
            for (const auto& [name, value] : doc.at("embeddings").items()) {
                config.embeddings[name] = value.get<std::string>();
            }
        }
        if (doc.contains("transfer_models")) {
            for (const auto& [name, value] : doc.at("transfer_models").items()) {
                config.transfer_models[name] = value.get<std::string>();
            }
        }
        if (doc.contains("out")) {
            config.out_dir = doc.at("out").get<std::string>();
        }
        if (doc.contains("seed")) {
            config.train.seed = doc.at("seed").get<std::uint64_t>();
        }
        if (doc.contains("threads")) {
            config.threads = doc.at("threads").get<unsigned>();
        }
        if (doc.contains("train")) {
            const json& t = doc.at("train");
            const auto real = [&](const char* key, double& slot) {
                if (t.contains(key)) {
                    slot = t.at(key).get<double>();
                }
            };
            const auto count = [&](const char* key, std::size_t& slot) {
                if (t.contains(key)) {
                    slot = t.at(key).get<std::size_t>();
                }
            };
            real("learning_rate", config.train.learning_rate);
            real("beta1", config.train.beta1);
            real("beta2", config.train.beta2);
            real("epsilon", config.train.epsilon);
            real("dropout_rate", config.train.dropout_rate);
            real("train_fraction", config.train.mode.train_fraction);
            count("epochs", config.train.epochs);
            count("batch_size", config.train.batch_size);
            count("negative_ratio", config.train.negative_ratio);
            count("h1", config.train.h1);
            count("h2", config.train.h2);
            if (t.contains("mode")) {
                const std::string mode = t.at("mode").get<std::string>();
                if (mode == "full_overlap") {
                    config.train.mode.split = false;
                } else if (mode == "split") {
                    config.train.mode.split = true;
                } else {
                    throw Error(ErrorKind::InvalidConfig,
                                "unknown train mode '" + mode +
                                    "' (expected full_overlap or split)");
                }
            }
        }
    } catch (const json::exception& e) {
        throw Error(ErrorKind::InvalidConfig, "config '" + path + "': " + e.what());
    }
    return config;
}

void validate_run_config(const RunConfig& config) {
    if (config.dataset_path.empty()) {
        throw Error(ErrorKind::InvalidConfig, "a dataset path is required");
    }
    if (!fs::exists(config.dataset_path)) {
        throw Error(ErrorKind::InvalidConfig,
                    "dataset '" + config.dataset_path + "' does not exist");
    }
    if (config.embeddings.empty()) {
        throw Error(ErrorKind::InvalidConfig, "at least one embedding model is required");
    }
    for (const auto& [name, path] : config.embeddings) {
        if (name.empty()) {
            throw Error(ErrorKind::InvalidConfig, "embedding model names must be non-empty");
        }
        if (!fs::exists(path)) {
            throw Error(ErrorKind::InvalidConfig,
                        "embedding '" + name + "': '" + path + "' does not exist");
        }
    }
    for (const auto& [name, path] : config.transfer_models) {
        if (!config.embeddings.count(name)) {
            throw Error(ErrorKind::InvalidConfig,
                        "transfer model '" + name + "' has no matching embedding entry");
        }
        if (!fs::exists(path)) {
            throw Error(ErrorKind::InvalidConfig,
                        "transfer model '" + name + "': '" + path + "' does not exist");
        }
    }
    if (config.out_dir.empty()) {
        throw Error(ErrorKind::InvalidConfig, "an output directory is required");
    }
    validate_config(config.train);
}

DatasetBuild cmd_ingest(const IngestOptions& options, std::ostream& diag) {
    DatasetBuild build;
    switch (options.kind) {
    case TaskKind::Traceability: {
        const auto commits = load_commits_jsonl(options.commits_path);
        const auto tickets = load_tickets_jsonl(options.tickets_path);
        build = build_traceability(commits, tickets, options.ticket_pattern);
        break;
    }
    case TaskKind::Duplicates: {
        const auto tickets = load_tickets_jsonl(options.tickets_path);
        const auto links = load_links_csv(options.links_path);
        build = build_duplicates(tickets, links);
        break;
    }
    case TaskKind::SummaryToDescription: {
        const auto tickets = load_tickets_jsonl(options.tickets_path);
        build = build_summary_description(tickets);
        break;
    }
    }
    if (!options.out_path.empty()) {
        ensure_dir(fs::path(options.out_path).parent_path());
        save_dataset_jsonl(build.dataset, options.out_path);
    }
    const TaskDataset& d = build.dataset;
    diag << "[ingest] kind=" << task_kind_name(d.kind) << " sources=" << d.sources.size()
         << " targets=" << d.targets.size() << " links=" << d.links.size()
         << " dropped_sources=" << build.stats.sources_dropped
         << " dropped_targets=" << build.stats.targets_dropped
         << " dropped_links=" << build.stats.links_dropped << "\n";
    return build;
}

PipelineOutcome cmd_pipeline(const RunConfig& config, std::ostream& diag) {
    stage("config", [&] {
        validate_run_config(config);
        return 0;
    });
    const unsigned threads = config.threads ? config.threads : default_thread_count();

    const TaskDataset dataset =
        stage("dataset", [&] { return load_dataset_jsonl(config.dataset_path); });
    diag << "[pipeline] dataset: kind=" << task_kind_name(dataset.kind)
         << " sources=" << dataset.sources.size() << " targets=" << dataset.targets.size()
         << " links=" << dataset.links.size() << "\n";

    const fs::path out_root(config.out_dir);
    for (const char* sub : {"vectors", "matrices", "models", "curves"}) {
        ensure_dir(out_root / sub);
    }
    // flags partial output until the run finishes
    const fs::path marker = out_root / ".incomplete";
    write_text_file(marker, "run did not finish\n");

    PipelineOutcome outcome;
    const auto record = [&](const fs::path& rel) { outcome.files.push_back(rel.generic_string()); };

    GoldLinks gold = dataset.links;
    std::set<std::string> eval_sources;
    if (config.train.mode.split) {
        gold = stage("split", [&] {
            auto parts =
                split_links(dataset.links, config.train.mode.train_fraction, config.train.seed);
            if (parts.second.empty()) {
                throw Error(ErrorKind::EmptyDataset, "the split left no evaluation links");
            }
            return parts.second;
        });
        for (const auto& [src, tgt] : gold) {
            eval_sources.insert(src);
        }
        diag << "[pipeline] split mode: " << (dataset.links.size() - gold.size())
             << " train links, " << gold.size() << " eval links, " << eval_sources.size()
             << " eval sources\n";
    }

    const auto save_and_record = [&](const DistanceMatrix& m) {
        const fs::path rel = fs::path("matrices") / (sanitize_tag(m.metric_tag) + ".dmat");
        save_matrix(m, (out_root / rel).string());
        record(rel);
    };

    struct TagTriple {
        std::string cos;
        std::string nl;
        std::string combined;
    };
    std::vector<DistanceMatrix> cos_list;
    std::vector<DistanceMatrix> nl_list;
    std::vector<DistanceMatrix> ordered; // evaluation and report order
    std::vector<TagTriple> triples;

    for (const auto& [name, path] : config.embeddings) {
        const WordEmbeddingModel model =
            stage("embeddings:" + name, [&] { return load_text_embeddings(path, name); });
        diag << "[pipeline] model '" << name << "': " << model.size() << " tokens, dim "
             << model.dim() << "\n";

        const auto source_vecs = stage("vectors:" + name,
                                       [&] { return embed_all(model, dataset.sources, threads); });
        const auto target_vecs = stage("vectors:" + name,
                                       [&] { return embed_all(model, dataset.targets, threads); });
        {
            const fs::path src_rel = fs::path("vectors") / (sanitize_tag(name) + "_sources.dvec");
            const fs::path tgt_rel = fs::path("vectors") / (sanitize_tag(name) + "_targets.dvec");
            save_document_vectors(source_vecs, (out_root / src_rel).string());
            save_document_vectors(target_vecs, (out_root / tgt_rel).string());
            record(src_rel);
            record(tgt_rel);
        }

        const DistanceMatrix cos = stage("cosine:" + name, [&] {
            return distance_matrix(source_vecs, target_vecs, CosineMetric{}, "cos:" + name,
                                   threads);
        });
        save_and_record(cos);

        MlpModel nl_model;
        std::string nl_tag;
        if (const auto it = config.transfer_models.find(name);
            it != config.transfer_models.end()) {
            nl_model = stage("load-model:" + name, [&] {
                MlpModel loaded = load_model(it->second);
                if (loaded.input_dim != model.dim()) {
                    throw Error(ErrorKind::DimensionMismatch,
                                "transfer model expects input dim " +
                                    std::to_string(loaded.input_dim) + ", embedding has " +
                                    std::to_string(model.dim()));
                }
                return loaded;
            });
            nl_tag = "nl:transfer:" + name;
            diag << "[pipeline] model '" << name << "': transfer weights from '" << it->second
                 << "'\n";
        } else {
            DocumentVectorMap vmap;
            for (const auto& v : source_vecs) {
                vmap.sources.emplace(v.artifact_id, v);
            }
            for (const auto& v : target_vecs) {
                vmap.targets.emplace(v.artifact_id, v);
            }
            const TrainResult trained =
                stage("train:" + name, [&] { return train(dataset, vmap, config.train); });
            nl_model = trained.model;
            const fs::path rel = fs::path("models") / ("nl_" + sanitize_tag(name) + ".json");
            save_model(nl_model, (out_root / rel).string());
            record(rel);
            nl_tag = "nl:" + name;
            diag << "[pipeline] model '" << name << "': trained " << trained.epoch_loss.size()
                 << " epochs, final loss "
                 << (trained.epoch_loss.empty() ? 0.0 : trained.epoch_loss.back()) << "\n";
        }

        const DistanceMatrix nl = stage("nl:" + name, [&] {
            return distance_matrix(source_vecs, target_vecs, NlMetric{&nl_model}, nl_tag, threads);
        });
        save_and_record(nl);

        const DistanceMatrix combined = stage("combine:" + name, [&] {
            const std::vector<DistanceMatrix> parts{cos, nl};
            DistanceMatrix c = combine_matrices(parts);
            c.metric_tag = "combined:" + name;
            return c;
        });
        save_and_record(combined);

        triples.push_back({cos.metric_tag, nl.metric_tag, combined.metric_tag});
        cos_list.push_back(cos);
        nl_list.push_back(nl);
        ordered.push_back(std::move(cos));
        ordered.push_back(std::move(nl));
        ordered.push_back(std::move(combined));
    }

    if (config.embeddings.size() >= 2) {
        stage("combine:2M", [&] {
            DistanceMatrix cos2m = combine_matrices(cos_list);
            cos2m.metric_tag = "cos:2M";
            DistanceMatrix nl2m = combine_matrices(nl_list);
            nl2m.metric_tag = "nl:2M";
            const std::vector<DistanceMatrix> both{cos2m, nl2m};
            DistanceMatrix comb2m = combine_matrices(both);
            comb2m.metric_tag = "combined:2M";
            save_and_record(cos2m);
            save_and_record(nl2m);
            save_and_record(comb2m);
            triples.push_back({cos2m.metric_tag, nl2m.metric_tag, comb2m.metric_tag});
            ordered.push_back(std::move(cos2m));
            ordered.push_back(std::move(nl2m));
            ordered.push_back(std::move(comb2m));
            return 0;
        });
    }

    const std::vector<AccuracyCurve> curves = stage("evaluate", [&] {
        std::vector<AccuracyCurve> out;
        out.reserve(ordered.size());
        for (const DistanceMatrix& m : ordered) {
            if (config.train.mode.split) {
                out.push_back(accuracy_curve(filter_sources(m, eval_sources), gold));
            } else {
                out.push_back(accuracy_curve(m, gold));
            }
        }
        return out;
    });

    std::vector<CurvePairing> pairings;
    for (const TagTriple& t : triples) {
        pairings.push_back({t.nl, t.cos});
        pairings.push_back({t.nl, t.combined});
    }

    outcome.report = stage("report", [&] { return report(curves, pairings); });
    write_text_file(out_root / "report.txt", outcome.report.text);
    record("report.txt");
    for (const auto& [tag, csv] : outcome.report.curve_csvs) {
        const fs::path rel = fs::path("curves") / curve_csv_filename(tag);
        write_text_file(out_root / rel, csv);
        record(rel);
    }

    fs::remove(marker);
    diag << "[pipeline] wrote " << outcome.files.size() << " files under '" << config.out_dir
         << "'\n";
    return outcome;
}

std::vector<Recommendation> cmd_recommend(const RecommendOptions& options, std::ostream& out,
                                          std::ostream& diag) {
    const bool want_cos = options.metric == "cos" || options.metric == "combined";
    const bool want_nl = options.metric == "nl" || options.metric == "combined";
    if (!want_cos && !want_nl) {
        throw Error(ErrorKind::UnknownMetricTag,
                    "unknown metric '" + options.metric + "' (expected cos, nl or combined)");
    }
    if (options.k == 0) {
        throw Error(ErrorKind::InvalidConfig, "k must be positive");
    }

    const TaskDataset dataset = load_dataset_jsonl(options.dataset_path);
    const WordEmbeddingModel model =
        load_text_embeddings(options.embedding_path, options.embedding_name);

    const std::vector<std::string> tokens = tokenize(options.query);
    if (tokens.empty()) {
        throw Error(ErrorKind::EmptyQuery, "the query has no usable tokens");
    }
    const DocumentVector query = embed_document(model, "query", tokens);
    if (query.oov_count == query.token_count) {
        diag << "warning: every query token is out of vocabulary; distances are neutral\n";
    }

    const std::vector<DocumentVector> query_row{query};
    const std::vector<DocumentVector> target_vecs = embed_all(model, dataset.targets, 1);

    MlpModel nl_model;
    std::vector<DistanceMatrix> parts;
    if (want_cos) {
        parts.push_back(distance_matrix(query_row, target_vecs, CosineMetric{}, "cos", 1));
    }
    if (want_nl) {
        if (options.model_path.empty()) {
            throw Error(ErrorKind::InvalidConfig,
                        "metric '" + options.metric + "' needs a trained model file");
        }
        nl_model = load_model(options.model_path);
        parts.push_back(distance_matrix(query_row, target_vecs, NlMetric{&nl_model}, "nl", 1));
    }
    const DistanceMatrix m = parts.size() == 1 ? std::move(parts.front())
                                               : combine_matrices(parts);

    std::size_t k = options.k;
    if (k > m.n_targets()) {
        diag << "warning: k=" << k << " exceeds the " << m.n_targets()
             << " available targets; clamped\n";
        k = m.n_targets();
    }

    std::vector<Recommendation> recs;
    for (const auto& [id, distance] : rank_targets(m, 0, k)) {
        recs.push_back({id, distance});
        out << id << "\t" << format_distance(distance) << "\n";
    }
    return recs;
}

std::string cmd_combine(const std::vector<std::string>& matrix_paths, const std::string& out_path,
                        std::ostream& diag) {
    if (matrix_paths.size() < 2) {
        throw Error(ErrorKind::InvalidConfig, "need at least two matrices to combine");
    }
    std::vector<DistanceMatrix> matrices;
    matrices.reserve(matrix_paths.size());
    for (const std::string& path : matrix_paths) {
        matrices.push_back(load_matrix(path, fs::path(path).stem().string()));
    }
    const DistanceMatrix combined = combine_matrices(matrices);
    ensure_dir(fs::path(out_path).parent_path());
    save_matrix(combined, out_path);
    diag << "[combine] " << combined.metric_tag << " -> " << out_path << "\n";
    return combined.metric_tag;
}

Report cmd_eval(const std::string& dataset_path, const std::vector<std::string>& matrix_paths,
                const std::vector<CurvePairing>& pairings, const std::string& out_dir,
                std::ostream& diag) {
    if (matrix_paths.empty()) {
        throw Error(ErrorKind::InvalidConfig, "no matrices to evaluate");
    }
    const TaskDataset dataset = load_dataset_jsonl(dataset_path);
    std::vector<AccuracyCurve> curves;
    curves.reserve(matrix_paths.size());
    for (const std::string& path : matrix_paths) {
        const DistanceMatrix m = load_matrix(path, fs::path(path).stem().string());
        curves.push_back(accuracy_curve(m, dataset.links));
    }
    const Report rep = report(curves, pairings);

    const fs::path root(out_dir);
    ensure_dir(root / "curves");
    write_text_file(root / "report.txt", rep.text);
    for (const auto& [tag, csv] : rep.curve_csvs) {
        write_text_file(root / "curves" / curve_csv_filename(tag), csv);
    }
    diag << "[eval] " << curves.size() << " curves -> " << (root / "report.txt").string() << "\n";
    return rep;
}

} // namespace tracelink
