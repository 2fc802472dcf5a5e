#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "tracelink/error.hpp"
#include "tracelink/pipeline.hpp"

namespace {

tracelink::CurvePairing parse_pairing(const std::string& spec) {
    const auto comma = spec.find(',');
    if (comma == std::string::npos || comma == 0 || comma + 1 == spec.size()) {
        throw tracelink::Error(tracelink::ErrorKind::InvalidConfig,
                               "pairing '" + spec + "' must be 'challenger,baseline'");
    }
    return {spec.substr(0, comma), spec.substr(comma + 1)};
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Trace-link recommendation toolkit"};
    app.require_subcommand(1);
    app.fallthrough();

    std::string config_path;
    std::uint64_t seed = 0;
    std::string out_dir;
    unsigned threads = 0;
    app.add_option("--config", config_path, "Run configuration (JSON)");
    auto* seed_opt = app.add_option("--seed", seed, "Seed for every stochastic component");
    auto* out_opt = app.add_option("--out", out_dir, "Output directory or file");
    auto* threads_opt = app.add_option("--threads", threads, "Worker cap for matrix rows");

    auto* ingest = app.add_subcommand("ingest", "Build a task dataset from raw records");
    std::string kind_name = "traceability";
    tracelink::IngestOptions ingest_options;
    ingest->add_option("--kind", kind_name, "traceability | duplicates | summary_to_description");
    ingest->add_option("--commits", ingest_options.commits_path, "Commits JSONL");
    ingest->add_option("--tickets", ingest_options.tickets_path, "Tickets JSONL");
    ingest->add_option("--links", ingest_options.links_path, "Duplicate-links CSV");
    ingest->add_option("--ticket-pattern", ingest_options.ticket_pattern,
                       "Ticket id regex for traceability");

    auto* pipeline = app.add_subcommand("pipeline", "Run the full pipeline from a config");
    std::string dataset_override;
    pipeline->add_option("--dataset", dataset_override, "Dataset JSONL (overrides the config)");

    auto* recommend = app.add_subcommand("recommend", "Rank targets for a free-text query");
    tracelink::RecommendOptions rec_options;
    recommend->add_option("--dataset", rec_options.dataset_path, "Dataset JSONL")->required();
    recommend->add_option("--embedding", rec_options.embedding_path, "Word2vec text model")
        ->required();
    recommend->add_option("--name", rec_options.embedding_name, "Embedding model name");
    recommend->add_option("--model", rec_options.model_path, "Trained model JSON (nl, combined)");
    recommend->add_option("--metric", rec_options.metric, "cos | nl | combined");
    recommend->add_option("--query", rec_options.query, "Query text")->required();
    recommend->add_option("-k,--top", rec_options.k, "Number of recommendations");

    auto* combine = app.add_subcommand("combine", "Average stored distance matrices");
    std::vector<std::string> combine_inputs;
    combine->add_option("matrices", combine_inputs, "Input .dmat files")->expected(-1);

    auto* eval = app.add_subcommand("eval", "Evaluate stored matrices against gold links");
    std::string eval_dataset;
    std::vector<std::string> eval_inputs;
    std::vector<std::string> eval_pairs;
    eval->add_option("--dataset", eval_dataset, "Dataset JSONL")->required();
    eval->add_option("matrices", eval_inputs, "Input .dmat files")->expected(-1);
    eval->add_option("--pair", eval_pairs,
                     "K statistic pairing 'challenger,baseline' (matrix file stems)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (app.got_subcommand(ingest)) {
            ingest_options.kind = tracelink::parse_task_kind(kind_name);
            ingest_options.out_path = out_dir;
            tracelink::cmd_ingest(ingest_options, std::cerr);
            return 0;
        }
        if (app.got_subcommand(pipeline)) {
            tracelink::RunConfig config;
            if (!config_path.empty()) {
                config = tracelink::load_run_config(config_path);
            }
            if (!dataset_override.empty()) {
                config.dataset_path = dataset_override;
            }
            if (seed_opt->count()) {
                config.train.seed = seed;
            }
            if (out_opt->count()) {
                config.out_dir = out_dir;
            }
            if (threads_opt->count()) {
                config.threads = threads;
            }
            tracelink::cmd_pipeline(config, std::cerr);
            return 0;
        }
        if (app.got_subcommand(recommend)) {
            tracelink::cmd_recommend(rec_options, std::cout, std::cerr);
            return 0;
        }
        if (app.got_subcommand(combine)) {
            if (out_dir.empty()) {
                throw tracelink::Error(tracelink::ErrorKind::InvalidConfig,
                                       "combine needs --out <file>");
            }
            tracelink::cmd_combine(combine_inputs, out_dir, std::cerr);
            return 0;
        }
        if (app.got_subcommand(eval)) {
            std::vector<tracelink::CurvePairing> pairings;
            pairings.reserve(eval_pairs.size());
            for (const std::string& spec : eval_pairs) {
                pairings.push_back(parse_pairing(spec));
            }
            if (out_dir.empty()) {
                throw tracelink::Error(tracelink::ErrorKind::InvalidConfig,
                                       "eval needs --out <directory>");
            }
            tracelink::cmd_eval(eval_dataset, eval_inputs, pairings, out_dir, std::cerr);
            return 0;
        }
    } catch (const tracelink::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
