#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "tracelink/corpus.hpp"
#include "tracelink/evaluation.hpp"
#include "tracelink/neural.hpp"

namespace tracelink {

/// Everything one run needs. The config file is a single JSON document;
/// command-line flags override individual fields after parsing.
struct RunConfig {
    std::string dataset_path;
    std::map<std::string, std::string> embeddings;      // model name -> word2vec text path
    std::map<std::string, std::string> transfer_models; // model name -> model JSON to load
    TrainConfig train;
    std::string out_dir = "out";
    unsigned threads = 0; // 0 = available parallelism
};

RunConfig load_run_config(const std::string& path);

/// Checks paths exist and train settings are sane. Throws InvalidConfig.
void validate_run_config(const RunConfig& config);

struct IngestOptions {
    TaskKind kind = TaskKind::Traceability;
    std::string commits_path; // traceability only
    std::string tickets_path;
    std::string links_path; // duplicates only
    std::string out_path;
    std::string ticket_pattern = kDefaultTicketIdPattern;
};

/// Builds the requested task dataset, writes it as JSONL and reports
/// retained/dropped counts on `diag`.
DatasetBuild cmd_ingest(const IngestOptions& options, std::ostream& diag);

struct PipelineOutcome {
    Report report;
    std::vector<std::string> files; // written files, relative to out_dir
};

/// Per embedding model: vectorize, cosine matrix, train (or load, for
/// transfer runs) the non-linear model, nl matrix, cosine+nl combination.
/// With two or more models the 2M per-metric averages are added. Everything
/// lands under out_dir: vectors/, matrices/, models/, curves/, report.txt.
PipelineOutcome cmd_pipeline(const RunConfig& config, std::ostream& diag);

struct RecommendOptions {
    std::string dataset_path;
    std::string embedding_path;
    std::string embedding_name; // defaults to the file stem
    std::string model_path;     // required for nl and combined
    std::string metric = "cos"; // cos | nl | combined
    std::string query;
    std::size_t k = 10;
};

struct Recommendation {
    std::string target_id;
    float distance = 0.0f;
};

/// Tokenizes and embeds the query, scores it against every target of the
/// dataset and returns the k nearest. Rows are also printed to `out` as
/// "<id>\t<distance>". All-OOV queries are allowed but warned about.
std::vector<Recommendation> cmd_recommend(const RecommendOptions& options, std::ostream& out,
                                          std::ostream& diag);

/// Loads the given matrices (tags from file stems), averages them and writes
/// the result. Returns the combined tag.
std::string cmd_combine(const std::vector<std::string>& matrix_paths, const std::string& out_path,
                        std::ostream& diag);

/// Evaluates stored matrices against the dataset's links and writes
/// report.txt plus per-curve CSVs under out_dir. Pairings name matrix file
/// stems.
Report cmd_eval(const std::string& dataset_path, const std::vector<std::string>& matrix_paths,
                const std::vector<CurvePairing>& pairings, const std::string& out_dir,
                std::ostream& diag);

} // namespace tracelink
