#pragma once

#include <iosfwd>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace tracelink {

enum class ArtifactRole { Source, Target };

struct Artifact {
    std::string id;
    ArtifactRole role = ArtifactRole::Source;
    std::string raw_text;
    std::vector<std::string> tokens; // always tokenize(raw_text)
};

enum class TaskKind { Traceability, Duplicates, SummaryToDescription };

const char* task_kind_name(TaskKind kind);
TaskKind parse_task_kind(const std::string& name);

/// One retrieval task: sources to rank against targets, with the gold links.
struct TaskDataset {
    TaskKind kind = TaskKind::Traceability;
    std::vector<Artifact> sources;
    std::vector<Artifact> targets;
    std::set<std::pair<std::string, std::string>> links; // (source_id, target_id)
};

/// Throws if a structural invariant is broken (dangling link, duplicate id,
/// unlinked source, tokens out of sync with raw_text).
void validate_dataset(const TaskDataset& dataset);

/// Deterministic tokenization: split camelCase/PascalCase and letter-digit
/// boundaries, split on non-alphanumerics, lowercase, then drop tokens
/// shorter than 2 characters and pure digit strings. ASCII-only; other bytes
/// act as separators.
std::vector<std::string> tokenize(const std::string& text);

inline constexpr const char* kDefaultTicketIdPattern = "[A-Z]+-[0-9]+";

/// First KEY-123 style match in the message, or absent.
std::optional<std::string> extract_ticket_id(const std::string& commit_message,
                                             const std::string& pattern = kDefaultTicketIdPattern);

struct CommitRecord {
    std::string id;
    std::string message;
};

struct TicketRecord {
    std::string id;
    std::string summary;
    std::string description;
};

struct CleanStats {
    std::size_t sources_dropped = 0;
    std::size_t targets_dropped = 0;
    std::size_t links_dropped = 0;
};

struct DatasetBuild {
    TaskDataset dataset;
    CleanStats stats;
};

/// Commit -> ticket task. Keeps commits with an extractable ticket id that
/// references a ticket with a non-empty description; the matched id is
/// stripped from the commit text. Target text is summary + " " + description.
DatasetBuild build_traceability(const std::vector<CommitRecord>& commits,
                                const std::vector<TicketRecord>& tickets,
                                const std::string& ticket_id_pattern = kDefaultTicketIdPattern);

/// Ticket -> duplicate ticket task. Each pair (a, b) contributes source a and
/// target b; every retained ticket that is not itself a source joins the
/// targets as a decoy, so a source never ranks against its own record.
DatasetBuild build_duplicates(const std::vector<TicketRecord>& tickets,
                              const std::vector<std::pair<std::string, std::string>>& duplicate_links);

/// Summary -> description of the same ticket; identity links.
DatasetBuild build_summary_description(const std::vector<TicketRecord>& tickets);

// --- external formats ---

/// JSON Lines {"id","message"} per line.
std::vector<CommitRecord> load_commits_jsonl(const std::string& path);

/// JSON Lines {"id","summary","description"} per line.
std::vector<TicketRecord> load_tickets_jsonl(const std::string& path);

/// CSV "source_id,target_id" rows; an optional literal header row is skipped.
std::vector<std::pair<std::string, std::string>> load_links_csv(const std::string& path);

/// Dataset as JSON Lines: one header record {"kind", counts}, then artifact
/// records and link records. Tokens are recomputed on load.
void save_dataset_jsonl(const TaskDataset& dataset, const std::string& path);
TaskDataset load_dataset_jsonl(const std::string& path);

} // namespace tracelink
