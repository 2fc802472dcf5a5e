#include "tracelink/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <regex>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include <json.hpp>

#include "tracelink/error.hpp"

namespace tracelink {

namespace {

using nlohmann::json;

bool is_lower(char c) { return c >= 'a' && c <= 'z'; }
bool is_upper(char c) { return c >= 'A' && c <= 'Z'; }
bool is_digit(char c) { return c >= '0' && c <= '9'; }
bool is_alpha(char c) { return is_lower(c) || is_upper(c); }
bool is_alnum(char c) { return is_alpha(c) || is_digit(c); }

bool all_digits(const std::string& token) {
    return std::all_of(token.begin(), token.end(), is_digit);
}

} // namespace

const char* task_kind_name(TaskKind kind) {
    switch (kind) {
    case TaskKind::Traceability: return "traceability";
    case TaskKind::Duplicates: return "duplicates";
    case TaskKind::SummaryToDescription: return "summary_to_description";
    }
    return "unknown";
}

TaskKind parse_task_kind(const std::string& name) {
    if (name == "traceability") return TaskKind::Traceability;
    if (name == "duplicates") return TaskKind::Duplicates;
    if (name == "summary_to_description") return TaskKind::SummaryToDescription;
    throw Error(ErrorKind::InvalidConfig, "unknown task kind '" + name + "'");
}

std::vector<std::string> tokenize(const std::string& text) {
    std::vector<std::string> tokens;
    std::string current;
    const auto flush = [&] {
        if (current.size() >= 2 && !all_digits(current)) {
            std::transform(current.begin(), current.end(), current.begin(),
                           [](char c) { return is_upper(c) ? static_cast<char>(c - 'A' + 'a') : c; });
            tokens.push_back(current);
        }
        current.clear();
    };
    const std::size_t n = text.size();
    for (std::size_t i = 0; i < n; ++i) {
        const char c = text[i];
        if (!is_alnum(c)) {
            flush();
            continue;
        }
        if (!current.empty()) {
            const char prev = current.back();
            const char next = i + 1 < n ? text[i + 1] : '\0';
            const bool camel = is_lower(prev) && is_upper(c);
            const bool acronym_end = is_upper(prev) && is_upper(c) && is_lower(next);
            const bool letter_digit = (is_alpha(prev) && is_digit(c)) || (is_digit(prev) && is_alpha(c));
            if (camel || acronym_end || letter_digit) {
                flush();
            }
        }
        current += c;
    }
    flush();
    return tokens;
}

std::optional<std::string> extract_ticket_id(const std::string& commit_message,
                                             const std::string& pattern) {
    const std::regex re(pattern);
    std::smatch match;
    if (std::regex_search(commit_message, match, re)) {
        return match.str(0);
    }
    return std::nullopt;
}

void validate_dataset(const TaskDataset& dataset) {
    const auto check_role = [](const std::vector<Artifact>& artifacts, ArtifactRole role,
                               const char* label) {
        std::unordered_set<std::string> seen;
        for (const auto& a : artifacts) {
            if (a.role != role) {
                throw Error(ErrorKind::MalformedRecord,
                            std::string(label) + " artifact '" + a.id + "' has wrong role");
            }
            if (!seen.insert(a.id).second) {
                throw Error(ErrorKind::MalformedRecord,
                            std::string("duplicate ") + label + " id '" + a.id + "'");
            }
            if (a.tokens != tokenize(a.raw_text)) {
                throw Error(ErrorKind::MalformedRecord,
                            std::string(label) + " '" + a.id + "' tokens out of sync with raw_text");
            }
        }
    };
    check_role(dataset.sources, ArtifactRole::Source, "source");
    check_role(dataset.targets, ArtifactRole::Target, "target");

    std::unordered_set<std::string> source_ids;
    std::unordered_set<std::string> target_ids;
    for (const auto& a : dataset.sources) source_ids.insert(a.id);
    for (const auto& a : dataset.targets) target_ids.insert(a.id);

    std::unordered_set<std::string> linked_sources;
    for (const auto& [src, tgt] : dataset.links) {
        if (!source_ids.count(src)) {
            throw Error(ErrorKind::MissingId, "link references unknown source '" + src + "'");
        }
        if (!target_ids.count(tgt)) {
            throw Error(ErrorKind::MissingId, "link references unknown target '" + tgt + "'");
        }
        linked_sources.insert(src);
    }
    for (const auto& a : dataset.sources) {
        if (!linked_sources.count(a.id)) {
            throw Error(ErrorKind::MalformedRecord, "source '" + a.id + "' has no link");
        }
    }
}

namespace {

Artifact make_artifact(std::string id, ArtifactRole role, std::string text) {
    Artifact artifact;
    artifact.id = std::move(id);
    artifact.role = role;
    artifact.raw_text = std::move(text);
    artifact.tokens = tokenize(artifact.raw_text);
    return artifact;
}

std::string ticket_text(const TicketRecord& ticket) {
    return ticket.summary + " " + ticket.description;
}

// Removes every occurrence of `id` from `text`.
std::string strip_id(std::string text, const std::string& id) {
    std::size_t pos = 0;
    while ((pos = text.find(id, pos)) != std::string::npos) {
        text.erase(pos, id.size());
    }
    return text;
}

} // namespace

DatasetBuild build_traceability(const std::vector<CommitRecord>& commits,
                                const std::vector<TicketRecord>& tickets,
                                const std::string& ticket_id_pattern) {
    DatasetBuild build;
    build.dataset.kind = TaskKind::Traceability;

    std::unordered_map<std::string, const TicketRecord*> retained;
    for (const auto& ticket : tickets) {
        if (ticket.description.empty()) {
            ++build.stats.targets_dropped;
            continue;
        }
        retained.emplace(ticket.id, &ticket);
    }

    std::unordered_set<std::string> seen_commits;
    for (const auto& commit : commits) {
        const auto ticket_id = extract_ticket_id(commit.message, ticket_id_pattern);
        if (!ticket_id || !retained.count(*ticket_id)) {
            ++build.stats.sources_dropped;
            continue;
        }
        if (!seen_commits.insert(commit.id).second) {
            ++build.stats.sources_dropped;
            continue;
        }
        build.dataset.sources.push_back(make_artifact(
            commit.id, ArtifactRole::Source, strip_id(commit.message, *ticket_id)));
        build.dataset.links.emplace(commit.id, *ticket_id);
    }

    for (const auto& ticket : tickets) {
        if (retained.count(ticket.id)) {
            build.dataset.targets.push_back(
                make_artifact(ticket.id, ArtifactRole::Target, ticket_text(ticket)));
        }
    }

    if (build.dataset.links.empty()) {
        throw Error(ErrorKind::EmptyDataset, "no commit-ticket links survive cleaning");
    }
    return build;
}

DatasetBuild build_duplicates(const std::vector<TicketRecord>& tickets,
                              const std::vector<std::pair<std::string, std::string>>& duplicate_links) {
    DatasetBuild build;
    build.dataset.kind = TaskKind::Duplicates;

    std::unordered_map<std::string, const TicketRecord*> retained;
    for (const auto& ticket : tickets) {
        if (ticket.description.empty()) {
            ++build.stats.targets_dropped;
            continue;
        }
        retained.emplace(ticket.id, &ticket);
    }

    std::size_t row = 0;
    std::unordered_set<std::string> source_ids;
    std::unordered_set<std::string> linked_targets;
    std::vector<std::string> source_order;
    for (const auto& [a, b] : duplicate_links) {
        ++row;
        if (a == b) {
            throw Error(ErrorKind::SelfLink,
                        "row " + std::to_string(row) + ": ticket '" + a + "' duplicates itself");
        }
        if (!retained.count(a) || !retained.count(b)) {
            ++build.stats.links_dropped;
            continue;
        }
        if (source_ids.insert(a).second) {
            source_order.push_back(a);
        }
        linked_targets.insert(b);
        build.dataset.links.emplace(a, b);
    }

    if (build.dataset.links.empty()) {
        throw Error(ErrorKind::EmptyDataset, "no duplicate links survive cleaning");
    }

    for (const auto& id : source_order) {
        build.dataset.sources.push_back(
            make_artifact(id, ArtifactRole::Source, ticket_text(*retained.at(id))));
    }
    // Linked targets plus decoys; a source is only kept as a target when some
    // other ticket duplicates it.
    for (const auto& ticket : tickets) {
        if (!retained.count(ticket.id)) {
            continue;
        }
        if (linked_targets.count(ticket.id) || !source_ids.count(ticket.id)) {
            build.dataset.targets.push_back(
                make_artifact(ticket.id, ArtifactRole::Target, ticket_text(ticket)));
        }
    }
    return build;
}

DatasetBuild build_summary_description(const std::vector<TicketRecord>& tickets) {
    DatasetBuild build;
    build.dataset.kind = TaskKind::SummaryToDescription;
    for (const auto& ticket : tickets) {
        if (ticket.summary.empty() || ticket.description.empty()) {
            ++build.stats.sources_dropped;
            ++build.stats.targets_dropped;
            continue;
        }
        build.dataset.sources.push_back(
            make_artifact(ticket.id, ArtifactRole::Source, ticket.summary));
        build.dataset.targets.push_back(
            make_artifact(ticket.id, ArtifactRole::Target, ticket.description));
        build.dataset.links.emplace(ticket.id, ticket.id);
    }
    if (build.dataset.links.empty()) {
        throw Error(ErrorKind::EmptyDataset, "no complete tickets");
    }
    return build;
}

namespace {

json parse_json_line(const std::string& path, std::size_t line_no, const std::string& line) {
    json record = json::parse(line, nullptr, false);
    if (record.is_discarded() || !record.is_object()) {
        throw Error(ErrorKind::MalformedRecord,
                    path + ":" + std::to_string(line_no) + ": not a JSON object");
    }
    return record;
}

std::string require_string(const json& record, const char* key, const std::string& where) {
    const auto it = record.find(key);
    if (it == record.end() || !it->is_string()) {
        throw Error(ErrorKind::MalformedRecord, where + ": missing string field '" + key + "'");
    }
    return it->get<std::string>();
}

template <typename Fn>
void for_each_line(const std::string& path, Fn&& fn) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(ErrorKind::IoError, "cannot open '" + path + "'");
    }
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.empty()) {
            continue;
        }
        fn(line_no, line);
    }
}

} // namespace

std::vector<CommitRecord> load_commits_jsonl(const std::string& path) {
    std::vector<CommitRecord> commits;
    for_each_line(path, [&](std::size_t line_no, const std::string& line) {
        const json record = parse_json_line(path, line_no, line);
        const std::string where = path + ":" + std::to_string(line_no);
        commits.push_back({require_string(record, "id", where),
                           require_string(record, "message", where)});
    });
    return commits;
}

std::vector<TicketRecord> load_tickets_jsonl(const std::string& path) {
    std::vector<TicketRecord> tickets;
    for_each_line(path, [&](std::size_t line_no, const std::string& line) {
        const json record = parse_json_line(path, line_no, line);
        const std::string where = path + ":" + std::to_string(line_no);
        TicketRecord ticket;
        ticket.id = require_string(record, "id", where);
        if (const auto it = record.find("summary"); it != record.end() && it->is_string()) {
            ticket.summary = it->get<std::string>();
        }
        if (const auto it = record.find("description"); it != record.end() && it->is_string()) {
            ticket.description = it->get<std::string>();
        }
        tickets.push_back(std::move(ticket));
    });
    return tickets;
}

std::vector<std::pair<std::string, std::string>> load_links_csv(const std::string& path) {
    std::vector<std::pair<std::string, std::string>> links;
    for_each_line(path, [&](std::size_t line_no, const std::string& line) {
        if (line_no == 1 && line == "source_id,target_id") {
            return;
        }
        const std::size_t comma = line.find(',');
        if (comma == std::string::npos || comma == 0 || comma + 1 >= line.size() ||
            line.find(',', comma + 1) != std::string::npos) {
            throw Error(ErrorKind::MalformedRecord,
                        path + ":" + std::to_string(line_no) +
                            ": expected 'source_id,target_id', got '" + line + "'");
        }
        links.emplace_back(line.substr(0, comma), line.substr(comma + 1));
    });
    return links;
}

void save_dataset_jsonl(const TaskDataset& dataset, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw Error(ErrorKind::IoError, "cannot write '" + path + "'");
    }
    json header;
    header["kind"] = task_kind_name(dataset.kind);
    header["source_count"] = dataset.sources.size();
    header["target_count"] = dataset.targets.size();
    header["link_count"] = dataset.links.size();
    out << header.dump() << '\n';
    const auto dump_artifact = [&](const Artifact& a, const char* role) {
        json record;
        record["record"] = "artifact";
        record["role"] = role;
        record["id"] = a.id;
        record["text"] = a.raw_text;
        out << record.dump() << '\n';
    };
    for (const auto& a : dataset.sources) dump_artifact(a, "source");
    for (const auto& a : dataset.targets) dump_artifact(a, "target");
    for (const auto& [src, tgt] : dataset.links) {
        json record;
        record["record"] = "link";
        record["source"] = src;
        record["target"] = tgt;
        out << record.dump() << '\n';
    }
    if (!out) {
        throw Error(ErrorKind::IoError, "failed writing '" + path + "'");
    }
}

TaskDataset load_dataset_jsonl(const std::string& path) {
    TaskDataset dataset;
    bool have_header = false;
    std::size_t source_count = 0;
    std::size_t target_count = 0;
    std::size_t link_count = 0;
    for_each_line(path, [&](std::size_t line_no, const std::string& line) {
        const json record = parse_json_line(path, line_no, line);
        const std::string where = path + ":" + std::to_string(line_no);
        if (!have_header) {
            dataset.kind = parse_task_kind(require_string(record, "kind", where));
            source_count = record.value("source_count", 0u);
            target_count = record.value("target_count", 0u);
            link_count = record.value("link_count", 0u);
            have_header = true;
            return;
        }
        const std::string type = require_string(record, "record", where);
        if (type == "artifact") {
            const std::string role = require_string(record, "role", where);
            Artifact artifact = make_artifact(require_string(record, "id", where),
                                              role == "source" ? ArtifactRole::Source
                                                               : ArtifactRole::Target,
                                              require_string(record, "text", where));
            if (role == "source") {
                dataset.sources.push_back(std::move(artifact));
            } else if (role == "target") {
                dataset.targets.push_back(std::move(artifact));
            } else {
                throw Error(ErrorKind::MalformedRecord, where + ": unknown role '" + role + "'");
            }
        } else if (type == "link") {
            dataset.links.emplace(require_string(record, "source", where),
                                  require_string(record, "target", where));
        } else {
            throw Error(ErrorKind::MalformedRecord, where + ": unknown record '" + type + "'");
        }
    });
    if (!have_header) {
        throw Error(ErrorKind::MalformedHeader, path + ": missing dataset header record");
    }
    if (dataset.sources.size() != source_count || dataset.targets.size() != target_count ||
        dataset.links.size() != link_count) {
        throw Error(ErrorKind::CountMismatch, path + ": header counts do not match records");
    }
    return dataset;
}

} // namespace tracelink
