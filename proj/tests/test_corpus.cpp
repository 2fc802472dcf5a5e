#include <doctest.h>

#include <set>
#include <string>
#include <vector>

#include "support.hpp"
#include "tracelink/corpus.hpp"
#include "tracelink/error.hpp"

using namespace tracelink;
using testsupport::TempDir;
using testsupport::write_file;

namespace {

std::string join(const std::vector<std::string>& tokens) {
    std::string out;
    for (const auto& t : tokens) {
        if (!out.empty()) {
            out += ' ';
        }
        out += t;
    }
    return out;
}

TicketRecord ticket(const std::string& id, const std::string& summary,
                    const std::string& description) {
    return {id, summary, description};
}

} // namespace

TEST_CASE("tokenize applies the four rules") {
    CHECK(tokenize("Fix NullPointerException!") ==
          std::vector<std::string>{"fix", "null", "pointer", "exception"});
    CHECK(tokenize("").empty());
    CHECK(tokenize("HADOOP-1234 v2") == std::vector<std::string>{"hadoop"});
}

TEST_CASE("tokenize splits acronym and digit boundaries") {
    CHECK(tokenize("HTTPServer") == std::vector<std::string>{"http", "server"});
    CHECK(tokenize("utf8Parser") == std::vector<std::string>{"utf", "parser"});
    CHECK(tokenize("camelCase snake_case") ==
          std::vector<std::string>{"camel", "case", "snake", "case"});
    CHECK(tokenize("42 7 a I") == std::vector<std::string>{});
}

TEST_CASE("tokenize is idempotent on its joined output") {
    for (const char* text : {"Fix NullPointerException!", "HADOOP-1234 v2",
                             "the flushQueue reuses the open DataStore handle",
                             "REST API v3 returns 404 on /users?id=7"}) {
        const auto once = tokenize(text);
        CHECK(tokenize(join(once)) == once);
    }
}

TEST_CASE("extract_ticket_id finds the first match") {
    CHECK(extract_ticket_id("HADOOP-1234: fix NPE") == "HADOOP-1234");
    CHECK_FALSE(extract_ticket_id("merge branch").has_value());
    CHECK(extract_ticket_id("see CORE-12 and CORE-13") == "CORE-12");
}

TEST_CASE("build_traceability keeps linked pairs only") {
    const std::vector<CommitRecord> commits{{"c1", "CORE-1 fix"}};
    const std::vector<TicketRecord> tickets{ticket("CORE-1", "npe", "crash on startup")};
    const auto build = build_traceability(commits, tickets);
    CHECK(build.dataset.kind == TaskKind::Traceability);
    REQUIRE(build.dataset.sources.size() == 1);
    REQUIRE(build.dataset.targets.size() == 1);
    CHECK(build.dataset.links == std::set<std::pair<std::string, std::string>>{{"c1", "CORE-1"}});
    CHECK(build.dataset.targets[0].raw_text == "npe crash on startup");
    // the matched ticket id is stripped from the source text
    CHECK(build.dataset.sources[0].raw_text.find("CORE-1") == std::string::npos);
    validate_dataset(build.dataset);
}

TEST_CASE("commits without a ticket id are dropped and counted") {
    const std::vector<CommitRecord> commits{{"c1", "CORE-1 fix"}, {"c2", "merge branch"}};
    const std::vector<TicketRecord> tickets{ticket("CORE-1", "npe", "crash")};
    const auto build = build_traceability(commits, tickets);
    CHECK(build.dataset.sources.size() == 1);
    CHECK(build.stats.sources_dropped == 1);
}

TEST_CASE("tickets without a description drop their commits too") {
    const std::vector<CommitRecord> commits{{"c1", "CORE-1 fix"}, {"c2", "CORE-2 tweak"}};
    const std::vector<TicketRecord> tickets{ticket("CORE-1", "npe", "crash"),
                                            ticket("CORE-2", "empty one", "")};
    const auto build = build_traceability(commits, tickets);
    CHECK(build.dataset.sources.size() == 1);
    CHECK(build.dataset.targets.size() == 1);
    CHECK(build.stats.targets_dropped == 1);
    CHECK(build.stats.sources_dropped == 1);
}

TEST_CASE("traceability with nothing left is EmptyDataset") {
    const std::vector<CommitRecord> commits{{"c1", "no id here"}};
    const std::vector<TicketRecord> tickets{ticket("CORE-1", "npe", "crash")};
    try {
        build_traceability(commits, tickets);
        FAIL("expected EmptyDataset");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::EmptyDataset);
    }
}

TEST_CASE("cleaning is monotone under malformed additions") {
    const std::vector<CommitRecord> commits{{"c1", "CORE-1 fix"}};
    const std::vector<TicketRecord> tickets{ticket("CORE-1", "npe", "crash")};
    const auto before = build_traceability(commits, tickets);

    auto more_commits = commits;
    more_commits.push_back({"c9", "no ticket reference"});
    auto more_tickets = tickets;
    more_tickets.push_back(ticket("CORE-9", "descriptionless", ""));
    const auto after = build_traceability(more_commits, more_tickets);

    CHECK(before.dataset.links == after.dataset.links);
    REQUIRE(before.dataset.sources.size() == after.dataset.sources.size());
    CHECK(before.dataset.sources[0].id == after.dataset.sources[0].id);
    CHECK(before.dataset.targets[0].id == after.dataset.targets[0].id);
}

TEST_CASE("duplicates exclude the source from its own candidates") {
    const std::vector<TicketRecord> tickets{ticket("T1", "s1", "d1"), ticket("T2", "s2", "d2"),
                                            ticket("T3", "s3", "d3")};
    const auto build = build_duplicates(tickets, {{"T1", "T2"}});
    REQUIRE(build.dataset.sources.size() == 1);
    CHECK(build.dataset.sources[0].id == "T1");
    std::set<std::string> target_ids;
    for (const auto& t : build.dataset.targets) {
        target_ids.insert(t.id);
    }
    CHECK(target_ids == std::set<std::string>{"T2", "T3"});
    CHECK(build.dataset.links == std::set<std::pair<std::string, std::string>>{{"T1", "T2"}});
    validate_dataset(build.dataset);
}

TEST_CASE("a self duplicate names its row") {
    const std::vector<TicketRecord> tickets{ticket("T1", "s1", "d1")};
    try {
        build_duplicates(tickets, {{"T1", "T1"}});
        FAIL("expected SelfLink");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::SelfLink);
        CHECK(std::string(e.what()).find("1") != std::string::npos);
    }
}

TEST_CASE("duplicates with no links is EmptyDataset") {
    const std::vector<TicketRecord> tickets{ticket("T1", "s1", "d1")};
    try {
        build_duplicates(tickets, {});
        FAIL("expected EmptyDataset");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::EmptyDataset);
    }
}

TEST_CASE("duplicate pairs naming unretained tickets are dropped") {
    const std::vector<TicketRecord> tickets{ticket("T1", "s1", "d1"), ticket("T2", "s2", "d2"),
                                            ticket("T3", "s3", "")};
    const auto build = build_duplicates(tickets, {{"T1", "T2"}, {"T1", "T3"}, {"T3", "T2"}});
    CHECK(build.dataset.links == std::set<std::pair<std::string, std::string>>{{"T1", "T2"}});
    CHECK(build.stats.links_dropped == 2);
}

TEST_CASE("summary_to_description pairs each complete ticket with itself") {
    const std::vector<TicketRecord> tickets{ticket("T1", "s1", "d1"), ticket("T2", "s2", "d2")};
    const auto build = build_summary_description(tickets);
    CHECK(build.dataset.kind == TaskKind::SummaryToDescription);
    CHECK(build.dataset.sources.size() == 2);
    CHECK(build.dataset.targets.size() == 2);
    CHECK(build.dataset.links ==
          std::set<std::pair<std::string, std::string>>{{"T1", "T1"}, {"T2", "T2"}});
    CHECK(build.dataset.sources[0].raw_text == "s1");
    CHECK(build.dataset.targets[0].raw_text == "d1");
    validate_dataset(build.dataset);
}

TEST_CASE("summary_to_description drops incomplete tickets") {
    const std::vector<TicketRecord> tickets{ticket("T1", "s1", "d1"), ticket("T2", "s2", ""),
                                            ticket("T3", "", "d3")};
    const auto build = build_summary_description(tickets);
    CHECK(build.dataset.sources.size() == 1);
    CHECK(build.stats.sources_dropped == 2);
}

TEST_CASE("jsonl loaders read the fixtures") {
    const auto commits = load_commits_jsonl(testsupport::fixture("commits.jsonl"));
    const auto tickets = load_tickets_jsonl(testsupport::fixture("tickets.jsonl"));
    CHECK(commits.size() == 20);
    CHECK(tickets.size() == 15);
    CHECK(commits[0].id == "c01");
    CHECK(tickets[0].id == "PROJ-1");

    const auto build = build_traceability(commits, tickets);
    CHECK(build.dataset.sources.size() == 15);
    CHECK(build.dataset.targets.size() == 12);
    CHECK(build.dataset.links.size() == 15);
    CHECK(build.stats.sources_dropped == 5);
    CHECK(build.stats.targets_dropped == 3);
    validate_dataset(build.dataset);
}

TEST_CASE("malformed jsonl reports the line number") {
    TempDir dir;
    const auto path = dir.file("commits.jsonl");
    write_file(path, "{\"id\":\"c1\",\"message\":\"ok\"}\nnot json\n");
    try {
        load_commits_jsonl(path);
        FAIL("expected MalformedRecord");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::MalformedRecord);
        CHECK(std::string(e.what()).find(":2:") != std::string::npos);
    }
}

TEST_CASE("links csv skips the header and rejects junk rows") {
    TempDir dir;
    const auto path = dir.file("links.csv");
    write_file(path, "source_id,target_id\nT1,T2\nT3,T4\n");
    const auto links = load_links_csv(path);
    REQUIRE(links.size() == 2);
    CHECK(links[0] == std::pair<std::string, std::string>{"T1", "T2"});

    write_file(path, "T1\n");
    CHECK_THROWS_AS(load_links_csv(path), Error);
}

TEST_CASE("dataset jsonl round-trips") {
    TempDir dir;
    const auto commits = load_commits_jsonl(testsupport::fixture("commits.jsonl"));
    const auto tickets = load_tickets_jsonl(testsupport::fixture("tickets.jsonl"));
    const auto build = build_traceability(commits, tickets);

    const auto path = dir.file("dataset.jsonl");
    save_dataset_jsonl(build.dataset, path);
    const auto loaded = load_dataset_jsonl(path);

    CHECK(loaded.kind == build.dataset.kind);
    CHECK(loaded.links == build.dataset.links);
    REQUIRE(loaded.sources.size() == build.dataset.sources.size());
    REQUIRE(loaded.targets.size() == build.dataset.targets.size());
    for (std::size_t i = 0; i < loaded.sources.size(); ++i) {
        CHECK(loaded.sources[i].id == build.dataset.sources[i].id);
        CHECK(loaded.sources[i].raw_text == build.dataset.sources[i].raw_text);
        CHECK(loaded.sources[i].tokens == build.dataset.sources[i].tokens);
    }
    validate_dataset(loaded);
}

TEST_CASE("dataset header counts are validated") {
    TempDir dir;
    const auto path = dir.file("dataset.jsonl");
    write_file(path,
               "{\"kind\":\"traceability\",\"source_count\":2,\"target_count\":1,"
               "\"link_count\":1}\n"
               "{\"record\":\"artifact\",\"role\":\"source\",\"id\":\"c1\",\"text\":\"fix\"}\n"
               "{\"record\":\"artifact\",\"role\":\"target\",\"id\":\"T1\",\"text\":\"npe\"}\n"
               "{\"record\":\"link\",\"source\":\"c1\",\"target\":\"T1\"}\n");
    try {
        load_dataset_jsonl(path);
        FAIL("expected CountMismatch");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::CountMismatch);
    }
}

TEST_CASE("validate_dataset rejects broken structures") {
    TaskDataset dataset;
    dataset.kind = TaskKind::Traceability;
    dataset.sources.push_back({"c1", ArtifactRole::Source, "fix it", tokenize("fix it")});
    dataset.targets.push_back({"T1", ArtifactRole::Target, "crash", tokenize("crash")});
    dataset.links = {{"c1", "T1"}};
    validate_dataset(dataset);

    SUBCASE("dangling link") {
        dataset.links.insert({"c1", "T9"});
        CHECK_THROWS_AS(validate_dataset(dataset), Error);
    }
    SUBCASE("unlinked source") {
        dataset.sources.push_back({"c2", ArtifactRole::Source, "tweak", tokenize("tweak")});
        CHECK_THROWS_AS(validate_dataset(dataset), Error);
    }
    SUBCASE("duplicate id in one role") {
        dataset.sources.push_back({"c1", ArtifactRole::Source, "fix it", tokenize("fix it")});
        CHECK_THROWS_AS(validate_dataset(dataset), Error);
    }
    SUBCASE("tokens out of sync") {
        dataset.sources[0].tokens.push_back("ghost");
        CHECK_THROWS_AS(validate_dataset(dataset), Error);
    }
}

TEST_CASE("duplicate commit ids keep the first record") {
    const std::vector<CommitRecord> commits{{"c1", "CORE-1 fix"}, {"c1", "CORE-1 again"}};
    const std::vector<TicketRecord> tickets{ticket("CORE-1", "npe", "crash")};
    const auto build = build_traceability(commits, tickets);
    CHECK(build.dataset.sources.size() == 1);
    CHECK(build.dataset.sources[0].raw_text.find("fix") != std::string::npos);
}
