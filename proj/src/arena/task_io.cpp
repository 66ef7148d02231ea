#include "playforge/arena/task_io.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>
#include <sstream>

#include "playforge/error.hpp"

namespace playforge::arena {

namespace fs = std::filesystem;

namespace {

bool is_blank(std::string_view s) {
    return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c) != 0; });
}

std::string trim(std::string_view s) {
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

json read_json_file(const fs::path& path, Errc malformed) {
    const auto text = read_text_file(path);
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw Error(malformed, path.string() + ": " + e.what());
    }
}

// Markdown sections (lines starting with '#') must each carry some content.
void check_prompt_sections(const std::string& prompt) {
    std::istringstream in(prompt);
    std::string line;
    std::string open_heading;
    bool has_content = true;
    while (std::getline(in, line)) {
        if (!line.empty() && line.front() == '#') {
            if (!has_content) {
                throw Error(Errc::empty_prompt, "prompt section '" + open_heading + "' is empty");
            }
            open_heading = trim(line);
            has_content = false;
        } else if (!is_blank(line)) {
            has_content = true;
        }
    }
    if (!has_content) {
        throw Error(Errc::empty_prompt, "prompt section '" + open_heading + "' is empty");
    }
}

}  // namespace

std::string read_text_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(Errc::missing_file, "cannot read " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_text_file(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(Errc::missing_file, "cannot write " + path.string());
    out << text;
}

void validate_rubric(const Rubric& rubric) {
    if (rubric.criteria.empty()) throw Error(Errc::malformed_rubric, "rubric has no criteria");
    std::set<std::string> seen;
    for (const auto& c : rubric.criteria) {
        if (c.id.empty()) throw Error(Errc::malformed_rubric, "criterion with empty id");
        if (!seen.insert(c.id).second) {
            throw Error(Errc::malformed_rubric, "duplicate criterion id '" + c.id + "'");
        }
        if (is_blank(c.text)) {
            throw Error(Errc::malformed_rubric, "criterion '" + c.id + "' has empty text");
        }
    }
}

Rubric parse_rubric(const json& array) {
    if (!array.is_array()) throw Error(Errc::malformed_rubric, "rubric must be a JSON array");
    Rubric rubric;
    for (const auto& item : array) rubric.criteria.push_back(item.get<Criterion>());
    validate_rubric(rubric);
    return rubric;
}

std::vector<std::string> rubric_warnings(const Rubric& rubric) {
    std::vector<std::string> out;
    const auto n = rubric.criteria.size();
    if (n < kRubricSizeAdvisoryMin || n > kRubricSizeAdvisoryMax) {
        out.push_back("rubric has " + std::to_string(n) + " criteria, outside the advisory range [" +
                      std::to_string(kRubricSizeAdvisoryMin) + ", " +
                      std::to_string(kRubricSizeAdvisoryMax) + "]");
    }
    return out;
}

GameTask parse_task(const fs::path& task_dir) {
    for (const char* name : {"task.json", "prompt.md", "rubric.json"}) {
        if (!fs::is_regular_file(task_dir / name)) {
            throw Error(Errc::missing_file, (task_dir / name).string() + " not found");
        }
    }
    GameTask task;
    const auto meta = read_json_file(task_dir / "task.json", Errc::malformed_task);
    if (!meta.is_object() || !meta.contains("id") || !meta.at("id").is_string() ||
        !meta.contains("genre") || !meta.at("genre").is_string()) {
        throw Error(Errc::malformed_task, "task.json needs string fields 'id' and 'genre'");
    }
    task.id = meta.at("id").get<std::string>();
    if (task.id.empty()) throw Error(Errc::malformed_task, "task id is empty");
    const auto genre_name = meta.at("genre").get<std::string>();
    const auto genre = parse_genre(genre_name);
    if (!genre) throw Error(Errc::malformed_task, "unknown genre '" + genre_name + "'");
    task.genre = *genre;

    task.prompt = trim(read_text_file(task_dir / "prompt.md"));
    if (task.prompt.empty()) throw Error(Errc::empty_prompt, "prompt.md is empty");
    check_prompt_sections(task.prompt);

    task.rubric = parse_rubric(read_json_file(task_dir / "rubric.json", Errc::malformed_rubric));
    return task;
}

void serialize_task(const GameTask& task, const fs::path& task_dir) {
    fs::create_directories(task_dir);
    json meta{{"id", task.id}, {"genre", std::string(to_string(task.genre))}};
    write_text_file(task_dir / "task.json", meta.dump(2) + "\n");
    write_text_file(task_dir / "prompt.md", task.prompt + "\n");
    json rubric = task.rubric.criteria;
    write_text_file(task_dir / "rubric.json", rubric.dump(2) + "\n");
}

std::vector<GameTask> load_task_pack(const fs::path& pack_dir) {
    if (!fs::is_directory(pack_dir)) {
        throw Error(Errc::missing_file, "tasks directory not found: " + pack_dir.string());
    }
    std::vector<fs::path> dirs;
    for (const auto& entry : fs::directory_iterator(pack_dir)) {
        if (entry.is_directory() && fs::exists(entry.path() / "task.json")) {
            dirs.push_back(entry.path());
        }
    }
    std::sort(dirs.begin(), dirs.end());
    std::vector<GameTask> tasks;
    tasks.reserve(dirs.size());
    for (const auto& d : dirs) tasks.push_back(parse_task(d));
    return tasks;
}

RubricScore rubric_score(const std::vector<Verdict>& verdicts, const Rubric& rubric) {
    std::set<std::string> seen;
    int passed = 0;
    for (const auto& v : verdicts) {
        if (rubric.find(v.criterion_id) == nullptr) {
            throw Error(Errc::dangling_verdict,
                        "verdict for unknown criterion '" + v.criterion_id + "'");
        }
        if (!seen.insert(v.criterion_id).second) {
            throw Error(Errc::duplicate_verdict,
                        "more than one verdict for criterion '" + v.criterion_id + "'");
        }
        if (v.passed) ++passed;
    }
    for (const auto& c : rubric.criteria) {
        if (!seen.count(c.id)) {
            throw Error(Errc::missing_verdict, "no verdict for criterion '" + c.id + "'");
        }
    }
    RubricScore score;
    score.passed = passed;
    score.total = static_cast<int>(rubric.criteria.size());
    if (score.total < 1) throw Error(Errc::malformed_rubric, "rubric has no criteria");
    score.value = static_cast<double>(passed) / static_cast<double>(score.total);
    return score;
}

CorpusStats corpus_stats(const std::vector<GameTask>& tasks) {
    if (tasks.empty()) throw Error(Errc::empty_corpus, "corpus is empty");
    CorpusStats stats;
    for (auto g : kAllGenres) stats.per_genre_counts[g] = 0;
    for (auto d : kAllDimensions) stats.per_dimension_counts[d] = 0;
    stats.count = tasks.size();
    for (const auto& t : tasks) {
        ++stats.per_genre_counts[t.genre];
        stats.total_criteria += t.rubric.criteria.size();
        for (const auto& c : t.rubric.criteria) ++stats.per_dimension_counts[c.dimension];
    }
    stats.mean_criteria =
        static_cast<double>(stats.total_criteria) / static_cast<double>(stats.count);
    return stats;
}

std::vector<BuildViolation> validate_build(const GameBuild& build) {
    std::vector<BuildViolation> out;
    if (build.entry.empty() || !fs::is_regular_file(build.entry_path())) {
        out.push_back({BuildViolationKind::entry_missing,
                       "entry document not found: " + build.entry_path().string()});
    }
    if (build.round < 1) {
        out.push_back({BuildViolationKind::bad_round,
                       "round must be >= 1, got " + std::to_string(build.round)});
    }
    return out;
}

}  // namespace playforge::arena
