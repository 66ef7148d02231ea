#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "playforge/arena/types.hpp"

namespace playforge::arena {

// Task directory layout:
//   task.json   {"id": "...", "genre": "..."}
//   prompt.md   free text
//   rubric.json [{"id": "...", "dimension": "...", "text": "..."}, ...]
GameTask parse_task(const std::filesystem::path& task_dir);

// Parses and validates a rubric array; throws Errc::malformed_rubric.
Rubric parse_rubric(const json& array);

void validate_rubric(const Rubric& rubric);

// Size-window warnings; never errors.
std::vector<std::string> rubric_warnings(const Rubric& rubric);

void serialize_task(const GameTask& task, const std::filesystem::path& task_dir);

// Loads every task directory below `pack_dir`, sorted by directory name.
std::vector<GameTask> load_task_pack(const std::filesystem::path& pack_dir);

RubricScore rubric_score(const std::vector<Verdict>& verdicts, const Rubric& rubric);

struct CorpusStats {
    std::size_t count = 0;
    std::size_t total_criteria = 0;
    double mean_criteria = 0.0;
    std::map<Genre, std::size_t> per_genre_counts;          // every genre present, zero-filled
    std::map<Dimension, std::size_t> per_dimension_counts;  // every dimension present, zero-filled
};

CorpusStats corpus_stats(const std::vector<GameTask>& tasks);

enum class BuildViolationKind { entry_missing, bad_round };

struct BuildViolation {
    BuildViolationKind kind;
    std::string detail;
};

std::vector<BuildViolation> validate_build(const GameBuild& build);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace playforge::arena
