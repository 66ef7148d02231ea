#include "playforge/memory/store.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <tuple>

#include "playforge/error.hpp"

namespace playforge::memory {

namespace fs = std::filesystem;

namespace {

constexpr std::array<std::string_view, 3> kLayerNames = {"episode-shared", "skill", "world"};
constexpr std::array<std::string_view, 3> kOwnerNames = {"game-agent", "gui-player", "shared"};
constexpr std::array<std::string_view, 6> kKindNames = {
    "pitfall", "fix_pattern", "decision", "interaction_pattern", "false_positive", "observation"};
constexpr std::array<std::string_view, 4> kAblationNames = {"none", "episode_only",
                                                            "episode_skill", "full"};

template <typename Enum, std::size_t N>
std::optional<Enum> lookup(const std::array<std::string_view, N>& names, std::string_view text) {
    for (std::size_t i = 0; i < N; ++i) {
        if (names[i] == text) return static_cast<Enum>(i);
    }
    return std::nullopt;
}

}  // namespace

std::string_view to_string(Layer v) { return kLayerNames[static_cast<std::size_t>(v)]; }
std::string_view to_string(Owner v) { return kOwnerNames[static_cast<std::size_t>(v)]; }
std::string_view to_string(Kind v) { return kKindNames[static_cast<std::size_t>(v)]; }
std::string_view to_string(Ablation v) { return kAblationNames[static_cast<std::size_t>(v)]; }
std::optional<Layer> parse_layer(std::string_view t) { return lookup<Layer>(kLayerNames, t); }
std::optional<Owner> parse_owner(std::string_view t) { return lookup<Owner>(kOwnerNames, t); }
std::optional<Kind> parse_kind(std::string_view t) { return lookup<Kind>(kKindNames, t); }
std::optional<Ablation> parse_ablation(std::string_view t) {
    return lookup<Ablation>(kAblationNames, t);
}

LayerSet ablation_view(Ablation config) {
    switch (config) {
    case Ablation::none: return {};
    case Ablation::episode_only: return {Layer::episode_shared};
    case Ablation::episode_skill: return {Layer::episode_shared, Layer::skill};
    case Ablation::full: return {Layer::episode_shared, Layer::skill, Layer::world};
    }
    return {};
}

void check_consistency(const MemoryEntry& e) {
    switch (e.layer) {
    case Layer::skill:
        if (e.owner == Owner::shared) {
            throw Error(Errc::consistency_violation, "skill entries must be owned by one agent");
        }
        break;
    case Layer::world:
        if (e.owner != Owner::shared) {
            throw Error(Errc::consistency_violation, "world entries must be owned by 'shared'");
        }
        break;
    case Layer::episode_shared:
        if (e.owner != Owner::shared) {
            throw Error(Errc::consistency_violation,
                        "episode-shared entries must be owned by 'shared'");
        }
        if (e.task_id.empty()) {
            throw Error(Errc::consistency_violation, "episode-shared entries need a task_id");
        }
        break;
    }
}

void to_json(json& j, const MemoryEntry& e) {
    j = json{{"id", e.id},
             {"layer", to_string(e.layer)},
             {"owner", to_string(e.owner)},
             {"kind", to_string(e.kind)},
             {"archetype", e.archetype},
             {"content", e.content},
             {"task_id", e.task_id},
             {"round", e.round},
             {"created_at", e.created_at}};
}

void from_json(const json& j, MemoryEntry& e) {
    auto need = [](auto opt, const std::string& what) {
        if (!opt) throw Error(Errc::consistency_violation, "unknown " + what);
        return *opt;
    };
    e.id = j.value("id", std::string{});
    e.layer = need(parse_layer(j.at("layer").get<std::string>()), "layer");
    e.owner = need(parse_owner(j.at("owner").get<std::string>()), "owner");
    e.kind = need(parse_kind(j.at("kind").get<std::string>()), "kind");
    e.archetype = j.value("archetype", std::string{});
    e.content = j.value("content", std::string{});
    e.task_id = j.value("task_id", std::string{});
    e.round = j.value("round", 0);
    e.created_at = j.value("created_at", std::uint64_t{0});
}

MemoryStore::MemoryStore(fs::path dir) : dir_(std::move(dir)) {
    fs::create_directories(dir_);
    std::ifstream in(dir_ / "log.jsonl");
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        MemoryEntry e;
        try {
            e = json::parse(line).get<MemoryEntry>();
        } catch (const json::exception& ex) {
            throw Error(Errc::consistency_violation, (dir_ / "log.jsonl").string() + ":" +
                                                         std::to_string(line_no) + ": " + ex.what());
        }
        clock_ = std::max(clock_, e.created_at);
        entries_.push_back(std::move(e));
    }
}

void MemoryStore::append_line(const fs::path& file, const std::string& line) {
    std::ofstream out(file, std::ios::app | std::ios::binary);
    if (!out) throw Error(Errc::missing_file, "cannot append to " + file.string());
    out << line << '\n';
    out.flush();
}

std::string MemoryStore::save(MemoryEntry entry) {
    check_consistency(entry);
    std::unique_lock lock(mutex_);
    entry.created_at = ++clock_;
    if (entry.id.empty()) entry.id = "m" + std::to_string(entry.created_at);
    append_line(dir_ / "log.jsonl", json(entry).dump());
    entries_.push_back(entry);
    return entry.id;
}

std::vector<MemoryEntry> MemoryStore::visible(const MemoryQuery& query) {
    if (query.requester == Owner::shared) {
        throw Error(Errc::consistency_violation, "queries must be made by an agent, not 'shared'");
    }
    std::vector<MemoryEntry> out;
    {
        std::shared_lock lock(mutex_);
        for (const auto& e : entries_) {
            if (!query.layers.count(e.layer)) continue;
            if (query.archetype && !e.archetype.empty() && e.archetype != *query.archetype) continue;
            switch (e.layer) {
            case Layer::episode_shared:
                if (e.task_id != query.task_id) continue;
                break;
            case Layer::skill:
                if (e.owner != query.requester) continue;
                break;
            case Layer::world:
                break;
            }
            out.push_back(e);
        }
    }
    std::sort(out.begin(), out.end(),
              [](const MemoryEntry& a, const MemoryEntry& b) { return a.created_at > b.created_at; });

    json layers = json::array();
    for (auto l : query.layers) layers.push_back(to_string(l));
    json ids = json::array();
    for (const auto& e : out) ids.push_back(e.id);
    json record{{"requester", to_string(query.requester)},
                {"archetype", query.archetype ? json(*query.archetype) : json(nullptr)},
                {"task_id", query.task_id},
                {"layers", layers},
                {"returned", ids}};
    std::lock_guard access_lock(access_mutex_);
    append_line(dir_ / "access.jsonl", record.dump());
    ++reads_;
    return out;
}

std::size_t MemoryStore::size() const {
    std::shared_lock lock(mutex_);
    return entries_.size();
}

std::size_t MemoryStore::read_count() const {
    std::lock_guard access_lock(access_mutex_);
    return reads_;
}

std::vector<MemoryEntry> MemoryStore::all() const {
    std::shared_lock lock(mutex_);
    return entries_;
}

std::size_t MemoryStore::compact() {
    std::unique_lock lock(mutex_);
    std::vector<MemoryEntry> kept;
    std::set<std::tuple<Layer, Owner, Kind, std::string, std::string, std::string>> seen;
    for (const auto& e : entries_) {
        // Episode entries are task-scoped, so the task id is part of their identity.
        const auto task = e.layer == Layer::episode_shared ? e.task_id : std::string{};
        if (seen.emplace(e.layer, e.owner, e.kind, e.archetype, e.content, task).second) {
            kept.push_back(e);
        }
    }
    const auto removed = entries_.size() - kept.size();
    const auto tmp = dir_ / "log.jsonl.tmp";
    {
        std::ofstream out(tmp, std::ios::trunc | std::ios::binary);
        for (const auto& e : kept) out << json(e).dump() << '\n';
    }
    fs::rename(tmp, dir_ / "log.jsonl");
    entries_ = std::move(kept);
    return removed;
}

}  // namespace playforge::memory
