#include "convocode/store.hpp"

#include <algorithm>
#include <fstream>

#include <json.hpp>

#include "convocode/errors.hpp"

namespace convocode {

using nlohmann::json;

namespace {

json load_json_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open " + path.string());
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw ParseError(path.string() + ": parse error at byte " + std::to_string(e.byte) + ": " +
                         e.what());
    }
}

void write_json_file(const json& j, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    out << j.dump(2) << '\n';
}

}  // namespace

void store_transcript(const Transcript& t, const std::filesystem::path& path) {
    json arr = json::array();
    for (const auto& u : t.utterances) {
        arr.push_back({{"id", u.id},
                       {"speaker", u.speaker_label},
                       {"start_ms", u.start_ms},
                       {"end_ms", u.end_ms},
                       {"content", u.content}});
    }
    json j;
    if (t.source_recording_ids.empty()) {
        j = arr;
    } else {
        j = {{"utterances", arr}, {"source_recording_ids", t.source_recording_ids}};
    }
    write_json_file(j, path);
}

Transcript load_transcript(const std::filesystem::path& path) {
    const json j = load_json_file(path);
    Transcript t;
    const json* arr = &j;
    if (j.is_object()) {
        arr = &j.at("utterances");
        if (j.contains("source_recording_ids"))
            t.source_recording_ids = j["source_recording_ids"].get<std::vector<std::string>>();
    }
    for (const auto& rec : *arr) {
        Utterance u;
        u.id = rec.at("id").get<int>();
        u.speaker_label = rec.at("speaker").get<std::string>();
        u.start_ms = rec.at("start_ms").get<std::int64_t>();
        u.end_ms = rec.at("end_ms").get<std::int64_t>();
        u.content = rec.at("content").get<std::string>();
        t.utterances.push_back(std::move(u));
    }
    return t;
}

void store_segments(const std::vector<TimedSegment>& segments,
                    const std::filesystem::path& path) {
    json arr = json::array();
    for (const auto& s : segments) {
        arr.push_back({{"start_ms", s.start_ms},
                       {"end_ms", s.end_ms},
                       {"speaker", s.speaker_label},
                       {"text", s.text}});
    }
    write_json_file(arr, path);
}

std::vector<TimedSegment> load_segments(const std::filesystem::path& path) {
    const json arr = load_json_file(path);
    std::vector<TimedSegment> out;
    for (const auto& rec : arr) {
        TimedSegment s;
        s.start_ms = rec.at("start_ms").get<std::int64_t>();
        s.end_ms = rec.at("end_ms").get<std::int64_t>();
        s.speaker_label = rec.at("speaker").get<std::string>();
        s.text = rec.at("text").get<std::string>();
        out.push_back(std::move(s));
    }
    return out;
}

bool parse_session_dir_name(const std::string& name, std::string& participant_id,
                            std::string& session_date) {
    const auto underscore = name.find('_');
    if (underscore == std::string::npos || underscore == 0 || underscore + 1 >= name.size())
        return false;
    participant_id = name.substr(0, underscore);
    session_date = name.substr(underscore + 1);
    return true;
}

SessionRecord load_session(const std::filesystem::path& dir) {
    if (!std::filesystem::is_directory(dir))
        throw ParseError("session directory not found: " + dir.string());

    SessionRecord record;
    if (!parse_session_dir_name(dir.filename().string(), record.participant_id,
                                record.session_date))
        throw ParseError("session directory name must be <participant>_<date>: " +
                         dir.filename().string());

    const SessionPaths paths{dir};
    record.transcript = load_transcript(paths.transcript());
    if (std::filesystem::exists(paths.survey())) record.survey = load_survey(paths.survey());
    if (std::filesystem::exists(paths.roles())) record.role_map = load_roles(paths.roles());
    return record;
}

void store_session(const SessionRecord& record, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    const SessionPaths paths{dir};
    store_transcript(record.transcript, paths.transcript());
    if (record.survey) store_survey(*record.survey, paths.survey());
    if (record.role_map) store_roles(*record.role_map, paths.roles());
}

std::vector<std::filesystem::path> list_session_dirs(const std::filesystem::path& corpus_root) {
    std::vector<std::filesystem::path> dirs;
    if (!std::filesystem::is_directory(corpus_root)) return dirs;
    for (const auto& entry : std::filesystem::directory_iterator(corpus_root)) {
        if (!entry.is_directory()) continue;
        std::string participant, date;
        if (!parse_session_dir_name(entry.path().filename().string(), participant, date)) continue;
        const SessionPaths paths{entry.path()};
        if (std::filesystem::exists(paths.transcript()) ||
            std::filesystem::exists(paths.segments()))
            dirs.push_back(entry.path());
    }
    std::sort(dirs.begin(), dirs.end());
    return dirs;
}

}  // namespace convocode
