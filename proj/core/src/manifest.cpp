// Copyright (c) 2026, The relcurate Authors
// SPDX-License-Identifier: Apache-2.0

#include "relcurate/manifest.hpp"

#include <fstream>

#include <nlohmann/json.hpp>

#include "relcurate/error.hpp"

namespace relcurate {

using ojson = nlohmann::ordered_json;

std::vector<ManifestEntry> read_manifest(const std::filesystem::path& workdir) {
    const auto path = workdir / kManifestFile;
    std::vector<ManifestEntry> out;
    if (!std::filesystem::exists(path)) return out;
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            const auto j = ojson::parse(line);
            ManifestEntry e;
            e.stage = j.at("stage").get<std::string>();
            e.status = j.at("status").get<std::string>();
            e.config_hash = j.at("config_hash").get<std::string>();
            e.inputs = j.at("inputs").get<std::map<std::string, std::string>>();
            e.outputs = j.at("outputs").get<std::map<std::string, std::string>>();
            e.duration_ms = j.at("duration_ms").get<std::int64_t>();
            out.push_back(std::move(e));
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(line_no, std::string("manifest: ") + e.what());
        }
    }
    return out;
}

void append_manifest(const std::filesystem::path& workdir, const ManifestEntry& entry) {
    ojson j;
    j["stage"] = entry.stage;
    j["status"] = entry.status;
    j["config_hash"] = entry.config_hash;
    j["inputs"] = entry.inputs;
    j["outputs"] = entry.outputs;
    j["duration_ms"] = entry.duration_ms;
    std::filesystem::create_directories(workdir);
    std::ofstream out(workdir / kManifestFile, std::ios::binary | std::ios::app);
    if (!out) throw IoError("cannot append to " + (workdir / kManifestFile).string());
    out << j.dump() << '\n';
    if (!out.flush()) throw IoError("write failed: " + (workdir / kManifestFile).string());
}

std::optional<ManifestEntry> latest_entry(const std::vector<ManifestEntry>& entries,
                                          const std::string& stage) {
    for (auto it = entries.rbegin(); it != entries.rend(); ++it) {
        if (it->stage == stage) return *it;
    }
    return std::nullopt;
}

}  // namespace relcurate
