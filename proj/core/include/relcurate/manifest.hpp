// Copyright (c) 2026, The relcurate Authors
// SPDX-License-Identifier: Apache-2.0
//
// Append-only stage log kept at <workdir>/manifest.jsonl. Paths are relative
// to the workdir and map to SHA-256 digests of the file contents.

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace relcurate {

inline constexpr const char* kManifestFile = "manifest.jsonl";

struct ManifestEntry {
    std::string stage;
    std::string status;  // "ok", "skipped(ablation)" or "skipped(joint)"
    std::string config_hash;
    std::map<std::string, std::string> inputs;
    std::map<std::string, std::string> outputs;
    std::int64_t duration_ms = 0;

    bool operator==(const ManifestEntry&) const = default;
};

std::vector<ManifestEntry> read_manifest(const std::filesystem::path& workdir);

/// Appends one line; the manifest file is created on first use.
void append_manifest(const std::filesystem::path& workdir, const ManifestEntry& entry);

/// Most recent entry for `stage`, if any.
std::optional<ManifestEntry> latest_entry(const std::vector<ManifestEntry>& entries,
                                          const std::string& stage);

}  // namespace relcurate
