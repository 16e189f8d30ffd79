// Copyright (c) 2026, The relcurate Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace relcurate {

/// Lower-case hex SHA-256 digest.
std::string sha256_hex(std::string_view data);

/// Digest of a file's bytes; throws IoError if it cannot be read.
std::string sha256_file(const std::filesystem::path& path);

}  // namespace relcurate
