#pragma once

#include <string>

namespace synthwave::io {

/// SHA-1 hex digest of a byte string.
std::string sha1_hex(const std::string& bytes);

/// Git-blob-style content hash: sha1("blob <size>\0" + content).
std::string git_blob_hash(const std::string& content);

}  // namespace synthwave::io
