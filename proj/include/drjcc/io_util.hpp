#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace drjcc {

/// Fixed 12-significant-digit rendering used by every CSV writer, so repeated
/// runs emit byte-identical numbers.
std::string format_sig12(double v);

/// FNV-1a, used for stable config hashes in run manifests.
std::uint64_t fnv1a(const std::string& bytes);
std::string fnv1a_hex(const std::string& bytes);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

/// Thread cap from DRJCC_THREADS (0 or unset = automatic).
int thread_cap();
int resolve_threads();

}  // namespace drjcc
