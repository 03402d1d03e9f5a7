#pragma once

#include <string>

#include "drjcc/types.hpp"

namespace drjcc {

/// Parses and validates a community config document. Throws ParseError on
/// malformed input and ValidationError when an invariant is violated.
CommunityConfig load_community_config(const std::string& path);

CommunityConfig community_config_from_json_text(const std::string& text);

std::string community_config_to_json_text(const CommunityConfig& config);
void save_community_config(const CommunityConfig& config, const std::string& path);

}  // namespace drjcc
