#pragma once

#include <string>
#include <string_view>

namespace genesis {

inline constexpr std::string_view kBeginArtifact = "BEGIN_ARTIFACT";
inline constexpr std::string_view kEndArtifact = "END_ARTIFACT";

/// Content of the first BEGIN_ARTIFACT ... END_ARTIFACT block. Markers must
/// occupy whole lines; the newline after BEGIN and the one before END belong
/// to the markers. Throws MissingArtifactBlock when no complete block exists.
std::string extract_artifact(std::string_view text);

/// Wraps `content` in markers so that extract_artifact returns it unchanged.
std::string wrap_artifact(std::string_view content);

}  // namespace genesis
