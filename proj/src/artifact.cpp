#include "genesis/artifact.hpp"

#include "genesis/error.hpp"

namespace genesis {

std::string extract_artifact(std::string_view text) {
    std::size_t line_start = 0;
    std::size_t content_start = std::string_view::npos;
    while (line_start <= text.size()) {
        std::size_t line_end = text.find('\n', line_start);
        if (line_end == std::string_view::npos) line_end = text.size();
        std::string_view line = text.substr(line_start, line_end - line_start);
        if (content_start == std::string_view::npos) {
            if (line == kBeginArtifact) content_start = line_end + 1;
        } else if (line == kEndArtifact) {
            if (line_start == content_start) return {};
            // drop the newline that precedes END_ARTIFACT
            return std::string(text.substr(content_start, line_start - 1 - content_start));
        }
        if (line_end == text.size()) break;
        line_start = line_end + 1;
    }
    throw MissingArtifactBlock(content_start == std::string_view::npos
                                   ? "no BEGIN_ARTIFACT line"
                                   : "BEGIN_ARTIFACT without a matching END_ARTIFACT line");
}

std::string wrap_artifact(std::string_view content) {
    std::string out;
    out.reserve(content.size() + 32);
    out += kBeginArtifact;
    out += '\n';
    out += content;
    if (!content.empty()) out += '\n';
    out += kEndArtifact;
    out += '\n';
    return out;
}

}  // namespace genesis
