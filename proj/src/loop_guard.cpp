#include "genesis/loop_guard.hpp"

#include <random>

#include <unicode/uchar.h>
#include <unicode/unistr.h>

#include "genesis/error.hpp"

namespace genesis {

std::vector<std::string> default_perturbation_sentences() {
    return {
        "Approach the task from a different angle than in your previous answer.",
        "Before answering, consider one alternative solution and choose the better one.",
        "Vary the structure and wording of your answer while keeping it correct.",
        "Question one assumption you made earlier and revise your answer accordingly.",
    };
}

void validate_guard_config(const LoopGuardConfig& cfg) {
    if (cfg.lookback_window < 1) throw ConfigError("guard.lookback_window must be positive");
    if (cfg.max_injections < 1) throw ConfigError("guard.max_injections must be positive");
    if (cfg.stage_timeout.count() <= 0) throw ConfigError("guard.stage_timeout must be positive");
    if (cfg.perturbation_sentences.size() < static_cast<std::size_t>(cfg.max_injections)) {
        throw ConfigError("guard.perturbation_sentences needs at least max_injections entries");
    }
    for (const auto& s : cfg.perturbation_sentences) {
        if (s.empty()) throw ConfigError("guard.perturbation_sentences must not contain empty sentences");
    }
}

std::string normalize_content(std::string_view text) {
    icu::UnicodeString folded = icu::UnicodeString::fromUTF8(icu::StringPiece(text.data(), static_cast<int32_t>(text.size())));
    folded.foldCase(U_FOLD_CASE_DEFAULT);

    icu::UnicodeString collapsed;
    bool pending_space = false;
    for (int32_t i = 0; i < folded.length(); i = folded.moveIndex32(i, 1)) {
        UChar32 c = folded.char32At(i);
        if (u_isUWhiteSpace(c)) {
            pending_space = !collapsed.isEmpty();
            continue;
        }
        if (pending_space) collapsed.append(static_cast<UChar>(u' '));
        pending_space = false;
        collapsed.append(c);
    }
    std::string out;
    collapsed.toUTF8String(out);
    return out;
}

bool detect_loop(const std::vector<std::string>& history, const std::string& candidate, const LoopGuardConfig& cfg) {
    const std::size_t window = static_cast<std::size_t>(std::max(cfg.lookback_window, 0));
    const std::size_t first = history.size() > window ? history.size() - window : 0;
    for (std::size_t i = first; i < history.size(); ++i) {
        if (history[i] == candidate) return true;
    }
    return false;
}

CompletionRequest inject_perturbation(const CompletionRequest& request, int injection_index, const LoopGuardConfig& cfg) {
    if (injection_index < 0 || injection_index >= cfg.max_injections ||
        static_cast<std::size_t>(injection_index) >= cfg.perturbation_sentences.size()) {
        throw InjectionBudgetExceeded("injection " + std::to_string(injection_index) + " exceeds the budget of " +
                                      std::to_string(cfg.max_injections));
    }
    CompletionRequest out = request;
    const std::string& sentence = cfg.perturbation_sentences[static_cast<std::size_t>(injection_index)];
    for (auto it = out.messages.rbegin(); it != out.messages.rend(); ++it) {
        if (it->role == Role::User) {
            it->content += "\n";
            it->content += sentence;
            return out;
        }
    }
    out.messages.push_back({Role::User, sentence});
    return out;
}

LoopGuardConfig shuffle_perturbations(LoopGuardConfig cfg) {
    std::mt19937_64 rng(static_cast<std::uint64_t>(cfg.rng_seed));
    auto& s = cfg.perturbation_sentences;
    for (std::size_t i = s.size(); i > 1; --i) {
        std::size_t j = static_cast<std::size_t>(rng() % i);
        std::swap(s[i - 1], s[j]);
    }
    return cfg;
}

LoopGuard::LoopGuard(LoopGuardConfig cfg) : cfg_(std::move(cfg)) { validate_guard_config(cfg_); }

LoopGuard::Decision LoopGuard::review(const std::string& key, std::string_view output,
                                      const CompletionRequest& base_request) {
    KeyState& st = state_[key];
    std::string normalized = normalize_content(output);
    const bool repeat = detect_loop(st.history, normalized, cfg_);
    st.history.push_back(std::move(normalized));
    if (!repeat) return {};

    ++st.incidents;
    if (on_loop) on_loop(key, st.incidents);
    if (st.injections >= cfg_.max_injections) throw LoopAborted(key, st.incidents);

    const int index = st.injections++;
    Decision d{Action::Retry, inject_perturbation(base_request, index, cfg_)};
    if (on_injection) on_injection(key, index, cfg_.perturbation_sentences[static_cast<std::size_t>(index)]);
    return d;
}

int LoopGuard::incidents(const std::string& key) const {
    auto it = state_.find(key);
    return it == state_.end() ? 0 : it->second.incidents;
}

int LoopGuard::injections(const std::string& key) const {
    auto it = state_.find(key);
    return it == state_.end() ? 0 : it->second.injections;
}

int LoopGuard::total_incidents() const {
    int total = 0;
    for (const auto& [_, st] : state_) total += st.incidents;
    return total;
}

}  // namespace genesis
