#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "genesis/backend.hpp"

namespace genesis {

std::vector<std::string> default_perturbation_sentences();

struct LoopGuardConfig {
    int lookback_window = 4;
    int max_injections = 3;
    std::chrono::milliseconds stage_timeout{300'000};
    std::vector<std::string> perturbation_sentences = default_perturbation_sentences();
    std::int64_t rng_seed = 0;
};

/// Throws ConfigError.
void validate_guard_config(const LoopGuardConfig& cfg);

/// Unicode case fold, whitespace runs collapsed to one space, ends trimmed.
std::string normalize_content(std::string_view text);

/// True iff `candidate` equals one of the last `lookback_window` entries of
/// `history` (oldest first). Both sides are expected to be normalized.
bool detect_loop(const std::vector<std::string>& history, const std::string& candidate, const LoopGuardConfig& cfg);

/// Copy of `request` whose last user message gains perturbation sentence
/// `injection_index` as a final line. Throws InjectionBudgetExceeded.
CompletionRequest inject_perturbation(const CompletionRequest& request, int injection_index, const LoopGuardConfig& cfg);

/// Reorders the perturbation sentences with a seeded Fisher-Yates shuffle
/// over mt19937_64, so the order is the same on every platform.
LoopGuardConfig shuffle_perturbations(LoopGuardConfig cfg);

/// Stateful repetition guard shared by the meta-pipeline and the bundle
/// interpreter. Histories and injection budgets are tracked per key
/// (an agent/stage conversation).
class LoopGuard {
public:
    explicit LoopGuard(LoopGuardConfig cfg);

    enum class Action { Accept, Retry };

    struct Decision {
        Action action = Action::Accept;
        CompletionRequest retry_request;
    };

    /// Records `output` for `key`. A fresh output is accepted. A repeat is an
    /// incident: while the key's injection budget lasts the decision carries
    /// `base_request` with the next perturbation sentence; once it is spent
    /// LoopAborted is thrown.
    Decision review(const std::string& key, std::string_view output, const CompletionRequest& base_request);

    int incidents(const std::string& key) const;
    int injections(const std::string& key) const;
    int total_incidents() const;

    const LoopGuardConfig& config() const noexcept { return cfg_; }

    std::function<void(const std::string& key, int incident)> on_loop;
    std::function<void(const std::string& key, int index, const std::string& sentence)> on_injection;

private:
    struct KeyState {
        std::vector<std::string> history;
        int incidents = 0;
        int injections = 0;
    };

    LoopGuardConfig cfg_;
    std::map<std::string, KeyState> state_;
};

}  // namespace genesis
