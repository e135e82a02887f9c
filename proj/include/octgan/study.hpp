#pragma once

// Blinded perceptual test: a reader sees generated and real patches for two
// seconds each and must tell them apart. Sessions are 5 practice trials
// (answer revealed) followed by 50 scored test trials.

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "octgan/array.hpp"

namespace octgan::study {

inline constexpr std::size_t kPracticeTrials = 5;
inline constexpr std::size_t kTestTrials = 50;
inline constexpr std::size_t kTotalTrials = kPracticeTrials + kTestTrials;
inline constexpr double kDisplaySeconds = 2.0;
// Unpaired practice may not lean more than 3:2 towards either class.
inline constexpr std::size_t kMaxPracticePerClass = 3;

enum class Mode { Paired, Unpaired };
std::string to_string(Mode m);
Mode parse_mode(const std::string& s);

// Answers: "left"/"right" (which side is real) in paired mode,
// "real"/"generated" in unpaired mode.
std::vector<std::string> choices(Mode m);

// Normalized [-1, 1] patches. In paired mode real[i] and generated[i] show
// the same tissue.
struct ImageBank {
    std::vector<Image> real;
    std::vector<Image> generated;

    // Reads real/*.png and generated/*.png (sorted by name) from `dir`.
    static ImageBank load(const std::filesystem::path& dir);
    void save(const std::filesystem::path& dir) const;
};

enum class Source { Real, Generated };

struct ImageRef {
    Source source = Source::Real;
    std::size_t index = 0;
    bool operator==(const ImageRef&) const = default;
};

struct Trial {
    std::size_t index = 0;
    bool practice = false;
    std::vector<ImageRef> images;  // left, right (paired) or the single image
    std::string truth;
};

struct TrialRecord {
    std::size_t trial_index = 0;
    std::string truth;
    std::string answer;
    double response_time_ms = 0.0;
    bool correct = false;
    bool late = false;  // answered after the display window closed
};

enum class ErrorCode { InsufficientImages, UnknownSession, UnknownTrial, DoubleAnswer, InvalidAnswer, Incomplete };

class StudyError : public Error {
public:
    StudyError(ErrorCode code, const std::string& what) : Error(what), code(code) {}
    ErrorCode code;
};

class StudySession {
public:
    const std::string& id() const noexcept { return id_; }
    Mode mode() const noexcept { return mode_; }
    std::uint64_t seed() const noexcept { return seed_; }
    double display_seconds() const noexcept { return kDisplaySeconds; }
    const std::vector<Trial>& trials() const noexcept { return trials_; }
    const std::vector<std::optional<TrialRecord>>& records() const noexcept { return records_; }

    // Lowest unanswered trial; nullopt once all 55 are answered.
    std::optional<std::size_t> next_trial() const;
    std::size_t answered() const;
    std::size_t answered_tests() const;
    bool complete() const { return answered() == kTotalTrials; }

    const TrialRecord& record_answer(std::size_t trial_index, const std::string& answer, double response_time_ms);

    // Append-only history: one "created" event holding the trial plan, then
    // one "answer" event per recorded answer.
    const std::vector<nlohmann::json>& events() const noexcept { return events_; }

    friend StudySession create_session(Mode, const ImageBank&, std::uint64_t, std::string);
    friend StudySession replay(const std::vector<nlohmann::json>&);

private:
    std::string id_;
    Mode mode_ = Mode::Paired;
    std::uint64_t seed_ = 0;
    std::vector<Trial> trials_;
    std::vector<std::optional<TrialRecord>> records_;
    std::vector<nlohmann::json> events_;
};

// Deterministic under `seed` (the id does not influence the plan).
StudySession create_session(Mode mode, const ImageBank& bank, std::uint64_t seed, std::string session_id);

// 100 * incorrect / 50 over test trials; throws Incomplete until all 50 are answered.
double confusion_score(const StudySession& session);
// Same arithmetic on bare records (practice records must already be excluded).
double confusion_score(const std::vector<TrialRecord>& test_records);

StudySession replay(const std::vector<nlohmann::json>& events);
StudySession replay_file(const std::filesystem::path& jsonl);

// Client-facing payloads. Test-trial payloads never carry truth, correctness
// or image identities; only the aggregate score reveals anything.
nlohmann::json trial_payload(const StudySession& session, std::size_t trial_index, const std::string& url_prefix);
nlohmann::json answer_payload(const StudySession& session, const TrialRecord& record);

// Thread-safe set of live sessions. Each session is persisted to
// <log_dir>/<id>.jsonl when a log directory is given; existing logs are
// replayed on construction so a restarted server resumes its sessions.
class SessionStore {
public:
    explicit SessionStore(ImageBank bank, std::optional<std::filesystem::path> log_dir = std::nullopt);

    StudySession create(Mode mode, std::uint64_t seed);
    // Snapshot copy; throws UnknownSession.
    StudySession get(const std::string& id) const;
    // Returns the session snapshot taken under the same lock as the answer.
    std::pair<TrialRecord, StudySession> answer(const std::string& id, std::size_t trial_index,
                                                const std::string& answer, double response_time_ms);
    std::vector<std::uint8_t> render_png(const std::string& id, std::size_t trial_index, std::size_t slot) const;
    std::size_t size() const;

private:
    struct Entry {
        mutable std::mutex mutex;
        StudySession session;
    };
    std::shared_ptr<Entry> find(const std::string& id) const;
    void append(const std::string& id, const nlohmann::json& event) const;

    ImageBank bank_;
    std::optional<std::filesystem::path> log_dir_;
    mutable std::shared_mutex map_mutex_;
    std::map<std::string, std::shared_ptr<Entry>> sessions_;
};

}  // namespace octgan::study
