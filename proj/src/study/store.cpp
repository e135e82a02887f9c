#include <fstream>
#include <random>

#include "octgan/image_io.hpp"
#include "octgan/study.hpp"

namespace octgan::study {

namespace {

std::string new_session_id() {
    static std::mutex m;
    static std::random_device rd;
    std::lock_guard lock(m);
    static constexpr char hex[] = "0123456789abcdef";
    std::string id;
    for (int i = 0; i < 4; ++i) {
        auto v = rd();
        for (int k = 0; k < 8; ++k, v >>= 4) id.push_back(hex[v & 0xf]);
    }
    return id;
}

bool refs_fit(const StudySession& s, const ImageBank& bank) {
    for (const auto& t : s.trials()) {
        for (const auto& r : t.images) {
            const auto& pool = r.source == Source::Real ? bank.real : bank.generated;
            if (r.index >= pool.size()) return false;
        }
    }
    return true;
}

}  // namespace

SessionStore::SessionStore(ImageBank bank, std::optional<std::filesystem::path> log_dir)
    : bank_(std::move(bank)), log_dir_(std::move(log_dir)) {
    if (!log_dir_) return;
    std::filesystem::create_directories(*log_dir_);
    for (const auto& e : std::filesystem::directory_iterator(*log_dir_)) {
        if (e.path().extension() != ".jsonl") continue;
        auto s = replay_file(e.path());
        if (!refs_fit(s, bank_)) {
            throw InvalidArgument("event log " + e.path().string() + " refers to images outside the bank");
        }
        auto entry = std::make_shared<Entry>();
        entry->session = std::move(s);
        sessions_.emplace(entry->session.id(), std::move(entry));
    }
}

void SessionStore::append(const std::string& id, const nlohmann::json& event) const {
    if (!log_dir_) return;
    std::ofstream out(*log_dir_ / (id + ".jsonl"), std::ios::app);
    out << event.dump() << '\n';
    out.flush();
    if (!out) throw Error("cannot append to the event log of session " + id);
}

StudySession SessionStore::create(Mode mode, std::uint64_t seed) {
    auto entry = std::make_shared<Entry>();
    std::unique_lock lock(map_mutex_);
    std::string id;
    do {
        id = new_session_id();
    } while (sessions_.count(id));
    entry->session = create_session(mode, bank_, seed, id);
    append(id, entry->session.events().front());
    sessions_.emplace(id, entry);
    return entry->session;
}

std::shared_ptr<SessionStore::Entry> SessionStore::find(const std::string& id) const {
    std::shared_lock lock(map_mutex_);
    const auto it = sessions_.find(id);
    if (it == sessions_.end()) throw StudyError(ErrorCode::UnknownSession, "no session '" + id + "'");
    return it->second;
}

StudySession SessionStore::get(const std::string& id) const {
    const auto entry = find(id);
    std::lock_guard lock(entry->mutex);
    return entry->session;
}

std::pair<TrialRecord, StudySession> SessionStore::answer(const std::string& id, std::size_t trial_index,
                                                          const std::string& answer, double response_time_ms) {
    const auto entry = find(id);
    std::lock_guard lock(entry->mutex);
    const TrialRecord rec = entry->session.record_answer(trial_index, answer, response_time_ms);
    append(id, entry->session.events().back());
    return {rec, entry->session};
}

std::vector<std::uint8_t> SessionStore::render_png(const std::string& id, std::size_t trial_index,
                                                   std::size_t slot) const {
    const auto entry = find(id);
    ImageRef ref;
    {
        std::lock_guard lock(entry->mutex);
        const auto& trials = entry->session.trials();
        if (trial_index >= trials.size() || slot >= trials[trial_index].images.size()) {
            throw StudyError(ErrorCode::UnknownTrial, "no image " + std::to_string(slot) + " in trial " +
                                                          std::to_string(trial_index));
        }
        ref = trials[trial_index].images[slot];
    }
    const auto& pool = ref.source == Source::Real ? bank_.real : bank_.generated;
    return io::encode_png8(pool.at(ref.index), -1.0, 1.0);
}

std::size_t SessionStore::size() const {
    std::shared_lock lock(map_mutex_);
    return sessions_.size();
}

}  // namespace octgan::study
