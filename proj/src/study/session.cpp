#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <random>

#include "octgan/image_io.hpp"
#include "octgan/seed.hpp"
#include "octgan/study.hpp"

namespace octgan::study {

namespace {

constexpr std::uint64_t kSelectStream = 1;
constexpr std::uint64_t kOrderStream = 2;
constexpr std::uint64_t kSideStream = 3;

std::string source_name(Source s) { return s == Source::Real ? "real" : "generated"; }

Source parse_source(const std::string& s) {
    if (s == "real") return Source::Real;
    if (s == "generated") return Source::Generated;
    throw InvalidArgument("unknown image source '" + s + "'");
}

std::vector<std::size_t> shuffled_indices(std::size_t n, std::mt19937_64& rng) {
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::shuffle(idx.begin(), idx.end(), rng);
    return idx;
}

std::vector<Trial> paired_plan(const ImageBank& bank, std::uint64_t seed) {
    if (bank.real.size() != bank.generated.size()) {
        throw StudyError(ErrorCode::InsufficientImages, "paired mode needs co-registered real/generated pairs (" +
                                                            std::to_string(bank.real.size()) + " real vs " +
                                                            std::to_string(bank.generated.size()) + " generated)");
    }
    if (bank.real.size() < kTotalTrials) {
        throw StudyError(ErrorCode::InsufficientImages, "paired mode needs at least " + std::to_string(kTotalTrials) +
                                                            " pairs, got " + std::to_string(bank.real.size()));
    }
    std::mt19937_64 select(derive_seed(seed, kSelectStream));
    std::mt19937_64 sides(derive_seed(seed, kSideStream));
    std::bernoulli_distribution coin(0.5);
    const auto picked = shuffled_indices(bank.real.size(), select);
    std::vector<Trial> trials;
    for (std::size_t t = 0; t < kTotalTrials; ++t) {
        Trial tr;
        tr.index = t;
        tr.practice = t < kPracticeTrials;
        const ImageRef real{Source::Real, picked[t]};
        const ImageRef fake{Source::Generated, picked[t]};
        if (coin(sides)) {
            tr.images = {real, fake};
            tr.truth = "left";
        } else {
            tr.images = {fake, real};
            tr.truth = "right";
        }
        trials.push_back(std::move(tr));
    }
    return trials;
}

std::vector<Trial> unpaired_plan(const ImageBank& bank, std::uint64_t seed) {
    const std::size_t per_class = kTestTrials / 2 + kMaxPracticePerClass;
    if (bank.real.size() < per_class || bank.generated.size() < per_class) {
        throw StudyError(ErrorCode::InsufficientImages, "unpaired mode needs at least " + std::to_string(per_class) +
                                                            " real and " + std::to_string(per_class) +
                                                            " generated patches");
    }
    std::mt19937_64 select(derive_seed(seed, kSelectStream));
    std::mt19937_64 order(derive_seed(seed, kOrderStream));
    const auto real = shuffled_indices(bank.real.size(), select);
    const auto fake = shuffled_indices(bank.generated.size(), select);
    // Practice split is 3:2 one way or the other.
    const std::size_t practice_real = std::bernoulli_distribution(0.5)(select) ? kMaxPracticePerClass
                                                                               : kPracticeTrials - kMaxPracticePerClass;
    const std::size_t practice_fake = kPracticeTrials - practice_real;

    std::vector<ImageRef> practice, test;
    std::size_t r = 0, f = 0;
    for (; r < practice_real; ++r) practice.push_back({Source::Real, real[r]});
    for (; f < practice_fake; ++f) practice.push_back({Source::Generated, fake[f]});
    for (std::size_t i = 0; i < kTestTrials / 2; ++i) {
        test.push_back({Source::Real, real[r++]});
        test.push_back({Source::Generated, fake[f++]});
    }
    std::shuffle(practice.begin(), practice.end(), order);
    std::shuffle(test.begin(), test.end(), order);

    std::vector<Trial> trials;
    for (std::size_t t = 0; t < kTotalTrials; ++t) {
        Trial tr;
        tr.index = t;
        tr.practice = t < kPracticeTrials;
        const ImageRef ref = tr.practice ? practice[t] : test[t - kPracticeTrials];
        tr.images = {ref};
        tr.truth = source_name(ref.source);
        trials.push_back(std::move(tr));
    }
    return trials;
}

nlohmann::json trial_to_json(const Trial& t) {
    nlohmann::json images = nlohmann::json::array();
    for (const auto& ref : t.images) images.push_back({{"source", source_name(ref.source)}, {"index", ref.index}});
    return {{"index", t.index}, {"practice", t.practice}, {"images", images}, {"truth", t.truth}};
}

Trial trial_from_json(const nlohmann::json& j) {
    Trial t;
    t.index = j.at("index").get<std::size_t>();
    t.practice = j.at("practice").get<bool>();
    for (const auto& im : j.at("images")) {
        t.images.push_back({parse_source(im.at("source").get<std::string>()), im.at("index").get<std::size_t>()});
    }
    t.truth = j.at("truth").get<std::string>();
    return t;
}

}  // namespace

std::string to_string(Mode m) { return m == Mode::Paired ? "paired" : "unpaired"; }

Mode parse_mode(const std::string& s) {
    if (s == "paired") return Mode::Paired;
    if (s == "unpaired") return Mode::Unpaired;
    throw InvalidArgument("mode must be 'paired' or 'unpaired', got '" + s + "'");
}

std::vector<std::string> choices(Mode m) {
    if (m == Mode::Paired) return {"left", "right"};
    return {"real", "generated"};
}

ImageBank ImageBank::load(const std::filesystem::path& dir) {
    auto read_dir = [](const std::filesystem::path& d) {
        if (!std::filesystem::is_directory(d)) throw InvalidArgument("image bank: missing directory " + d.string());
        std::vector<std::filesystem::path> files;
        for (const auto& e : std::filesystem::directory_iterator(d)) {
            if (e.path().extension() == ".png") files.push_back(e.path());
        }
        std::sort(files.begin(), files.end());
        std::vector<Image> out;
        for (const auto& f : files) {
            auto g = io::read_gray(f);
            for (double& v : g.pixels.values()) v = 2.0 * v / g.full_scale - 1.0;
            out.push_back(std::move(g.pixels));
        }
        return out;
    };
    return {read_dir(dir / "real"), read_dir(dir / "generated")};
}

void ImageBank::save(const std::filesystem::path& dir) const {
    auto write_dir = [](const std::filesystem::path& d, const std::vector<Image>& images) {
        std::filesystem::create_directories(d);
        for (std::size_t i = 0; i < images.size(); ++i) {
            char name[32];
            std::snprintf(name, sizeof name, "%05zu.png", i);
            io::write_png16(d / name, images[i], -1.0, 1.0);
        }
    };
    write_dir(dir / "real", real);
    write_dir(dir / "generated", generated);
}

std::optional<std::size_t> StudySession::next_trial() const {
    for (std::size_t i = 0; i < records_.size(); ++i) {
        if (!records_[i]) return i;
    }
    return std::nullopt;
}

std::size_t StudySession::answered() const {
    return static_cast<std::size_t>(std::count_if(records_.begin(), records_.end(), [](const auto& r) { return r.has_value(); }));
}

std::size_t StudySession::answered_tests() const {
    std::size_t n = 0;
    for (std::size_t i = kPracticeTrials; i < records_.size(); ++i) n += records_[i].has_value();
    return n;
}

const TrialRecord& StudySession::record_answer(std::size_t trial_index, const std::string& answer,
                                               double response_time_ms) {
    if (trial_index >= trials_.size()) {
        throw StudyError(ErrorCode::UnknownTrial, "no trial " + std::to_string(trial_index));
    }
    if (records_[trial_index]) {
        throw StudyError(ErrorCode::DoubleAnswer, "trial " + std::to_string(trial_index) + " is already answered");
    }
    const auto allowed = choices(mode_);
    if (std::find(allowed.begin(), allowed.end(), answer) == allowed.end()) {
        throw StudyError(ErrorCode::InvalidAnswer, "answer '" + answer + "' is not valid in " + to_string(mode_) + " mode");
    }
    if (!(response_time_ms >= 0.0) || !std::isfinite(response_time_ms)) {
        throw StudyError(ErrorCode::InvalidAnswer, "response_time_ms must be a finite non-negative number");
    }
    TrialRecord rec;
    rec.trial_index = trial_index;
    rec.truth = trials_[trial_index].truth;
    rec.answer = answer;
    rec.response_time_ms = response_time_ms;
    rec.correct = answer == rec.truth;
    rec.late = response_time_ms > kDisplaySeconds * 1000.0;
    events_.push_back({{"event", "answer"},
                       {"trial_index", trial_index},
                       {"answer", answer},
                       {"response_time_ms", response_time_ms}});
    records_[trial_index] = rec;
    return *records_[trial_index];
}

StudySession create_session(Mode mode, const ImageBank& bank, std::uint64_t seed, std::string session_id) {
    StudySession s;
    s.id_ = std::move(session_id);
    s.mode_ = mode;
    s.seed_ = seed;
    s.trials_ = mode == Mode::Paired ? paired_plan(bank, seed) : unpaired_plan(bank, seed);
    s.records_.assign(s.trials_.size(), std::nullopt);
    nlohmann::json plan = nlohmann::json::array();
    for (const auto& t : s.trials_) plan.push_back(trial_to_json(t));
    s.events_.push_back({{"event", "created"},
                         {"session_id", s.id_},
                         {"mode", to_string(mode)},
                         {"seed", seed},
                         {"display_seconds", kDisplaySeconds},
                         {"trials", plan}});
    return s;
}

double confusion_score(const std::vector<TrialRecord>& test_records) {
    if (test_records.size() != kTestTrials) {
        throw StudyError(ErrorCode::Incomplete, std::to_string(test_records.size()) + " of " +
                                                    std::to_string(kTestTrials) + " test trials answered");
    }
    const auto wrong = std::count_if(test_records.begin(), test_records.end(), [](const auto& r) { return !r.correct; });
    return 100.0 * static_cast<double>(wrong) / static_cast<double>(kTestTrials);
}

double confusion_score(const StudySession& session) {
    std::vector<TrialRecord> tests;
    for (std::size_t i = kPracticeTrials; i < session.records().size(); ++i) {
        if (session.records()[i]) tests.push_back(*session.records()[i]);
    }
    return confusion_score(tests);
}

StudySession replay(const std::vector<nlohmann::json>& events) {
    if (events.empty() || events.front().value("event", "") != "created") {
        throw InvalidArgument("event log must start with a 'created' event");
    }
    const auto& c = events.front();
    StudySession s;
    s.id_ = c.at("session_id").get<std::string>();
    s.mode_ = parse_mode(c.at("mode").get<std::string>());
    s.seed_ = c.at("seed").get<std::uint64_t>();
    for (const auto& t : c.at("trials")) s.trials_.push_back(trial_from_json(t));
    if (s.trials_.size() != kTotalTrials) throw InvalidArgument("event log: session must have 55 trials");
    s.records_.assign(s.trials_.size(), std::nullopt);
    s.events_.push_back(c);
    for (std::size_t i = 1; i < events.size(); ++i) {
        const auto& e = events[i];
        if (e.value("event", "") != "answer") throw InvalidArgument("event log: unexpected event " + e.dump());
        s.record_answer(e.at("trial_index").get<std::size_t>(), e.at("answer").get<std::string>(),
                        e.at("response_time_ms").get<double>());
    }
    return s;
}

StudySession replay_file(const std::filesystem::path& jsonl) {
    std::ifstream in(jsonl);
    if (!in) throw InvalidArgument("cannot open event log " + jsonl.string());
    std::vector<nlohmann::json> events;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty()) events.push_back(nlohmann::json::parse(line));
    }
    return replay(events);
}

nlohmann::json trial_payload(const StudySession& session, std::size_t trial_index, const std::string& url_prefix) {
    if (trial_index >= session.trials().size()) {
        throw StudyError(ErrorCode::UnknownTrial, "no trial " + std::to_string(trial_index));
    }
    const Trial& t = session.trials()[trial_index];
    nlohmann::json urls = nlohmann::json::array();
    for (std::size_t slot = 0; slot < t.images.size(); ++slot) {
        urls.push_back(url_prefix + "/trials/" + std::to_string(trial_index) + "/images/" + std::to_string(slot) + ".png");
    }
    nlohmann::json p = {{"trial_index", trial_index},
                        {"practice", t.practice},
                        {"mode", to_string(session.mode())},
                        {"images", urls},
                        {"choices", choices(session.mode())},
                        {"display_seconds", session.display_seconds()},
                        {"progress", {{"answered", session.answered()}, {"total", kTotalTrials}}},
                        {"answered", session.records()[trial_index].has_value()}};
    // Practice truth is revealed only after the reader has answered.
    if (t.practice && session.records()[trial_index]) p["truth"] = t.truth;
    return p;
}

nlohmann::json answer_payload(const StudySession& session, const TrialRecord& record) {
    const bool practice = session.trials().at(record.trial_index).practice;
    nlohmann::json p = {{"trial_index", record.trial_index},
                        {"recorded", true},
                        {"practice", practice},
                        {"late", record.late},
                        {"progress", {{"answered", session.answered()}, {"total", kTotalTrials}}}};
    if (practice) {
        p["truth"] = record.truth;
        p["correct"] = record.correct;
    }
    return p;
}

}  // namespace octgan::study
