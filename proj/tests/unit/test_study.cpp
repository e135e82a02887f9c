#include <doctest.h>

#include <filesystem>
#include <numeric>
#include <set>
#include <thread>

#include <httplib.h>

#include "octgan/study.hpp"
#include "octgan/study_server.hpp"
#include "oracles.hpp"

using namespace octgan;
using namespace octgan::study;
using nlohmann::json;

namespace {

ImageBank make_bank(std::size_t real, std::size_t generated, std::uint64_t seed = 1) {
    std::mt19937_64 rng(seed);
    ImageBank b;
    for (std::size_t i = 0; i < real; ++i) b.real.push_back(oracle::random_image(16, 16, rng, -1.0, 1.0));
    for (std::size_t i = 0; i < generated; ++i) b.generated.push_back(oracle::random_image(16, 16, rng, -1.0, 1.0));
    return b;
}

std::string wrong_answer(Mode m, const std::string& truth) {
    const auto c = choices(m);
    return truth == c[0] ? c[1] : c[0];
}

// Answers every trial; `wrong` test trials (the first ones) get the wrong answer.
void answer_all(StudySession& s, std::size_t wrong) {
    for (const auto& t : s.trials()) {
        const bool miss = !t.practice && t.index - kPracticeTrials < wrong;
        s.record_answer(t.index, miss ? wrong_answer(s.mode(), t.truth) : t.truth, 900.0);
    }
}

struct TempDir {
    std::filesystem::path path;
    explicit TempDir(const std::string& name) : path(std::filesystem::temp_directory_path() / name) {
        std::filesystem::remove_all(path);
    }
    ~TempDir() { std::filesystem::remove_all(path); }
};

struct RunningServer {
    StudyServer server;
    int port;
    std::thread thread;
    explicit RunningServer(SessionStore& store) : server(store), port(server.bind("127.0.0.1", 0)) {
        thread = std::thread([this] { server.serve(); });
    }
    ~RunningServer() {
        server.stop();
        thread.join();
    }
};

json body_of(const httplib::Result& r) {
    REQUIRE(r);
    return json::parse(r->body);
}

}  // namespace

TEST_CASE("paired sessions: 5 practice then 50 test trials, distinct pairs, randomized sides") {
    const auto bank = make_bank(70, 70);
    std::size_t left = 0, total = 0;
    for (std::uint64_t seed = 0; seed < 40; ++seed) {
        const auto s = create_session(Mode::Paired, bank, seed, "s");
        REQUIRE(s.trials().size() == kTotalTrials);
        std::set<std::size_t> pairs;
        for (const auto& t : s.trials()) {
            CHECK(t.practice == (t.index < kPracticeTrials));
            REQUIRE(t.images.size() == 2);
            CHECK(t.images[0].index == t.images[1].index);  // co-registered
            CHECK(t.images[0].source != t.images[1].source);
            const auto real_side = t.images[0].source == Source::Real ? "left" : "right";
            CHECK(t.truth == real_side);
            pairs.insert(t.images[0].index);
            left += t.truth == "left";
            ++total;
        }
        CHECK(pairs.size() == kTotalTrials);
    }
    const double frac = static_cast<double>(left) / static_cast<double>(total);
    CHECK(frac > 0.45);
    CHECK(frac < 0.55);
}

TEST_CASE("unpaired sessions: 25 real + 25 generated in test, balanced practice, no reuse") {
    const auto bank = make_bank(28, 40);
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        const auto s = create_session(Mode::Unpaired, bank, seed, "s");
        REQUIRE(s.trials().size() == kTotalTrials);
        std::size_t test_real = 0, test_fake = 0, prac_real = 0, prac_fake = 0;
        std::set<std::pair<int, std::size_t>> used;
        for (const auto& t : s.trials()) {
            REQUIRE(t.images.size() == 1);
            const auto& ref = t.images[0];
            CHECK(used.insert({static_cast<int>(ref.source), ref.index}).second);
            CHECK(t.truth == (ref.source == Source::Real ? "real" : "generated"));
            auto& counter = t.practice ? (ref.source == Source::Real ? prac_real : prac_fake)
                                       : (ref.source == Source::Real ? test_real : test_fake);
            ++counter;
        }
        CHECK(test_real == 25);
        CHECK(test_fake == 25);
        CHECK(prac_real + prac_fake == kPracticeTrials);
        CHECK(prac_real <= kMaxPracticePerClass);
        CHECK(prac_fake <= kMaxPracticePerClass);
    }
}

TEST_CASE("trial plans are deterministic under the seed") {
    const auto bank = make_bank(60, 60);
    for (const Mode m : {Mode::Paired, Mode::Unpaired}) {
        const auto a = create_session(m, bank, 7, "a");
        const auto b = create_session(m, bank, 7, "b");
        const auto c = create_session(m, bank, 8, "c");
        bool same_c = true;
        for (std::size_t i = 0; i < kTotalTrials; ++i) {
            CHECK(a.trials()[i].images == b.trials()[i].images);
            CHECK(a.trials()[i].truth == b.trials()[i].truth);
            same_c = same_c && a.trials()[i].images == c.trials()[i].images;
        }
        CHECK_FALSE(same_c);
    }
}

TEST_CASE("insufficient images are rejected") {
    auto code_of = [](Mode m, const ImageBank& b) {
        try {
            create_session(m, b, 0, "x");
        } catch (const StudyError& e) {
            return static_cast<int>(e.code);
        }
        return -1;
    };
    const int insufficient = static_cast<int>(ErrorCode::InsufficientImages);
    CHECK(code_of(Mode::Paired, make_bank(54, 54)) == insufficient);
    CHECK(code_of(Mode::Paired, make_bank(60, 59)) == insufficient);
    CHECK(code_of(Mode::Paired, make_bank(55, 55)) == -1);
    CHECK(code_of(Mode::Unpaired, make_bank(27, 60)) == insufficient);
    CHECK(code_of(Mode::Unpaired, make_bank(60, 27)) == insufficient);
    CHECK(code_of(Mode::Unpaired, make_bank(28, 28)) == -1);
}

TEST_CASE("answers: correctness, lateness, double answers and unknown trials") {
    auto s = create_session(Mode::Paired, make_bank(55, 55), 3, "s");
    const auto& t7 = s.trials()[7];
    CHECK(s.record_answer(7, t7.truth, 1500.0).correct);
    const auto& t8 = s.trials()[8];
    const auto& r8 = s.record_answer(8, wrong_answer(Mode::Paired, t8.truth), 2000.0);
    CHECK_FALSE(r8.correct);
    CHECK_FALSE(r8.late);  // exactly at the limit
    CHECK(s.record_answer(9, "left", 2000.5).late);

    // Trial 12 twice: the first record survives.
    s.record_answer(12, "left", 800.0);
    try {
        s.record_answer(12, "right", 700.0);
        FAIL("double answer accepted");
    } catch (const StudyError& e) {
        CHECK(e.code == ErrorCode::DoubleAnswer);
    }
    CHECK(s.records()[12]->answer == "left");
    CHECK(s.records()[12]->response_time_ms == 800.0);

    const auto events_before = s.events().size();
    CHECK_THROWS_AS(s.record_answer(55, "left", 1.0), StudyError);
    CHECK_THROWS_AS(s.record_answer(13, "real", 1.0), StudyError);  // unpaired vocabulary
    CHECK_THROWS_AS(s.record_answer(13, "left", -1.0), StudyError);
    CHECK(s.events().size() == events_before);
    CHECK(s.answered() == 4);
    CHECK(s.next_trial() == 0u);
}

TEST_CASE("confusion score arithmetic") {
    const auto bank = make_bank(60, 60);
    for (const Mode m : {Mode::Paired, Mode::Unpaired}) {
        for (const auto& [wrong, expected] : {std::pair{21, 42.0}, {0, 0.0}, {25, 50.0}, {50, 100.0}}) {
            auto s = create_session(m, bank, 5, "s");
            answer_all(s, static_cast<std::size_t>(wrong));
            CHECK(confusion_score(s) == doctest::Approx(expected).epsilon(1e-12));
        }
    }
    // Practice answers never count.
    auto s = create_session(Mode::Paired, bank, 6, "s");
    for (const auto& t : s.trials()) {
        s.record_answer(t.index, t.practice ? wrong_answer(Mode::Paired, t.truth) : t.truth, 500.0);
    }
    CHECK(confusion_score(s) == 0.0);
}

TEST_CASE("incomplete sessions have no score") {
    auto s = create_session(Mode::Unpaired, make_bank(30, 30), 1, "s");
    for (std::size_t i = 0; i < kTotalTrials - 1; ++i) s.record_answer(i, "real", 100.0);
    try {
        confusion_score(s);
        FAIL("score of an incomplete session");
    } catch (const StudyError& e) {
        CHECK(e.code == ErrorCode::Incomplete);
    }
    s.record_answer(kTotalTrials - 1, "generated", 100.0);
    CHECK_NOTHROW(confusion_score(s));
}

TEST_CASE("replaying the event log reproduces records and score") {
    const auto bank = make_bank(60, 60);
    std::mt19937_64 rng(17);
    for (int trial = 0; trial < 10; ++trial) {
        const Mode m = trial % 2 ? Mode::Unpaired : Mode::Paired;
        auto s = create_session(m, bank, rng(), "s" + std::to_string(trial));
        // Random answers in random order.
        std::vector<std::size_t> order(kTotalTrials);
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::shuffle(order.begin(), order.end(), rng);
        for (auto i : order) s.record_answer(i, choices(m)[rng() % 2], static_cast<double>(rng() % 4000));
        const auto r = replay(s.events());
        CHECK(r.id() == s.id());
        for (std::size_t i = 0; i < kTotalTrials; ++i) {
            CHECK(r.records()[i]->answer == s.records()[i]->answer);
            CHECK(r.records()[i]->correct == s.records()[i]->correct);
            CHECK(r.records()[i]->late == s.records()[i]->late);
        }
        CHECK(confusion_score(r) == confusion_score(s));
    }
}

TEST_CASE("test-trial payloads carry no truth; practice truth only after answering") {
    auto s = create_session(Mode::Unpaired, make_bank(30, 30), 2, "abc");
    for (std::size_t i = 0; i < kTotalTrials; ++i) {
        const auto p = trial_payload(s, i, "/sessions/abc");
        CHECK_FALSE(p.contains("truth"));
        CHECK_FALSE(p.contains("correct"));
    }
    const auto r0 = s.record_answer(0, "real", 10.0);
    CHECK(trial_payload(s, 0, "").at("truth") == s.trials()[0].truth);
    CHECK(answer_payload(s, r0).at("truth") == s.trials()[0].truth);
    const auto r6 = s.record_answer(6, "real", 10.0);
    CHECK_FALSE(answer_payload(s, r6).contains("truth"));
    CHECK_FALSE(answer_payload(s, r6).contains("correct"));
    CHECK_FALSE(trial_payload(s, 6, "").contains("truth"));
}

TEST_CASE("store persists sessions and resumes them after a restart") {
    TempDir dir("octgan_study_logs");
    const auto bank = make_bank(60, 60);
    std::string id;
    {
        SessionStore store(bank, dir.path);
        id = store.create(Mode::Paired, 99).id();
        auto s = store.get(id);
        for (std::size_t i = 0; i < 20; ++i) store.answer(id, i, s.trials()[i].truth, 1000.0);
    }
    CHECK(std::filesystem::exists(dir.path / (id + ".jsonl")));
    SessionStore again(bank, dir.path);
    auto s = again.get(id);
    CHECK(s.answered() == 20);
    CHECK(s.next_trial() == 20u);
    for (std::size_t i = 20; i < kTotalTrials; ++i) again.answer(id, i, wrong_answer(Mode::Paired, s.trials()[i].truth), 1.0);
    CHECK(confusion_score(again.get(id)) == doctest::Approx(70.0));
    CHECK(confusion_score(replay_file(dir.path / (id + ".jsonl"))) == doctest::Approx(70.0));
    // A smaller bank cannot host the logged sessions.
    CHECK_THROWS_AS(SessionStore(make_bank(10, 10), dir.path), InvalidArgument);
}

TEST_CASE("image bank round trip through PNG directories") {
    TempDir dir("octgan_study_bank");
    const auto bank = make_bank(3, 2);
    bank.save(dir.path);
    const auto back = ImageBank::load(dir.path);
    REQUIRE(back.real.size() == 3);
    REQUIRE(back.generated.size() == 2);
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t k = 0; k < bank.real[i].size(); ++k)
            CHECK(std::abs(back.real[i].values()[k] - bank.real[i].values()[k]) < 1.0 / 65535.0 + 1e-12);
}

TEST_CASE("HTTP: full paired session, 21 wrong answers -> 42%") {
    SessionStore store(make_bank(60, 60));
    RunningServer rs(store);
    httplib::Client cli("127.0.0.1", rs.port);

    const auto created = cli.Post("/sessions", json{{"mode", "paired"}, {"seed", 4}}.dump(), "application/json");
    REQUIRE(created);
    CHECK(created->status == 201);
    const auto info = json::parse(created->body);
    const std::string id = info.at("session_id");
    CHECK(info.at("practice_trials") == 5);
    CHECK(info.at("test_trials") == 50);
    CHECK(info.at("display_seconds") == 2.0);
    const auto truth = store.get(id);  // test-side oracle only

    CHECK(cli.Get("/sessions/" + id + "/score")->status == 409);

    std::size_t wrong = 0, practice_seen = 0;
    for (std::size_t k = 0; k < kTotalTrials; ++k) {
        const auto next = cli.Get("/sessions/" + id + "/trials/next");
        REQUIRE(next);
        REQUIRE(next->status == 200);
        const auto p = json::parse(next->body);
        REQUIRE(p.at("trial_index") == k);
        CHECK(p.at("images").size() == 2);
        CHECK(p.at("progress").at("answered") == k);
        const bool practice = p.at("practice");
        practice_seen += practice;
        if (!practice) {
            // Payload inspection: nothing in the raw text may reveal the real side.
            for (const char* word : {"truth", "correct", "real", "generated"}) {
                CHECK(next->body.find(word) == std::string::npos);
            }
        }
        const auto png = cli.Get(p.at("images")[0].get<std::string>());
        REQUIRE(png);
        CHECK(png->status == 200);
        CHECK(png->get_header_value("Content-Type") == "image/png");
        CHECK(png->body.substr(1, 3) == "PNG");

        const auto& tr = truth.trials()[k];
        const bool miss = !practice && wrong < 21;
        wrong += miss;
        const auto ans = cli.Post("/sessions/" + id + "/answers",
                                  json{{"trial_index", k},
                                       {"answer", miss ? wrong_answer(Mode::Paired, tr.truth) : tr.truth},
                                       {"response_time_ms", k == 10 ? 2500.0 : 1200.0}}
                                      .dump(),
                                  "application/json");
        REQUIRE(ans);
        CHECK(ans->status == 201);
        const auto a = json::parse(ans->body);
        CHECK(a.at("late") == (k == 10));
        if (practice) {
            CHECK(a.at("truth") == tr.truth);
        } else {
            CHECK_FALSE(a.contains("truth"));
            CHECK_FALSE(a.contains("correct"));
        }
        if (k == kTotalTrials - 2) CHECK(cli.Get("/sessions/" + id + "/score")->status == 409);
    }
    CHECK(practice_seen == 5);
    const auto done = body_of(cli.Get("/sessions/" + id + "/trials/next"));
    CHECK(done.at("complete") == true);

    const auto score = cli.Get("/sessions/" + id + "/score");
    REQUIRE(score);
    CHECK(score->status == 200);
    const auto sc = json::parse(score->body);
    CHECK(sc.at("confusion_percent").get<double>() == doctest::Approx(42.0));
    CHECK(sc.at("incorrect") == 21);
    CHECK(sc.at("late_answers") == 1);
}

TEST_CASE("HTTP: unpaired test payloads are indistinguishable apart from position") {
    SessionStore store(make_bank(30, 30));
    RunningServer rs(store);
    httplib::Client cli("127.0.0.1", rs.port);
    const auto id = body_of(cli.Post("/sessions", R"({"mode":"unpaired","seed":12})", "application/json"))
                        .at("session_id")
                        .get<std::string>();
    std::optional<json> reference;
    for (std::size_t k = 0; k < kTotalTrials; ++k) {
        auto p = body_of(cli.Get("/sessions/" + id + "/trials/next"));
        CHECK(p.at("images").size() == 1);
        if (!p.at("practice")) {
            // Strip the fields that legitimately change from trial to trial.
            p.erase("trial_index");
            p.erase("progress");
            p.erase("images");
            if (!reference) reference = p;
            CHECK(p == *reference);
        }
        cli.Post("/sessions/" + id + "/answers", json{{"trial_index", k}, {"answer", "real"}, {"response_time_ms", 100}}.dump(),
                 "application/json");
    }
    const auto sc = body_of(cli.Get("/sessions/" + id + "/score"));
    // Answering "real" throughout is wrong exactly on the 25 generated test images.
    CHECK(sc.at("confusion_percent").get<double>() == doctest::Approx(50.0));
}

TEST_CASE("HTTP: error statuses") {
    SessionStore store(make_bank(60, 60));
    RunningServer rs(store);
    httplib::Client cli("127.0.0.1", rs.port);
    const auto id = body_of(cli.Post("/sessions", R"({"mode":"paired","seed":1})", "application/json"))
                        .at("session_id")
                        .get<std::string>();
    auto post_answer = [&](const std::string& body) { return cli.Post("/sessions/" + id + "/answers", body, "application/json"); };

    CHECK(post_answer(R"({"trial_index":12,"answer":"left","response_time_ms":500})")->status == 201);
    const auto dup = post_answer(R"({"trial_index":12,"answer":"right","response_time_ms":400})");
    CHECK(dup->status == 409);
    CHECK(store.get(id).records()[12]->answer == "left");
    CHECK(post_answer(R"({"trial_index":99,"answer":"left","response_time_ms":500})")->status == 404);
    CHECK(post_answer(R"({"trial_index":3,"answer":"maybe","response_time_ms":500})")->status == 400);
    CHECK(post_answer(R"({"trial_index":3})")->status == 400);
    CHECK(post_answer("not json")->status == 400);
    CHECK(cli.Get("/sessions/0123abcd/trials/next")->status == 404);
    CHECK(cli.Get("/sessions/" + id + "/trials/3/images/2.png")->status == 404);
    CHECK(cli.Post("/sessions", R"({"mode":"sideways"})", "application/json")->status == 400);

    SessionStore small(make_bank(10, 10));
    RunningServer rs2(small);
    httplib::Client cli2("127.0.0.1", rs2.port);
    CHECK(cli2.Post("/sessions", R"({"mode":"paired"})", "application/json")->status == 422);
}

TEST_CASE("HTTP: concurrent sessions stay independent") {
    SessionStore store(make_bank(60, 60));
    RunningServer rs(store);
    constexpr int kReaders = 4;
    std::vector<double> scores(kReaders, -1.0);
    std::vector<std::thread> readers;
    for (int r = 0; r < kReaders; ++r) {
        readers.emplace_back([&, r] {
            httplib::Client cli("127.0.0.1", rs.port);
            const auto created = cli.Post("/sessions", json{{"mode", "paired"}, {"seed", r}}.dump(), "application/json");
            const std::string id = json::parse(created->body).at("session_id");
            const auto plan = store.get(id);
            for (std::size_t k = 0; k < kTotalTrials; ++k) {
                const auto& t = plan.trials()[k];
                const bool miss = !t.practice && k - kPracticeTrials < static_cast<std::size_t>(5 * r);
                cli.Post("/sessions/" + id + "/answers",
                         json{{"trial_index", k}, {"answer", miss ? wrong_answer(Mode::Paired, t.truth) : t.truth},
                              {"response_time_ms", 300}}
                             .dump(),
                         "application/json");
            }
            scores[r] = json::parse(cli.Get("/sessions/" + id + "/score")->body).at("confusion_percent");
        });
    }
    for (auto& t : readers) t.join();
    for (int r = 0; r < kReaders; ++r) CHECK(scores[r] == doctest::Approx(10.0 * r));
    CHECK(store.size() == kReaders);
}
