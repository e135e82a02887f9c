#include "octgan/study_server.hpp"

#include <cmath>

#include <httplib.h>

namespace octgan::study {

namespace {

void send_json(httplib::Response& res, int status, const nlohmann::json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

int status_for(ErrorCode code) {
    switch (code) {
        case ErrorCode::UnknownSession:
        case ErrorCode::UnknownTrial: return 404;
        case ErrorCode::DoubleAnswer:
        case ErrorCode::Incomplete: return 409;
        case ErrorCode::InvalidAnswer: return 400;
        case ErrorCode::InsufficientImages: return 422;
    }
    return 500;
}

// Runs a handler, turning exceptions into JSON error bodies.
template <typename F>
httplib::Server::Handler guarded(F f) {
    return [f](const httplib::Request& req, httplib::Response& res) {
        try {
            f(req, res);
        } catch (const StudyError& e) {
            send_json(res, status_for(e.code), {{"error", e.what()}});
        } catch (const nlohmann::json::exception& e) {
            send_json(res, 400, {{"error", std::string("malformed request: ") + e.what()}});
        } catch (const InvalidArgument& e) {
            send_json(res, 400, {{"error", e.what()}});
        } catch (const std::exception& e) {
            send_json(res, 500, {{"error", e.what()}});
        }
    };
}

std::size_t parse_index(const std::string& s) {
    try {
        std::size_t used = 0;
        const auto v = std::stoull(s, &used);
        if (used == s.size()) return static_cast<std::size_t>(v);
    } catch (const std::exception&) {
    }
    throw StudyError(ErrorCode::UnknownTrial, "bad trial index '" + s + "'");
}

nlohmann::json progress(const StudySession& s) {
    return {{"answered", s.answered()}, {"total", kTotalTrials}};
}

std::string prefix(const StudySession& s) { return "/sessions/" + s.id(); }

}  // namespace

StudyServer::StudyServer(SessionStore& store) : store_(store), server_(std::make_unique<httplib::Server>()) {
    auto& srv = *server_;
    srv.set_default_headers({{"Access-Control-Allow-Origin", "*"}, {"Cache-Control", "no-store"}});
    srv.Options(R"(.*)", [](const httplib::Request&, httplib::Response& res) {
        res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
        res.set_header("Access-Control-Allow-Headers", "Content-Type");
        res.status = 204;
    });

    srv.Post("/sessions", guarded([this](const httplib::Request& req, httplib::Response& res) {
        const auto body = req.body.empty() ? nlohmann::json::object() : nlohmann::json::parse(req.body);
        const Mode mode = parse_mode(body.value("mode", std::string("paired")));
        const auto seed = body.value("seed", std::uint64_t{0});
        const auto s = store_.create(mode, seed);
        send_json(res, 201, {{"session_id", s.id()},
                             {"mode", to_string(s.mode())},
                             {"seed", s.seed()},
                             {"display_seconds", s.display_seconds()},
                             {"practice_trials", kPracticeTrials},
                             {"test_trials", kTestTrials},
                             {"total_trials", kTotalTrials}});
    }));

    srv.Get(R"(/sessions/([0-9a-f]+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
        const auto s = store_.get(req.matches[1]);
        nlohmann::json body = {{"session_id", s.id()},
                               {"mode", to_string(s.mode())},
                               {"display_seconds", s.display_seconds()},
                               {"progress", progress(s)},
                               {"complete", s.complete()}};
        if (const auto next = s.next_trial()) body["next_trial"] = *next;
        send_json(res, 200, body);
    }));

    srv.Get(R"(/sessions/([0-9a-f]+)/trials/next)", guarded([this](const httplib::Request& req, httplib::Response& res) {
        const auto s = store_.get(req.matches[1]);
        const auto next = s.next_trial();
        if (!next) {
            send_json(res, 200, {{"complete", true}, {"progress", progress(s)}});
            return;
        }
        auto body = trial_payload(s, *next, prefix(s));
        body["complete"] = false;
        send_json(res, 200, body);
    }));

    srv.Get(R"(/sessions/([0-9a-f]+)/trials/(\d+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
        const auto s = store_.get(req.matches[1]);
        send_json(res, 200, trial_payload(s, parse_index(req.matches[2]), prefix(s)));
    }));

    srv.Get(R"(/sessions/([0-9a-f]+)/trials/(\d+)/images/(\d+)\.png)",
            guarded([this](const httplib::Request& req, httplib::Response& res) {
                const auto png = store_.render_png(req.matches[1], parse_index(req.matches[2]), parse_index(req.matches[3]));
                res.status = 200;
                res.set_content(reinterpret_cast<const char*>(png.data()), png.size(), "image/png");
            }));

    srv.Post(R"(/sessions/([0-9a-f]+)/answers)", guarded([this](const httplib::Request& req, httplib::Response& res) {
        const auto body = nlohmann::json::parse(req.body);
        const auto [rec, s] = store_.answer(req.matches[1], body.at("trial_index").get<std::size_t>(),
                                            body.at("answer").get<std::string>(),
                                            body.at("response_time_ms").get<double>());
        send_json(res, 201, answer_payload(s, rec));
    }));

    srv.Get(R"(/sessions/([0-9a-f]+)/score)", guarded([this](const httplib::Request& req, httplib::Response& res) {
        const auto s = store_.get(req.matches[1]);
        if (s.answered_tests() < kTestTrials) {
            send_json(res, 409, {{"error", "session incomplete"},
                                 {"answered_tests", s.answered_tests()},
                                 {"test_trials", kTestTrials}});
            return;
        }
        std::size_t late = 0;
        for (std::size_t i = kPracticeTrials; i < kTotalTrials; ++i) late += s.records()[i]->late;
        const double score = confusion_score(s);
        send_json(res, 200, {{"session_id", s.id()},
                             {"mode", to_string(s.mode())},
                             {"confusion_percent", score},
                             {"incorrect", static_cast<std::size_t>(std::lround(score * kTestTrials / 100.0))},
                             {"test_trials", kTestTrials},
                             {"late_answers", late}});
    }));
}

StudyServer::~StudyServer() { stop(); }

int StudyServer::bind(const std::string& host, int port) {
    if (port == 0) {
        const int p = server_->bind_to_any_port(host);
        if (p < 0) throw Error("cannot bind " + host);
        return p;
    }
    if (!server_->bind_to_port(host, port)) throw Error("cannot bind " + host + ":" + std::to_string(port));
    return port;
}

void StudyServer::serve() { server_->listen_after_bind(); }

void StudyServer::stop() {
    if (server_) server_->stop();
}

}  // namespace octgan::study
