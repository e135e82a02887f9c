#pragma once

// HTTP+JSON front end of the study service. Payload schemas are listed in
// docs/study_api.md.

#include <memory>
#include <string>

#include "octgan/study.hpp"

namespace httplib {
class Server;
}

namespace octgan::study {

class StudyServer {
public:
    explicit StudyServer(SessionStore& store);
    ~StudyServer();
    StudyServer(const StudyServer&) = delete;
    StudyServer& operator=(const StudyServer&) = delete;

    // Binds `host`; port 0 picks a free port. Returns the bound port.
    int bind(const std::string& host, int port);
    // Blocks serving requests until stop().
    void serve();
    void stop();

private:
    SessionStore& store_;
    std::unique_ptr<httplib::Server> server_;
};

}  // namespace octgan::study
