#include "doctest.h"

#include <atomic>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include "httplib.h"

#include "keed/fetch.hpp"

using namespace keed;
namespace fs = std::filesystem;

namespace {

struct TestServer {
    httplib::Server server;
    std::thread thread;
    int port = 0;
    std::atomic<int> hits{0};

    TestServer() {
        server.Get("/db/good.txt", [this](const httplib::Request&, httplib::Response& res) {
            ++hits;
            res.set_content("hello dataset\n", "text/plain");
        });
        server.Get("/db/bad.txt", [this](const httplib::Request&, httplib::Response& res) {
            ++hits;
            res.set_content("tampered content\n", "text/plain");
        });
        port = server.bind_to_any_port("127.0.0.1");
        thread = std::thread([this] { server.listen_after_bind(); });
        server.wait_until_ready();
    }
    ~TestServer() {
        server.stop();
        thread.join();
    }
};

fs::path fresh_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("keed_fetch_" + name);
    fs::remove_all(dir);
    return dir;
}

// sha256 of "hello dataset\n"
const char* kGoodDigest = "f2bd23439e98c23b039f670d451399a8546d40b1c30acd686cbfd1e6348237c3";

}  // namespace

TEST_CASE("fetch downloads, verifies, and is idempotent") {
    if (fetch::sha256_hex({}).empty()) return;  // built without checksum support
    TestServer srv;
    fetch::FetchSpec spec;
    spec.base_url = "http://127.0.0.1:" + std::to_string(srv.port) + "/db";
    spec.files = {"good.txt"};
    spec.sha256["good.txt"] = fetch::sha256_hex(
        std::vector<std::uint8_t>{'h', 'e', 'l', 'l', 'o', ' ', 'd', 'a', 't', 'a', 's', 'e',
                                  't', '\n'});
    CHECK(spec.sha256["good.txt"] == kGoodDigest);

    const fs::path dir = fresh_dir("ok");
    std::ostringstream log;
    CHECK(fetch::fetch_dataset(spec, dir.string(), log) == 0);
    CHECK(fs::exists(dir / "good.txt"));
    CHECK(srv.hits == 1);

    // populated + verified: no further requests
    CHECK(fetch::fetch_dataset(spec, dir.string(), log) == 0);
    CHECK(srv.hits == 1);
}

TEST_CASE("fetch removes files that fail their checksum and exits 3") {
    if (fetch::sha256_hex({}).empty()) return;
    TestServer srv;
    fetch::FetchSpec spec;
    spec.base_url = "http://127.0.0.1:" + std::to_string(srv.port) + "/db";
    spec.files = {"bad.txt"};
    spec.sha256["bad.txt"] = kGoodDigest;  // will not match the tampered body

    const fs::path dir = fresh_dir("bad");
    std::ostringstream log;
    CHECK(fetch::fetch_dataset(spec, dir.string(), log) == 3);
    CHECK_FALSE(fs::exists(dir / "bad.txt"));
    CHECK_FALSE(fs::exists(dir / "bad.txt.part"));
}

TEST_CASE("fetch reports missing files as a network failure without partials") {
    TestServer srv;
    fetch::FetchSpec spec;
    spec.base_url = "http://127.0.0.1:" + std::to_string(srv.port) + "/db";
    spec.files = {"missing.txt"};

    const fs::path dir = fresh_dir("missing");
    std::ostringstream log;
    CHECK(fetch::fetch_dataset(spec, dir.string(), log) == 3);
    CHECK(fs::is_empty(dir));
}

TEST_CASE("fetch with unreachable host fails cleanly") {
    fetch::FetchSpec spec;
    spec.base_url = "http://127.0.0.1:1/db";  // nothing listens here
    spec.files = {"x"};
    const fs::path dir = fresh_dir("unreachable");
    std::ostringstream log;
    CHECK(fetch::fetch_dataset(spec, dir.string(), log) == 3);
}

TEST_CASE("existing unverified files are accepted without checksums") {
    fetch::FetchSpec spec;
    spec.base_url = "http://127.0.0.1:1/db";
    spec.files = {"present.txt"};
    const fs::path dir = fresh_dir("present");
    fs::create_directories(dir);
    std::ofstream(dir / "present.txt") << "already here";
    std::ostringstream log;
    CHECK(fetch::fetch_dataset(spec, dir.string(), log) == 0);  // no network touched
}
